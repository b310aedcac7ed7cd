"""Pure-numpy pairwise kernel sums, chunked to bound peak memory.

Fallback backend with the same signatures as the compiled module.
"""
import numpy as np

_CHUNK = 256


def cauchy_sum(tau, wf, targets):
    """out[t] = sum_q wf[q] / (tau[q] - targets[t])"""
    out = np.empty(targets.shape[0], dtype=np.complex128)
    for a in range(0, targets.shape[0], _CHUNK):
        blk = targets[a:a + _CHUNK]
        out[a:a + _CHUNK] = (wf / (tau - blk[:, None])).sum(axis=1)
    return out


def star_sum(tau, wf, targets):
    """out[t] = sum_q wf[q] / (1 - targets[t]*conj(tau[q]))"""
    taub = np.conj(tau)
    out = np.empty(targets.shape[0], dtype=np.complex128)
    for a in range(0, targets.shape[0], _CHUNK):
        blk = targets[a:a + _CHUNK]
        out[a:a + _CHUNK] = (wf / (1.0 - blk[:, None] * taub)).sum(axis=1)
    return out
