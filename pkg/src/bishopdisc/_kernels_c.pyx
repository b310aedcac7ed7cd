# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise kernel sums for scattered-target Cauchy-type transforms.

Same signatures as _kernels_np.  Inputs are flat complex128 arrays; wf is
the source value already multiplied by its quadrature weight.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def cauchy_sum(cnp.ndarray[cnp.complex128_t, ndim=1] tau,
               cnp.ndarray[cnp.complex128_t, ndim=1] wf,
               cnp.ndarray[cnp.complex128_t, ndim=1] targets):
    """out[t] = sum_q wf[q] / (tau[q] - targets[t])"""
    cdef Py_ssize_t nq = tau.shape[0]
    cdef Py_ssize_t nt = targets.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(nt, dtype=np.complex128)
    cdef Py_ssize_t t, q
    cdef double complex acc, z
    for t in range(nt):
        z = targets[t]
        acc = 0
        for q in range(nq):
            acc = acc + wf[q] / (tau[q] - z)
        out[t] = acc
    return out


def star_sum(cnp.ndarray[cnp.complex128_t, ndim=1] tau,
             cnp.ndarray[cnp.complex128_t, ndim=1] wf,
             cnp.ndarray[cnp.complex128_t, ndim=1] targets):
    """out[t] = sum_q wf[q] / (1 - targets[t]*conj(tau[q]))"""
    cdef Py_ssize_t nq = tau.shape[0]
    cdef Py_ssize_t nt = targets.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(nt, dtype=np.complex128)
    cdef Py_ssize_t t, q
    cdef double complex acc, z, tb
    for t in range(nt):
        z = targets[t]
        acc = 0
        for q in range(nq):
            tb = tau[q].real - 1j * tau[q].imag
            acc = acc + wf[q] / (1.0 - z * tb)
        out[t] = acc
    return out
