"""Kernel backend selection and cross-backend agreement."""
import os
import subprocess
import sys

import numpy as np
import pytest

from bishopdisc import _backend, _kernels_np
from bishopdisc import operators as ops
from bishopdisc.grid import DiscFn, DiscGrid


def _kernel_inputs(seed, n_src=600, n_tgt=300):
    rng = np.random.default_rng(seed)
    r = 0.2 + 0.8 * rng.random(n_src)
    tau = r * np.exp(2j * np.pi * rng.random(n_src))
    wf = rng.standard_normal(n_src) + 1j * rng.standard_normal(n_src)
    t = 0.95 * np.sqrt(rng.random(n_tgt)) * np.exp(2j * np.pi * rng.random(n_tgt))
    return tau, wf, t.astype(np.complex128)


def test_active_backend_is_listed():
    name = _backend.get_backend()
    assert name in ("numpy", "compiled")
    avail = dict(_backend.backends())
    assert name in avail
    assert _backend.cauchy_sum is avail[name].cauchy_sum
    assert _backend.star_sum is avail[name].star_sum


def test_compiled_backend_importable():
    # the build always produces the extension; numpy is the runtime
    # fallback, not a license to skip compiling
    avail = dict(_backend.backends())
    assert "numpy" in avail
    assert "compiled" in avail


def test_kernels_agree_across_backends():
    tau, wf, t = _kernel_inputs(11)
    ref_c = _kernels_np.cauchy_sum(tau, wf, t)
    ref_s = _kernels_np.star_sum(tau, wf, t)
    scale_c = np.abs(ref_c).max()
    scale_s = np.abs(ref_s).max()
    for name, mod in _backend.backends():
        got_c = mod.cauchy_sum(tau, wf, t)
        got_s = mod.star_sum(tau, wf, t)
        assert np.abs(got_c - ref_c).max() < 1e-12 * scale_c, name
        assert np.abs(got_s - ref_s).max() < 1e-12 * scale_s, name


@pytest.mark.parametrize("n_tgt", [7, 255, 256, 257])
def test_kernels_handle_chunk_edges(n_tgt):
    tau, wf, t = _kernel_inputs(5, n_src=50, n_tgt=n_tgt)
    want_c = np.array([sum(wf / (tau - ti)) for ti in t])
    want_s = np.array([sum(wf / (1.0 - ti * np.conj(tau))) for ti in t])
    for name, mod in _backend.backends():
        assert np.abs(mod.cauchy_sum(tau, wf, t) - want_c).max() < 1e-10, name
        assert np.abs(mod.star_sum(tau, wf, t) - want_s).max() < 1e-10, name


def test_operator_output_backend_independent(monkeypatch):
    # operators look the kernel up on the module at call time, so a
    # swapped binding reroutes the scattered transform in-process
    g = DiscGrid(16, 32)
    f = DiscFn.from_callable(g, lambda z: np.exp(z) + 0.3 * np.conj(z) ** 2)
    rng = np.random.default_rng(3)
    t = 0.9 * np.sqrt(rng.random(40)) * np.exp(2j * np.pi * rng.random(40))
    results = {}
    for name, mod in _backend.backends():
        monkeypatch.setattr(_backend, "cauchy_sum", mod.cauchy_sum)
        results[name] = ops.cauchy_green(f, targets=t)
    names = sorted(results)
    base = results[names[0]]
    for name in names[1:]:
        assert np.abs(results[name] - base).max() < 1e-12


_CHILD = """
import numpy as np
import bishopdisc as bd
from bishopdisc.grid import DiscFn, DiscGrid
from bishopdisc import operators as ops
assert bd.get_backend() == {want!r}, bd.get_backend()
g = DiscGrid(16, 32)
f = DiscFn.from_callable(g, lambda z: np.ones_like(z))
t = np.array([0.3 + 0.1j, -0.5j, 0.82 + 0j])
v = ops.cauchy_green(f, targets=t)
assert np.abs(v - np.conj(t)).max() < 1e-10
print("ok")
"""


def _run_child(want, force):
    env = dict(os.environ)
    env.pop("BISHOPDISC_FORCE_NUMPY", None)
    if force:
        env["BISHOPDISC_FORCE_NUMPY"] = "1"
    out = subprocess.run([sys.executable, "-c", _CHILD.format(want=want)],
                         env=env, capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "ok" in out.stdout


def test_forced_numpy_selection_in_subprocess():
    _run_child("numpy", force=True)


def test_default_selection_prefers_compiled():
    _run_child("compiled", force=False)
