"""Benchmark the pairwise kernel backends against each other.

Times the raw kernels (cauchy_sum, star_sum) over a range of source
sizes, then one end-to-end scattered transform with the kernel binding
swapped per backend.  Each timed row also reports the max relative
difference against the numpy backend, so a fast-but-wrong kernel shows
up immediately.

Run from the repo root after an editable install:

    python3 bench.py
    python3 bench.py --sizes 400,1600,6400 --repeats 7
"""
import argparse
import timeit

import numpy as np

from bishopdisc import _backend
from bishopdisc import operators as ops
from bishopdisc.grid import DiscFn, DiscGrid


def kernel_inputs(seed, n_src, n_tgt):
    rng = np.random.default_rng(seed)
    r = 0.2 + 0.8 * rng.random(n_src)
    tau = r * np.exp(2j * np.pi * rng.random(n_src))
    wf = rng.standard_normal(n_src) + 1j * rng.standard_normal(n_src)
    t = 0.95 * np.sqrt(rng.random(n_tgt)) * np.exp(2j * np.pi * rng.random(n_tgt))
    return tau, wf, t.astype(np.complex128)


def best_of(fn, repeats):
    fn()     # warm up
    return min(timeit.repeat(fn, number=1, repeat=repeats))


def rel_diff(a, b):
    scale = max(np.abs(b).max(), 1e-300)
    return np.abs(a - b).max() / scale


def bench_kernels(sizes, repeats):
    avail = _backend.backends()
    names = [n for n, _ in avail]
    print("raw kernels")
    header = f"{'kernel':<12}{'n_src':>8}{'n_tgt':>8}"
    for n in names:
        header += f"{n + ' [ms]':>16}"
    header += f"{'speedup':>10}{'maxrel':>12}"
    print(header)
    for n_src in sizes:
        n_tgt = max(n_src // 2, 1)
        tau, wf, t = kernel_inputs(0, n_src, n_tgt)
        for kernel in ("cauchy_sum", "star_sum"):
            times = {}
            outs = {}
            for name, mod in avail:
                fn = getattr(mod, kernel)
                times[name] = best_of(lambda: fn(tau, wf, t), repeats)
                outs[name] = fn(tau, wf, t)
            row = f"{kernel:<12}{n_src:>8}{n_tgt:>8}"
            for n in names:
                row += f"{1e3 * times[n]:>16.3f}"
            if "compiled" in times:
                row += f"{times['numpy'] / times['compiled']:>10.2f}"
                row += f"{rel_diff(outs['compiled'], outs['numpy']):>12.2e}"
            else:
                row += f"{'n/a':>10}{'n/a':>12}"
            print(row)


def bench_transform(repeats):
    g = DiscGrid(32, 64)
    f = DiscFn.from_callable(g, lambda z: np.exp(z) + 0.3 * np.conj(z) ** 2)
    rng = np.random.default_rng(1)
    n_tgt = 2000
    t = 0.9 * np.sqrt(rng.random(n_tgt)) * np.exp(2j * np.pi * rng.random(n_tgt))
    ops.get_transform(g)     # build cached tables outside the timer
    saved = _backend.cauchy_sum
    times = {}
    outs = {}
    try:
        for name, mod in _backend.backends():
            _backend.cauchy_sum = mod.cauchy_sum
            times[name] = best_of(lambda: ops.cauchy_green(f, targets=t), repeats)
            outs[name] = ops.cauchy_green(f, targets=t)
    finally:
        _backend.cauchy_sum = saved
    print()
    print(f"end-to-end scattered transform (grid 32x64, {n_tgt} targets)")
    for name in times:
        print(f"  {name:<10}{1e3 * times[name]:>10.3f} ms")
    if "compiled" in times:
        print(f"  speedup   {times['numpy'] / times['compiled']:>10.2f}x"
              f"   maxrel {rel_diff(outs['compiled'], outs['numpy']):.2e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="200,800,3200",
                    help="comma-separated source counts")
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats, best is reported")
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"active backend: {_backend.get_backend()}")
    bench_kernels(sizes, args.repeats)
    bench_transform(args.repeats)


if __name__ == "__main__":
    main()
