"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so the ``SNMETRIC_PURE_PYTHON`` switch
does not matter here. Each row reports the best wall time over ``--repeat``
runs and checks that the two backends agree.
"""

import argparse
import timeit

import numpy as np

from snmetric import _kernels_py
from snmetric.changepoint import WbsConfig, draw_intervals
from snmetric.frechet import ObjectSeries, build_prefix

try:
    from snmetric import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def _prefix(n, seed=0):
    x = np.random.default_rng(seed).standard_normal(n)
    x[n // 2 :] *= 1.5
    return build_prefix(ObjectSeries.scalars(x))


def _cases():
    for n in (200, 400, 800):
        p = _prefix(n)
        k_lo, h = int(0.15 * n), int(0.05 * n)
        yield f"cp_curve n={n}", "cp_curve", (p.gram, p.cum_sq, 0, n, k_lo, n - k_lo, h, True)

    n = 500
    p = _prefix(n, seed=1)
    cfg = WbsConfig(M=100)
    iv = draw_intervals(n, cfg.M, cfg.min_len, np.random.default_rng(0))
    s, e = iv[:, 0], iv[:, 1]
    L = e - s
    k_lo = np.floor(L * cfg.eta1 + 1e-9).astype(np.int64)
    h = np.floor(L * cfg.eta2 + 1e-9).astype(np.int64)
    yield f"interval_maxima n={n} M={cfg.M}", "interval_maxima", (p.gram, p.cum_sq, s, e, k_lo, L - k_lo, h, True)

    x = np.random.default_rng(2).standard_normal((20_000, 8))
    yield "kahan_cumsum 20000x8", "kahan_cumsum", (x,)


def _best(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def _agree(a, b):
    if isinstance(a, tuple):
        return all(_agree(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-10, atol=1e-12)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension not available; timing the numpy fallback only")
    print(f"{'kernel':<32}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}  agree")
    for label, name, fargs in _cases():
        t_py = _best(getattr(_kernels_py, name), fargs, args.repeat)
        if _kernels_c is None:
            print(f"{label:<32}{1e3 * t_py:>14.2f}{'-':>14}{'-':>10}  -")
            continue
        fn_c = getattr(_kernels_c, name)
        t_c = _best(fn_c, fargs, args.repeat)
        ok = _agree(getattr(_kernels_py, name)(*fargs), fn_c(*fargs))
        print(f"{label:<32}{1e3 * t_py:>14.2f}{1e3 * t_c:>14.2f}{t_py / t_c:>9.1f}x  {'yes' if ok else 'NO'}")


if __name__ == "__main__":
    main()
