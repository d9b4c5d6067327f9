"""Compare the compiled kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py --sizes 100 400 --repeat 3

Each kernel is timed on random 1+1 clouds (targets in the future of the
sources) and the two backends are checked to agree before timing.
"""
import argparse
import time

import numpy as np
from scipy.optimize import linear_sum_assignment

from lorentzot import _fallback

try:
    from lorentzot import _ckernels
except ImportError:  # pragma: no cover - depends on build
    _ckernels = None


def _instance(n, seed=0):
    rng = np.random.default_rng(seed)
    X = np.c_[rng.uniform(0, 1, n), rng.uniform(-1, 1, n)]
    Y = np.c_[rng.uniform(3, 4, n), rng.uniform(-1, 1, n)]
    u = rng.normal(size=n)
    C, _ = _fallback.pair_cost(X, Y, 0.5, 1.0, 1e-12)
    # exchange graph of an optimal pairing: no negative cycles, unique distances
    _, perm = linear_sum_assignment(C)
    C = C[:, perm]
    W = C.T - np.diag(C)[:, None]
    np.fill_diagonal(W, np.inf)
    return X, Y, u, W


def _cases(X, Y, u, W):
    return {
        "pair_cost": lambda m: m.pair_cost(X, Y, 0.5, 1.0, 1e-12),
        "inf_convolution": lambda m: m.inf_convolution(u, X, Y, 0.5, 1.0, 1e-12),
        "sup_convolution": lambda m: m.sup_convolution(u, Y, X, 0.5, 1.0, 1e-12),
        "bellman_ford": lambda m: m.bellman_ford(W, 0, 1e-13),
    }


def _best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _agree(name, a, b):
    if name == "bellman_ford":
        # predecessors may differ on ties; distances and the cycle flag may not
        a, b = (a[0], a[2] >= 0), (b[0], b[2] >= 0)
    for x, y in zip(a, b):
        if isinstance(x, np.ndarray):
            if not np.allclose(x, y, rtol=1e-12, atol=1e-12, equal_nan=True):
                return False
        elif x != y:
            return False
    return True


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if _ckernels is None:
        print("compiled kernels not built; only the fallback is available")
    print(f"{'kernel':<16} {'n':>6} {'python [s]':>12} {'cython [s]':>12} {'speedup':>9}")
    for n in args.sizes:
        cases = _cases(*_instance(n))
        for name, call in cases.items():
            t_py = _best_time(lambda: call(_fallback), args.repeat)
            if _ckernels is None:
                print(f"{name:<16} {n:>6} {t_py:>12.5f} {'-':>12} {'-':>9}")
                continue
            if not _agree(name, call(_fallback), call(_ckernels)):
                raise SystemExit(f"backends disagree on {name} at n={n}")
            t_c = _best_time(lambda: call(_ckernels), args.repeat)
            print(f"{name:<16} {n:>6} {t_py:>12.5f} {t_c:>12.5f} {t_py / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
