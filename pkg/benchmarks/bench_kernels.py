"""Time the compiled kernels against their pure-Python twins.

Each kernel runs on identical inputs under both backends; outputs are
checked for agreement before any timing is reported.

Usage::

    python benchmarks/bench_kernels.py --n 64 --moves 200000 --repeat 3
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from birkhoff_lab import _kernels_py

try:
    from birkhoff_lab import _kernels
except ImportError:  # extension not built
    _kernels = None


def _cases(n: int, moves: int, pairs: int, proposals: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    u = rng.random((moves, 3))
    X = rng.exponential(size=(pairs, 4))
    Y = rng.exponential(size=(pairs, 4))
    x = rng.random((proposals, 2, 2))
    ones = np.ones(3)
    M = rng.random((n, n))
    return {
        "gibbs_moves": (lambda: np.full((n, n), 1.0 / n), u),
        "compensated_sums": (lambda: M, None),
        "mean_pair_distance": (lambda: X, Y),
        "transport_accept": (lambda: x, (ones, ones)),
    }


def _call(mod, name: str, make, arg):
    fn = getattr(mod, name)
    if name == "gibbs_moves":
        M = make()
        status = fn(M, arg)
        return M, status
    if name == "compensated_sums":
        return fn(make())
    if name == "transport_accept":
        return np.asarray(fn(make(), *arg))
    return fn(make(), arg)


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, (float, int, np.floating)):
        return bool(np.isclose(a, b, rtol=1e-12, atol=0.0))
    return np.allclose(np.asarray(a), np.asarray(b), rtol=1e-12, atol=1e-15)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=64, help="matrix size for the Gibbs and sum kernels")
    parser.add_argument("--moves", type=int, default=100000, help="Gibbs moves per call")
    parser.add_argument("--pairs", type=int, default=1000, help="points per side for the pair distance")
    parser.add_argument("--proposals", type=int, default=200000, help="free blocks per acceptance call")
    parser.add_argument("--repeat", type=int, default=3, help="timing repeats; the best is reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _kernels is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return 1

    cases = _cases(args.n, args.moves, args.pairs, args.proposals, args.seed)
    print(f"{'kernel':<20} {'cython s':>10} {'python s':>10} {'speedup':>9}  agree")
    ok = True
    for name, (make, arg) in cases.items():
        agree = _same(_call(_kernels, name, make, arg), _call(_kernels_py, name, make, arg))
        ok &= agree
        fast = min(timeit.repeat(lambda: _call(_kernels, name, make, arg), number=1, repeat=args.repeat))
        slow = min(timeit.repeat(lambda: _call(_kernels_py, name, make, arg), number=1, repeat=args.repeat))
        print(f"{name:<20} {fast:>10.4f} {slow:>10.4f} {slow / fast:>8.1f}x  {'yes' if agree else 'NO'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
