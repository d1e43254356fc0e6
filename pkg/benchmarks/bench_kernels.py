"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Inputs are fixed-seed random strings and cost matrices sized like the
pipeline's real workload (subtitle lines, ASR context windows, per-frame
detection counts), plus one larger matrix.
"""
from __future__ import annotations

import argparse
import random
import timeit
from array import array

import numpy as np

from subfuse import _pykernels

try:
    from subfuse import _ckernels
except ImportError:
    _ckernels = None


def _codes(rng: random.Random, n: int, alphabet: int = 40) -> array:
    return array("q", (rng.randrange(alphabet) for _ in range(n)))


def workloads():
    rng = random.Random(0)
    short = [(_codes(rng, 14), _codes(rng, 14)) for _ in range(200)]
    window = [(_codes(rng, 14), _codes(rng, 60)) for _ in range(50)]
    npr = np.random.default_rng(0)
    small = [npr.random((8, 8)) for _ in range(200)]
    big = npr.random((120, 120))
    return {
        "edit_distance 200 x (14, 14)": lambda k: [k.edit_distance(a, b) for a, b in short],
        "lcs_length 200 x (14, 14)": lambda k: [k.lcs_length(a, b) for a, b in short],
        "best_window 50 x (14 in 60)": lambda k: [k.best_window(a, b) for a, b in window],
        "hungarian 200 x 8x8": lambda k: [k.hungarian(c) for c in small],
        "hungarian 1 x 120x120": lambda k: k.hungarian(big),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the Python backend is available")
    print(f"{'workload':<30} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, fn in workloads().items():
        py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:<30} {py:>10.2f} {'-':>10} {'-':>8}")
            continue
        # same answers first, then timing
        assert _equal(fn(_pykernels), fn(_ckernels)), name
        cy = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<30} {py:>10.2f} {cy:>10.2f} {py / cy:>7.1f}x")


def _equal(a, b) -> bool:
    if isinstance(a, list):
        return len(a) == len(b) and all(_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, tuple):
        return all(_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.allclose(np.asarray(a), np.asarray(b))
    return a == b


if __name__ == "__main__":
    main()
