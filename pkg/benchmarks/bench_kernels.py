#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times each hot kernel on random cluster distributions of a few sizes and
prints ns/call per backend plus the speedup. Run after an editable install:

    python3 benchmarks/bench_kernels.py [--sizes 3,10,64] [--repeat 20000]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from coentropy.kernels import available_backends


def _inputs(n_clusters: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.full(n_clusters, 0.7))
    q = rng.dirichlet(np.full(n_clusters, 0.7))
    stack = np.ascontiguousarray(
        np.stack([rng.dirichlet(np.ones(n_clusters)) for _ in range(4)])
    )
    w = rng.dirichlet(np.ones(4))
    for arr in (p, q, stack, w):
        arr.flags.writeable = False
    return p, q, stack, w


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="3,10,64",
                        help="comma list of cluster counts")
    parser.add_argument("--repeat", type=int, default=20000,
                        help="calls per timing")
    args = parser.parse_args()

    backends = available_backends()
    if "c" not in backends:
        print("note: compiled backend not built; timing pure Python only")
    sizes = [int(s) for s in args.sizes.split(",")]

    header = f"{'kernel':<10} {'l':>4}" + "".join(
        f" {name + ' ns/call':>14}" for name in backends
    )
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)
    print("-" * len(header))

    for n in sizes:
        p, q, stack, w = _inputs(n)
        calls = {
            "entropy": lambda impl: impl.entropy(p),
            "kl": lambda impl: impl.kl(p, q),
            "js": lambda impl: impl.js(p, q),
            "hellinger": lambda impl: impl.hellinger(p, q),
            "tv": lambda impl: impl.tv(p, q),
            "mixture": lambda impl: impl.mixture(stack, w),
        }
        for name, call in calls.items():
            per_call = {}
            for bname, impl in backends.items():
                total = timeit.timeit(lambda: call(impl), number=args.repeat)
                per_call[bname] = total / args.repeat * 1e9
            line = f"{name:<10} {n:>4}" + "".join(
                f" {per_call[bname]:>14.0f}" for bname in backends
            )
            if len(per_call) == 2:
                line += f" {per_call['py'] / per_call['c']:>8.1f}x"
            print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
