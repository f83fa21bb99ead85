#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Workloads mirror the pseudo-labeling hot path: LCS on character-id
sequences, clipped n-gram overlap, and hashed-count cosine, at the sizes
alignment actually sees (news sentences ~20-60 chars against commentary
~20-80 chars, thousands of pairs per corpus).

Usage:  python benchmarks/bench_kernels.py [--pairs 2000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pressbox import kernels


def make_pairs(rng: np.random.Generator, n_pairs: int):
    pairs = []
    for _ in range(n_pairs):
        la = int(rng.integers(15, 70))
        lb = int(rng.integers(15, 90))
        a = rng.integers(0, 40, size=la).astype(np.int64)
        b = rng.integers(0, 40, size=lb).astype(np.int64)
        pairs.append((a, b))
    return pairs


def bench(label, fn, pairs, repeats=3):
    fn(*pairs[0])  # warm any JIT path
    best = float("inf")
    checksum = 0.0
    for _ in range(repeats):
        start = time.perf_counter()
        acc = 0.0
        for a, b in pairs:
            acc += float(fn(a, b))
        best = min(best, time.perf_counter() - start)
        checksum = acc
    return best, checksum


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=2000)
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    raw_pairs = make_pairs(rng, args.pairs)
    sorted_pairs = [(np.sort(a), np.sort(b)) for a, b in raw_pairs]

    workloads = [
        ("lcs_length", kernels.lcs_length_numpy,
         getattr(kernels, "lcs_length_numba", None), raw_pairs),
        ("clipped_overlap", kernels.clipped_overlap_numpy,
         getattr(kernels, "clipped_overlap_numba", None), sorted_pairs),
        ("sparse_cosine", kernels.sparse_cosine_numpy,
         getattr(kernels, "sparse_cosine_numba", None), sorted_pairs),
    ]

    print(f"active backend: {kernels.BACKEND}   pairs per workload: {args.pairs}")
    print(f"{'kernel':<18} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, np_fn, nb_fn, pairs in workloads:
        np_time, np_sum = bench(f"{name}[numpy]", np_fn, pairs)
        if nb_fn is None:
            print(f"{name:<18} {np_time:>9.3f}s {'n/a':>10} {'':>8}")
            continue
        nb_time, nb_sum = bench(f"{name}[numba]", nb_fn, pairs)
        if abs(np_sum - nb_sum) > 1e-6 * max(1.0, abs(np_sum)):
            raise SystemExit(
                f"{name}: backend disagreement (numpy {np_sum} vs numba {nb_sum})"
            )
        print(
            f"{name:<18} {np_time:>9.3f}s {nb_time:>9.3f}s {np_time / nb_time:>7.1f}x"
        )


if __name__ == "__main__":
    main()
