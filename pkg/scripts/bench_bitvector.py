#!/usr/bin/env python3
"""Benchmark the binary rank/select structure.

Sweeps bit-array sizes, fill rates, and distributions (uniform vs ones
concentrated at the tail), reporting construction time, query throughput,
and measured storage overhead.

    python scripts/bench_bitvector.py --sizes 1e6 1e7 --queries 200000
"""

import argparse
import time

import numpy as np

from wtindex import build_bit_array
from wtindex.rankselect import RankSelectParams, build_index


def make_bits(rng, n, fill_pct, dist):
    if dist == "uniform":
        return (rng.random(n) < fill_pct / 100).astype(np.uint8)
    # concentrate 99% of the ones in the final fill_pct% of positions
    total_ones = n * fill_pct // 100
    tail_start = n - n * fill_pct // 100
    tail_ones = total_ones * 99 // 100
    bits = np.zeros(n, np.uint8)
    tail = rng.choice(n - tail_start, size=min(tail_ones, n - tail_start),
                      replace=False)
    bits[tail_start + tail] = 1
    head = total_ones - tail_ones
    if tail_start and head:
        bits[rng.choice(tail_start, size=min(head, tail_start), replace=False)] = 1
    return bits


def bench(n, fill_pct, dist, num_queries, sample_rate, seed):
    rng = np.random.default_rng(seed)
    bits = make_bits(rng, n, fill_pct, dist)
    ba = build_bit_array([n])
    ba.fill_region(0, bits)
    t0 = time.perf_counter()
    idx = build_index(ba, 0, RankSelectParams(sample_rate=sample_rate))
    build_s = time.perf_counter() - t0

    pos = rng.integers(0, n + 1, num_queries)
    t0 = time.perf_counter()
    idx.rank1_bulk(pos)
    rank_qps = num_queries / (time.perf_counter() - t0)

    select_qps = float("nan")
    if idx.total_ones:
        ks = rng.integers(1, idx.total_ones + 1, num_queries)
        t0 = time.perf_counter()
        idx.select1_bulk(ks)
        select_qps = num_queries / (time.perf_counter() - t0)

    overhead = (idx.rank_support_bytes + idx.select_support_bytes) * 8 * 100 / n
    print(f"{n:>12} {fill_pct:>4}% {dist:>11} {build_s * 1e3:>9.1f} "
          f"{rank_qps / 1e6:>9.2f} {select_qps / 1e6:>10.2f} {overhead:>8.3f}%")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=float, nargs="+", default=[1e6, 1e7, 1e8])
    ap.add_argument("--fills", type=int, nargs="+", default=[10, 50, 90])
    ap.add_argument("--queries", type=int, default=200_000)
    ap.add_argument("--sample-rate", type=int, default=16384)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'bits':>12} {'fill':>5} {'distribution':>11} {'build ms':>9} "
          f"{'rank Mq/s':>9} {'sel1 Mq/s':>10} {'overhead':>9}")
    for size in args.sizes:
        for fill in args.fills:
            for dist in ("uniform", "adversarial"):
                bench(int(size), fill, dist, args.queries,
                      args.sample_rate, args.seed)


if __name__ == "__main__":
    main()
