#!/usr/bin/env python3
"""Benchmark batched wavelet-tree queries.

Builds a tree over a uniformly random text and measures batched
access/rank/select throughput across chunk sizes and worker counts, plus
the effect of sorting rank/select queries by symbol.

    python scripts/bench_tree_queries.py --n 5e6 --sigma 256 --queries 1e6
"""

import argparse
import os
import time

import numpy as np

from wtindex import QueryBatch, construct, run_batch, sort_queries_by_symbol
from wtindex.batch import BatchRunner


def build_queries(tree, kind, num, rng):
    if kind == "access":
        return QueryBatch("access", rng.integers(0, tree.n, num))
    occ = np.diff(tree.cum_hist)
    if kind == "rank":
        symbols = tree.alphabet.sorted_symbols[
            rng.integers(0, tree.sigma, num)].astype(np.int64)
        return QueryBatch("rank", rng.integers(0, tree.n + 1, num), symbols)
    present = np.flatnonzero(occ > 0)
    ids = present[rng.integers(0, len(present), num)]
    ks = 1 + np.floor(rng.random(num) * occ[ids]).astype(np.int64)
    return QueryBatch("select", ks,
                      tree.alphabet.sorted_symbols[ids].astype(np.int64))


def median_qps(tree, batch, workers, iterations=5):
    runner = BatchRunner(tree, batch.chunk_size, workers)
    times = []
    for _ in range(iterations):
        t0 = time.perf_counter()
        runner.run(batch)
        times.append(time.perf_counter() - t0)
    return len(batch) / sorted(times)[len(times) // 2]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=float, default=5e6)
    ap.add_argument("--sigma", type=int, default=256)
    ap.add_argument("--queries", type=float, default=1e6)
    ap.add_argument("--chunks", type=int, nargs="+",
                    default=[4096, 65536, 1 << 20])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    n, num = int(args.n), int(args.queries)
    dtype = np.uint16 if args.sigma > 256 else np.uint8
    text = rng.integers(0, args.sigma, n).astype(dtype)
    t0 = time.perf_counter()
    tree = construct(text)
    print(f"built n={n} sigma={tree.sigma} levels={tree.num_levels} "
          f"in {time.perf_counter() - t0:.2f}s")

    workers_sweep = sorted({1, 2, os.cpu_count() or 1})
    print(f"\n{'kind':>7} {'chunk':>9} " +
          " ".join(f"w={w:<2} Mq/s" for w in workers_sweep))
    for kind in ("access", "rank", "select"):
        batch = build_queries(tree, kind, num, rng)
        for chunk in args.chunks:
            batch.chunk_size = chunk
            cells = [f"{median_qps(tree, batch, w) / 1e6:>9.2f}"
                     for w in workers_sweep]
            print(f"{kind:>7} {chunk:>9} " + " ".join(cells))

    print("\nsorting rank/select batches by symbol (chunk=65536, 1 worker):")
    for kind in ("rank", "select"):
        batch = build_queries(tree, kind, num, rng)
        batch.chunk_size = 65536
        plain = median_qps(tree, batch, 1)
        permuted, inverse = sort_queries_by_symbol(batch)
        t0 = time.perf_counter()
        run_batch(tree, permuted)[inverse]
        sorted_qps = len(batch) / (time.perf_counter() - t0)
        print(f"{kind:>7}: unsorted {plain / 1e6:.2f} Mq/s, "
              f"sorted {sorted_qps / 1e6:.2f} Mq/s "
              f"(sort time excluded)")


if __name__ == "__main__":
    main()
