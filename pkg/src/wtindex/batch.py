"""Order-preserving batched query execution.

Queries are processed in fixed-size chunks through two preallocated staging
buffers: while chunk j is being processed, chunk j+1 is copied into the other
buffer, so staging memory never exceeds two chunks regardless of batch size.
Chunks complete in order and each result lands in its query's slot, making
batch output identical to a sequential loop over the single-query operations
for every chunk size and worker count.

Batches are kind-homogeneous (access, rank, or select).  Validation happens
up front: the first invalid query aborts the whole batch with its index and
the underlying error, and no partial results are returned.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BatchError, OrdinalError, PositionError, SymbolError
from .wtree import WaveletTree

DEFAULT_CHUNK_SIZE = 65536

KINDS = ("access", "rank", "select")


@dataclass
class QueryBatch:
    """A homogeneous batch: positions for access, (symbol, position) pairs
    for rank, (symbol, ordinal) pairs for select."""

    kind: str
    args: np.ndarray
    symbols: np.ndarray | None = None
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown batch kind {self.kind!r}")
        self.args = np.asarray(self.args, np.int64)
        if self.kind == "access":
            if self.symbols is not None:
                raise ValueError("access batches carry no symbols")
        else:
            if self.symbols is None:
                raise ValueError(f"{self.kind} batches need a symbol array")
            self.symbols = np.asarray(self.symbols, np.int64)
            if len(self.symbols) != len(self.args):
                raise ValueError("symbol and argument arrays differ in length")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be positive")

    def __len__(self) -> int:
        return len(self.args)


def sort_queries_by_symbol(batch: QueryBatch) -> tuple[QueryBatch, np.ndarray]:
    """Stable-sort a rank/select batch by symbol.

    Returns the permuted batch plus the inverse permutation; applying the
    inverse to the permuted results restores input order.  Grouping equal
    symbols makes adjacent queries walk the same tree path.
    """
    if batch.kind == "access":
        raise ValueError("access queries carry no symbol to sort by")
    order = np.argsort(batch.symbols, kind="stable")
    inverse = np.empty(len(order), np.int64)
    inverse[order] = np.arange(len(order), dtype=np.int64)
    permuted = QueryBatch(batch.kind, batch.args[order], batch.symbols[order],
                          batch.chunk_size)
    return permuted, inverse


class BatchRunner:
    """Runs batches against one tree through double-buffered staging.

    A runner handles one in-flight batch at a time; create one per thread if
    batches must run concurrently.  ``staging_peak_records`` reports the
    high-water mark of staged query records for allocator instrumentation.
    """

    def __init__(self, tree: WaveletTree, chunk_size: int = DEFAULT_CHUNK_SIZE,
                 workers: int = 1):
        if chunk_size < 1:
            raise ValueError("chunk_size must be positive")
        self.tree = tree
        self.chunk_size = chunk_size
        self.workers = max(1, int(workers))
        self._buffers: list[tuple[np.ndarray, np.ndarray]] = []
        self.staging_allocated_records = 0
        self.staging_peak_records = 0
        self._resident = [0, 0]
        self.stage_seconds = 0.0
        self.process_seconds = 0.0

    def _prepare_buffers(self, chunk: int, count: int) -> None:
        """(Re)allocate staging: one chunk-sized buffer, two when pipelining."""
        if (len(self._buffers) != count
                or any(len(b[0]) != chunk for b in self._buffers)):
            self._buffers = [
                (np.zeros(chunk, np.int64), np.zeros(chunk, np.int64))
                for _ in range(count)
            ]
        self.staging_allocated_records = count * chunk

    # -- validation -------------------------------------------------------------

    def _validate(self, batch: QueryBatch) -> np.ndarray | None:
        """Map symbols to minimal ids and reject the first invalid query."""
        tree = self.tree
        n = tree.n
        args = batch.args
        if batch.kind == "access":
            ok = (args >= 0) & (args < n)
            self._raise_first(batch, ok)
            return None
        ids, ok_sym = tree.alphabet.ids_bulk(batch.symbols)
        if batch.kind == "rank":
            ok = ok_sym & (args >= 0) & (args <= n)
        else:
            occ = tree.cum_hist[ids + 1] - tree.cum_hist[ids]
            ok = ok_sym & (args >= 1) & (args <= np.where(ok_sym, occ, 0))
        self._raise_first(batch, ok)
        return ids

    def _raise_first(self, batch: QueryBatch, ok: np.ndarray) -> None:
        if ok.all():
            return
        i = int(np.flatnonzero(~ok)[0])
        arg = int(batch.args[i])
        tree = self.tree
        if batch.kind == "access":
            cause: Exception = PositionError(
                f"position {arg} outside [0, {tree.n})")
        else:
            sym = int(batch.symbols[i])
            if sym not in tree.alphabet:
                cause = SymbolError(f"symbol {sym} is not in the alphabet")
            elif batch.kind == "rank":
                cause = PositionError(f"position {arg} outside [0, {tree.n}]")
            else:
                occ = tree.occurrences(sym)
                cause = OrdinalError(f"ordinal {arg} outside [1, {occ}]")
        raise BatchError(i, cause)

    # -- pipeline ----------------------------------------------------------------

    def run(self, batch: QueryBatch) -> np.ndarray:
        ids = self._validate(batch)
        nq = len(batch)
        tree = self.tree
        if batch.kind == "access":
            def kernel(i_col, a_col, out):
                out[:] = tree.access_ids_bulk(a_col)
        elif batch.kind == "rank":
            def kernel(i_col, a_col, out):
                out[:] = tree.rank_ids_bulk(i_col, a_col)
        else:
            def kernel(i_col, a_col, out):
                out[:] = tree.select_ids_bulk(i_col, a_col)

        # Vectorized kernels pay off from a few dozen queries; below that a
        # scalar loop over the staged records is cheaper and bit-identical.
        if batch.kind == "access":
            def small_kernel(i_col, a_col, out):
                for j in range(len(out)):
                    out[j] = tree._access_id(int(a_col[j]))
        elif batch.kind == "rank":
            def small_kernel(i_col, a_col, out):
                for j in range(len(out)):
                    out[j] = tree._rank_id(int(i_col[j]), int(a_col[j]))
        else:
            def small_kernel(i_col, a_col, out):
                for j in range(len(out)):
                    out[j] = tree._select_id(int(i_col[j]), int(a_col[j]))

        results = np.zeros(nq, np.int64)
        if nq == 0:
            return self._decode(batch.kind, results)
        chunk = min(self.chunk_size, nq)
        num_chunks = -(-nq // chunk)
        self._prepare_buffers(chunk, 1 if num_chunks == 1 else 2)
        self.staging_peak_records = 0
        self._resident = [0, 0]
        self.stage_seconds = 0.0
        self.process_seconds = 0.0

        def stage(ci: int, slot: int) -> int:
            t0 = time.perf_counter()
            a = ci * chunk
            b = min(a + chunk, nq)
            ids_buf, args_buf = self._buffers[slot]
            args_buf[:b - a] = batch.args[a:b]
            if ids is not None:
                ids_buf[:b - a] = ids[a:b]
            self._resident[slot] = b - a
            self.staging_peak_records = max(self.staging_peak_records,
                                            sum(self._resident))
            self.stage_seconds += time.perf_counter() - t0
            return b - a

        def process(ci: int, slot: int, count: int) -> None:
            t0 = time.perf_counter()
            a = ci * chunk
            ids_buf, args_buf = self._buffers[slot]
            out = results[a:a + count]
            if count < 32:
                small_kernel(ids_buf[:count], args_buf[:count], out)
            elif self.workers == 1 or count < 2048:
                kernel(ids_buf[:count], args_buf[:count], out)
            else:
                step = -(-count // self.workers)
                spans = [(x, min(x + step, count)) for x in range(0, count, step)]
                with ThreadPoolExecutor(max_workers=len(spans)) as pool:
                    list(pool.map(
                        lambda ab: kernel(ids_buf[ab[0]:ab[1]],
                                          args_buf[ab[0]:ab[1]],
                                          out[ab[0]:ab[1]]), spans))
            self._resident[slot] = 0
            self.process_seconds += time.perf_counter() - t0

        count = stage(0, 0)
        if num_chunks == 1:
            process(0, 0, count)
        else:
            with ThreadPoolExecutor(max_workers=1) as stager:
                pending = stager.submit(stage, 1, 1)
                for ci in range(num_chunks):
                    process(ci, ci & 1, count)
                    if pending is not None:
                        count = pending.result()
                        nxt = ci + 2
                        pending = (stager.submit(stage, nxt, nxt & 1)
                                   if nxt < num_chunks else None)
        return self._decode(batch.kind, results)

    def _decode(self, kind: str, results: np.ndarray) -> np.ndarray:
        if kind == "access":
            return self.tree.alphabet.sorted_symbols[results]
        return results


def run_batch(tree: WaveletTree, batch: QueryBatch, workers: int = 1) -> np.ndarray:
    return BatchRunner(tree, batch.chunk_size, workers).run(batch)


def access_batch(tree: WaveletTree, positions, workers: int = 1,
                 chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
    """Batched access; results are original symbols in query order."""
    return run_batch(tree, QueryBatch("access", positions, None, chunk_size), workers)


def rank_batch(tree: WaveletTree, symbols, positions, workers: int = 1,
               chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
    """Batched rank over (symbol, position) pairs, in query order."""
    return run_batch(tree, QueryBatch("rank", positions, symbols, chunk_size), workers)


def select_batch(tree: WaveletTree, symbols, ordinals, workers: int = 1,
                 chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
    """Batched select over (symbol, ordinal) pairs, in query order."""
    return run_batch(tree, QueryBatch("select", ordinals, symbols, chunk_size), workers)
