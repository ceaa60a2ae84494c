"""Command-line front end: build, query, bench, and stats.

Query files hold one query per line: ``position`` for access,
``symbol,position`` for rank, ``symbol,ordinal`` for select.  A symbol is
written either as its value in decimal or as a single printable non-digit
character; ``#`` starts a comment line and blank lines are skipped.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import batch as batch_mod
from .batch import BatchRunner, QueryBatch, sort_queries_by_symbol
from .errors import Error
from .rankselect import RankSelectParams
from .wtree import WaveletTree, construct, construct_with_alphabet, load, save


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


@dataclass
class RunReport:
    """Line-oriented run summary; overheads come from serialized sizes."""

    command: str
    build_ms: float | None = None
    stage_ms: float | None = None
    process_ms: float | None = None
    total_ms: float | None = None
    throughput_qps: float | None = None
    num_queries: int | None = None
    index_bytes: int | None = None
    n: int | None = None
    sigma: int | None = None
    num_levels: int | None = None
    bits_per_symbol: float | None = None
    rank_overhead_pct: float | None = None
    select_overhead_pct: float | None = None
    total_overhead_pct: float | None = None
    checksum: str | None = None

    def lines(self) -> list[str]:
        out = []
        for key, value in asdict(self).items():
            if value is None:
                continue
            if isinstance(value, float):
                out.append(f"{key}={value:.6g}")
            else:
                out.append(f"{key}={value}")
        return out

    def dump(self, report_path: str | None = None) -> None:
        for line in self.lines():
            print(line)
        if report_path:
            payload = {k: v for k, v in asdict(self).items() if v is not None}
            with open(report_path, "w") as f:
                json.dump(payload, f, indent=2, sort_keys=True)
                f.write("\n")


def _overhead_report(tree: WaveletTree, report: RunReport) -> None:
    """Fill size statistics, measuring from serialized payload sizes."""
    report.index_bytes = tree.index_bytes()
    report.n = tree.n
    report.sigma = tree.sigma
    report.num_levels = tree.num_levels
    report.bits_per_symbol = report.index_bytes * 8 / tree.n
    level_bits = int(tree.level_sizes.sum()) if tree.num_levels else 0
    if level_bits:
        rank_bits = 8 * sum(rs.rank_support_bytes for rs in tree.rs)
        select_bits = 8 * sum(rs.select_support_bytes for rs in tree.rs)
        report.rank_overhead_pct = 100.0 * rank_bits / level_bits
        report.select_overhead_pct = 100.0 * select_bits / level_bits
        report.total_overhead_pct = 100.0 * (rank_bits + select_bits) / level_bits


def _read_text_file(path: str, width: int) -> np.ndarray | bytes:
    data = Path(path).read_bytes()
    if width == 8:
        return data
    if len(data) % 2:
        raise Error(f"{path}: 16-bit input has an odd byte count ({len(data)})")
    return np.frombuffer(data, dtype="<u2")


def _parse_symbol(token: str, where: str) -> int:
    token = token.strip()
    if not token:
        raise Error(f"{where}: empty symbol")
    if token.isdigit():
        return int(token)
    if len(token) == 1 and token.isprintable():
        return ord(token)
    raise Error(f"{where}: bad symbol token {token!r}")


def _parse_int(token: str, where: str) -> int:
    try:
        return int(token.strip())
    except ValueError:
        raise Error(f"{where}: bad integer {token.strip()!r}") from None


def _read_alphabet_file(path: str) -> list[int]:
    symbols = []
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        symbols.append(_parse_symbol(line, f"{path}:{ln}"))
    if not symbols:
        raise Error(f"{path}: alphabet file lists no symbols")
    return symbols


def _read_queries(path: str, kind: str) -> tuple[np.ndarray, np.ndarray | None]:
    args = []
    symbols = [] if kind != "access" else None
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{ln}"
        if kind == "access":
            args.append(_parse_int(line, where))
        else:
            parts = line.split(",")
            if len(parts) != 2:
                raise Error(f"{where}: expected symbol,{'position' if kind == 'rank' else 'ordinal'}")
            symbols.append(_parse_symbol(parts[0], where))
            args.append(_parse_int(parts[1], where))
    return (np.asarray(args, np.int64),
            None if symbols is None else np.asarray(symbols, np.int64))


def _format_symbol(value: int) -> str:
    if 33 <= value <= 126:
        return chr(value)
    return str(value)


def _rs_params(args) -> RankSelectParams | None:
    if args.l2_bits is None and args.sample_rate is None:
        return None
    kwargs = {}
    if args.l2_bits is not None:
        kwargs["l2_bits"] = args.l2_bits
    if args.sample_rate is not None:
        kwargs["sample_rate"] = args.sample_rate
    try:
        return RankSelectParams(**kwargs)
    except ValueError as e:
        raise Error(str(e)) from None


def cmd_build(args) -> int:
    text = _read_text_file(args.input, args.symbol_width)
    params = _rs_params(args)
    t0 = time.perf_counter()
    if args.alphabet:
        alphabet = _read_alphabet_file(args.alphabet)
        tree = construct_with_alphabet(text, alphabet, workers=args.workers,
                                       params=params)
    else:
        tree = construct(text, workers=args.workers, params=params)
    build_s = time.perf_counter() - t0
    save(tree, args.output)
    report = RunReport(command="build", build_ms=build_s * 1e3)
    _overhead_report(tree, report)
    report.index_bytes = Path(args.output).stat().st_size
    report.dump(args.report)
    return 0


def _line_number_of_query(path: str, kind: str, index: int) -> int:
    """Map a query index back to its 1-based line in the query file."""
    seen = -1
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        seen += 1
        if seen == index:
            return ln
    return 0


def cmd_query(args) -> int:
    tree = load(args.index)
    positions, symbols = _read_queries(args.queries, args.type)
    chunk = args.chunk_size or batch_mod.DEFAULT_CHUNK_SIZE
    qb = QueryBatch(args.type, positions, symbols, chunk)
    inverse = None
    if args.sort_by_symbol:
        if args.type == "access":
            raise Error("--sort-by-symbol applies to rank and select queries")
        qb, inverse = sort_queries_by_symbol(qb)
    runner = BatchRunner(tree, chunk, args.workers)
    try:
        t0 = time.perf_counter()
        results = runner.run(qb)
        total_s = time.perf_counter() - t0
    except batch_mod.BatchError as e:
        idx = e.index if inverse is None else int(np.flatnonzero(inverse == e.index)[0])
        line = _line_number_of_query(args.queries, args.type, idx)
        raise Error(f"{args.queries}:{line}: {e.__cause__}") from e
    if inverse is not None:
        results = results[inverse]
    with open(args.output, "w") as f:
        if args.type == "access":
            for v in results:
                f.write(_format_symbol(int(v)) + "\n")
        else:
            for v in results:
                f.write(f"{int(v)}\n")
    report = RunReport(command="query", num_queries=len(results),
                       stage_ms=runner.stage_seconds * 1e3,
                       process_ms=runner.process_seconds * 1e3,
                       total_ms=total_s * 1e3)
    if total_s > 0:
        report.throughput_qps = len(results) / total_s
    report.dump(args.report)
    return 0


def _bench_queries(tree: WaveletTree, kind: str, num: int,
                   seed: int) -> QueryBatch:
    rng = np.random.default_rng(seed)
    if kind == "access":
        return QueryBatch("access", rng.integers(0, tree.n, num))
    occ = np.diff(tree.cum_hist)
    if kind == "rank":
        ids = rng.integers(0, tree.sigma, num)
        symbols = tree.alphabet.sorted_symbols[ids].astype(np.int64)
        return QueryBatch("rank", rng.integers(0, tree.n + 1, num), symbols)
    present = np.flatnonzero(occ > 0)
    ids = present[rng.integers(0, len(present), num)]
    ks = 1 + np.floor(rng.random(num) * occ[ids]).astype(np.int64)
    symbols = tree.alphabet.sorted_symbols[ids].astype(np.int64)
    return QueryBatch("select", ks, symbols)


def cmd_bench(args) -> int:
    if args.num < 1:
        raise Error("--num must be positive")
    tree = load(args.index)
    qb = _bench_queries(tree, args.type, args.num, args.seed)
    qb.chunk_size = args.chunk_size or batch_mod.DEFAULT_CHUNK_SIZE
    runner = BatchRunner(tree, qb.chunk_size, args.workers)
    iterations = max(10, args.iterations)
    timings = []
    results = None
    for _ in range(iterations):
        t0 = time.perf_counter()
        results = runner.run(qb)
        total = time.perf_counter() - t0
        timings.append((total, runner.stage_seconds, runner.process_seconds))
    med_total, med_stage, med_process = sorted(timings)[len(timings) // 2]
    report = RunReport(command="bench", num_queries=args.num,
                       stage_ms=med_stage * 1e3, process_ms=med_process * 1e3,
                       total_ms=med_total * 1e3,
                       throughput_qps=args.num / med_total,
                       checksum=f"{zlib.crc32(results.tobytes()):08x}")
    report.dump(args.report)
    return 0


def cmd_stats(args) -> int:
    tree = load(args.index)
    report = RunReport(command="stats")
    _overhead_report(tree, report)
    report.index_bytes = Path(args.index).stat().st_size
    report.dump(args.report)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="wtindex",
                     description="wavelet-tree index: build, query, bench, stats")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build an index from a text file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--symbol-width", type=int, choices=(8, 16), default=8)
    p.add_argument("--alphabet", help="file declaring the alphabet, one symbol per line")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--l2-bits", type=int, default=None)
    p.add_argument("--sample-rate", type=int, default=None)
    p.add_argument("--report", help="also write the report as JSON")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="run a query file against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--type", required=True, choices=("access", "rank", "select"))
    p.add_argument("--queries", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--chunk-size", type=int, default=None)
    p.add_argument("--sort-by-symbol", action="store_true")
    p.add_argument("--report")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="measure batched query throughput")
    p.add_argument("--index", required=True)
    p.add_argument("--type", required=True, choices=("access", "rank", "select"))
    p.add_argument("--num", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--chunk-size", type=int, default=None)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--report")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="print index size statistics")
    p.add_argument("--index", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (Error, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
