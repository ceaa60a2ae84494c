"""Level-wise wavelet tree with a reduced shape for non-power-of-two alphabets.

All nodes of a level are concatenated into one bit array region; the
exclusive cumulative histogram of the text locates node boundaries, and the
rank0 at every node start is precomputed so each query level costs a single
binary rank or select.  Construction proceeds top-down: level l is obtained
by stably sorting the encoded text by its top l bits and emitting bit l of
each code word; symbols whose code ends above the level have sorted to the
tail and simply drop out of the level.

A constructed tree is immutable and safe for unrestricted concurrent reads.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .alphabet import (
    MAX_SIGMA,
    AlphabetMap,
    CodeTable,
    ceil_log2,
    create_codes,
    cumulative_histogram,
    encode_and_histogram,
    level_sizes,
    minimal_alphabet,
    prev_pow_two,
    prev_pow_two_table,
)
from .bitvec import BitArray, build_bit_array
from .errors import (
    BadMagicError,
    BadVersionError,
    BuildError,
    CorruptIndexError,
    OrdinalError,
    PositionError,
    SymbolError,
)
from .rankselect import (
    RankSelectIndex,
    RankSelectParams,
    TREE_SAMPLE_RATE,
    build_index,
)
from .serial import read_array, read_exact, read_struct, write_array

MAGIC = b"WTIDX001"
VERSION = 1
_FLAG_WIDE_SYMBOLS = 1


def _coerce_text(text) -> tuple[np.ndarray, int]:
    """Normalize text input to a uint8/uint16 array plus its byte width."""
    if isinstance(text, (bytes, bytearray, memoryview)):
        return np.frombuffer(bytes(text), dtype=np.uint8), 1
    arr = np.asarray(text)
    if arr.dtype == np.uint8:
        return arr, 1
    if arr.dtype == np.uint16:
        return arr, 2
    if arr.size == 0:
        return arr.astype(np.uint8), 1
    if not np.issubdtype(arr.dtype, np.integer):
        raise BuildError(f"unsupported text dtype {arr.dtype}")
    lo, hi = int(arr.min()), int(arr.max())
    if lo < 0 or hi >= MAX_SIGMA:
        raise BuildError(f"symbol values must lie in [0, {MAX_SIGMA})")
    if hi < 256:
        return arr.astype(np.uint8), 1
    return arr.astype(np.uint16), 2


def _symbol_value(c) -> int:
    if isinstance(c, str):
        if len(c) != 1:
            raise SymbolError(f"symbol string must be one character, got {c!r}")
        return ord(c)
    if isinstance(c, (bytes, bytearray)):
        if len(c) != 1:
            raise SymbolError(f"symbol bytes must be one byte, got {c!r}")
        return c[0]
    return int(c)


def stable_sort_by_prefix(encoded: np.ndarray, l: int, num_levels: int) -> np.ndarray:
    """Stably sort code words by their top ``l`` bits.

    The text arrives sorted by the top ``l-1`` bits, so this is one stable
    counting pass on the prefix key; text order is preserved inside each
    prefix group.
    """
    key = encoded >> (num_levels - l)
    return encoded[np.argsort(key, kind="stable")]


def fill_level(ba: BitArray, l: int, encoded: np.ndarray, count: int,
               num_levels: int, workers: int = 1) -> None:
    """Write region ``l``: bit ``j`` becomes bit ``num_levels-1-l`` of word j."""
    bits = (encoded[:count] >> (num_levels - 1 - l)) & 1
    ba.fill_region(l, bits.astype(np.uint8), workers)


class WaveletTree:
    """Immutable wavelet tree over a byte or 16-bit symbol text."""

    def __init__(self, n: int, symbol_width: int, alphabet: AlphabetMap,
                 codes: CodeTable, cum_hist: np.ndarray, sizes: np.ndarray,
                 bits: BitArray, rs: list[RankSelectIndex],
                 node_starts: list[np.ndarray], node_rank0: list[np.ndarray]):
        self.n = n
        self.symbol_width = symbol_width
        self.alphabet = alphabet
        self.codes = codes
        self.cum_hist = cum_hist
        self.level_sizes = sizes
        self.bits = bits
        self.rs = rs
        self.node_starts = node_starts
        self.node_rank0 = node_rank0
        self.sigma = alphabet.size
        self.num_levels = ceil_log2(self.sigma)
        self._node_maps = [
            {int(s): int(v) for s, v in zip(starts, vals)}
            for starts, vals in zip(node_starts, node_rank0)
        ]
        self._spine_starts = self._compute_spine_starts()

    # -- shape helpers -------------------------------------------------------

    def _compute_spine_starts(self) -> np.ndarray:
        spine = np.zeros(self.num_levels + 1, np.int64)
        ns = 0
        for l in range(1, self.num_levels + 1):
            if self.sigma - ns >= 2:
                ns += prev_pow_two(self.sigma - ns)
            spine[l] = ns
        return spine

    def occurrences(self, c) -> int:
        cid = self.alphabet.id_for(_symbol_value(c))
        return int(self.cum_hist[cid + 1] - self.cum_hist[cid])

    def node_start(self, c_id: int, l: int) -> int:
        """Smallest symbol of the level-``l`` node containing minimal id ``c_id``.

        For power-of-two alphabets this clears the low bits of the id.  In
        the reduced shape, nodes on the rightmost spine (detected by an
        all-ones code prefix) accumulate stripped subtree widths; any other
        node lies inside a complete power-of-two subtree whose start is
        aligned, so clearing the id's low bits below the node width works.
        """
        if c_id < 0 or c_id >= self.sigma:
            raise SymbolError(f"symbol id {c_id} outside [0, {self.sigma})")
        if l <= 0:
            return 0
        if self.sigma & (self.sigma - 1) == 0:
            width = 1 << (self.num_levels - l)
            return c_id & ~(width - 1)
        code = self.codes.code(c_id)
        if (code.value >> (self.num_levels - l)).bit_count() == l:
            return int(self._spine_starts[l])
        drop = max(code.length - l, 0)
        return c_id & ~((1 << drop) - 1)

    def _node_start_bulk(self, s: np.ndarray, l: int) -> np.ndarray:
        if l <= 0:
            return np.zeros(len(s), np.int64)
        if self.sigma & (self.sigma - 1) == 0:
            width = 1 << (self.num_levels - l)
            return s & ~(width - 1)
        vals = self.codes.values[s].astype(np.uint64)
        lens = self.codes.lens[s].astype(np.int64)
        pc = np.bitwise_count(vals >> np.uint64(self.num_levels - l)).astype(np.int64)
        drop = np.maximum(lens - l, 0)
        cleared = s & ~((np.int64(1) << drop) - 1)
        return np.where(pc == l, self._spine_starts[l], cleared)

    def _node_rank0_bulk(self, l: int, start: np.ndarray,
                         mask: np.ndarray) -> np.ndarray:
        starts = self.node_starts[l]
        s = np.where(mask, start, 0)
        i = np.searchsorted(starts, s, side="right") - 1
        return self.node_rank0[l][i]

    # -- queries ---------------------------------------------------------------

    def access(self, i: int):
        """Original symbol at text position ``i``."""
        if not 0 <= i < self.n:
            raise PositionError(f"position {i} outside [0, {self.n})")
        return self.alphabet.symbol_for(self._access_id(i))

    def _access_id(self, i: int) -> int:
        if self.num_levels == 0:
            return 0
        start, end = 0, self.sigma
        tbl = prev_pow_two_table()
        for l in range(self.num_levels):
            counts = int(self.cum_hist[start])
            width = end - start
            rs = self.rs[l]
            if width <= 2:
                # One bit resolves the symbol; width-1 leaves need no bit.
                if width > 1 and rs.get_bit(counts + i):
                    return start + 1
                return start
            node0 = self._node_maps[l][start]
            pos0, bit = rs.rank0_with_bit(counts + i)
            local0 = pos0 - node0
            diff = int(tbl[width])
            if bit:
                i -= local0
                start += diff
            else:
                i = local0
                end = start + diff
        raise AssertionError("access descent did not resolve")

    def rank(self, c, i: int) -> int:
        """Occurrences of symbol ``c`` in the text prefix [0, i)."""
        cid = self.alphabet.id_for(_symbol_value(c))
        if not 0 <= i <= self.n:
            raise PositionError(f"position {i} outside [0, {self.n}]")
        return self._rank_id(cid, i)

    def _rank_id(self, cid: int, i: int) -> int:
        if self.num_levels == 0:
            return i
        start, end = 0, self.sigma
        result = i
        tbl = prev_pow_two_table()
        for l in range(self.num_levels):
            if end - start <= 1:
                break
            counts = int(self.cum_hist[start])
            node0 = self._node_maps[l][start]
            local0 = self.rs[l].rank0(counts + result) - node0
            split = start + int(tbl[end - start])
            if cid < split:
                result = local0
                end = split
            else:
                result -= local0
                start = split
        return result

    def select(self, c, k: int) -> int:
        """0-based position of the k-th occurrence of ``c``, k starting at 1."""
        cid = self.alphabet.id_for(_symbol_value(c))
        occ = int(self.cum_hist[cid + 1] - self.cum_hist[cid])
        if not 1 <= k <= occ:
            raise OrdinalError(f"ordinal {k} outside [1, {occ}] for symbol {c!r}")
        return self._select_id(cid, k)

    def _select_id(self, cid: int, k: int) -> int:
        if self.num_levels == 0:
            return k - 1
        code = self.codes.code(cid)
        start = cid
        result = k
        for l in range(code.length - 1, -1, -1):
            if code.value >> (self.num_levels - 1 - l) & 1:
                start = self.node_start(start, l)
                counts = int(self.cum_hist[start])
                node0 = self._node_maps[l][start]
                ones_before = counts - node0
                result = self.rs[l].select1(ones_before + result) + 1 - counts
            else:
                counts = int(self.cum_hist[start])
                node0 = self._node_maps[l][start]
                result = self.rs[l].select0(node0 + result) + 1 - counts
        return result - 1

    # -- bulk variants (minimal-id domain, used by the batch engine) -----------

    def access_ids_bulk(self, pos: np.ndarray) -> np.ndarray:
        pos = np.asarray(pos, np.int64)
        m = len(pos)
        out = np.zeros(m, np.int64)
        if m == 0 or self.num_levels == 0:
            return out
        tbl = prev_pow_two_table()
        start = np.zeros(m, np.int64)
        end = np.full(m, self.sigma, np.int64)
        cur = pos.copy()
        active = np.ones(m, bool)
        for l in range(self.num_levels):
            width = end - start
            counts = self.cum_hist[start]
            p = counts + cur
            rs = self.rs[l]
            readable = active & (width >= 2)
            bits = rs.get_bits_bulk(np.where(readable, p, 0))
            leaf1 = active & (width == 1)
            leaf2 = active & (width == 2)
            out = np.where(leaf1, start, out)
            out = np.where(leaf2, start + bits, out)
            active = active & (width > 2)
            if not active.any():
                break
            node0 = self._node_rank0_bulk(l, start, active)
            local0 = rs.rank0_bulk(np.where(active, p, 0)) - node0
            diff = tbl[width]
            right = active & (bits == 1)
            cur = np.where(right, cur - local0, np.where(active, local0, cur))
            end = np.where(active & ~right, start + diff, end)
            start = np.where(right, start + diff, start)
        return out

    def rank_ids_bulk(self, ids: np.ndarray, pos: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, np.int64)
        pos = np.asarray(pos, np.int64)
        m = len(ids)
        if m == 0 or self.num_levels == 0:
            return pos.copy()
        tbl = prev_pow_two_table()
        start = np.zeros(m, np.int64)
        end = np.full(m, self.sigma, np.int64)
        result = pos.copy()
        for l in range(self.num_levels):
            active = (end - start) > 1
            if not active.any():
                break
            counts = self.cum_hist[start]
            node0 = self._node_rank0_bulk(l, start, active)
            p = np.where(active, counts + result, 0)
            local0 = self.rs[l].rank0_bulk(p) - node0
            split = start + tbl[end - start]
            left = active & (ids < split)
            right = active & ~left
            result = np.where(left, local0, np.where(right, result - local0, result))
            end = np.where(left, split, end)
            start = np.where(right, split, start)
        return result

    def select_ids_bulk(self, ids: np.ndarray, ks: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, np.int64)
        ks = np.asarray(ks, np.int64)
        m = len(ids)
        if m == 0:
            return np.zeros(0, np.int64)
        if self.num_levels == 0:
            return ks - 1
        vals = self.codes.values[ids].astype(np.int64)
        lens = self.codes.lens[ids].astype(np.int64)
        start = ids.copy()
        result = ks.copy()
        for l in range(self.num_levels - 1, -1, -1):
            act = lens > l
            if not act.any():
                continue
            bit = (vals >> (self.num_levels - 1 - l)) & 1
            right = act & (bit == 1)
            if right.any():
                ns = self._node_start_bulk(np.where(right, start, 0), l)
                start = np.where(right, ns, start)
            counts = self.cum_hist[start]
            node0 = self._node_rank0_bulk(l, start, act)
            sel = np.zeros(m, np.int64)
            r_idx = np.flatnonzero(right)
            if len(r_idx):
                ones_before = counts[r_idx] - node0[r_idx]
                sel[r_idx] = self.rs[l].select1_bulk(ones_before + result[r_idx])
            l_idx = np.flatnonzero(act & ~right)
            if len(l_idx):
                sel[l_idx] = self.rs[l].select0_bulk(node0[l_idx] + result[l_idx])
            result = np.where(act, sel + 1 - counts, result)
        return result - 1

    # -- serialization -----------------------------------------------------------

    def save(self, sink) -> None:
        save(self, sink)

    def index_bytes(self) -> int:
        buf = io.BytesIO()
        save(self, buf)
        return buf.tell()


def _node_intervals(sigma: int, num_levels: int) -> list[list[tuple[int, int]]]:
    """Width >= 2 node intervals per level, in left-to-right order."""
    levels: list[list[tuple[int, int]]] = []
    if num_levels == 0:
        return levels
    current = [(0, sigma)]
    for _ in range(num_levels):
        levels.append(current)
        nxt = []
        for a, b in current:
            p = prev_pow_two(b - a)
            for x, y in ((a, a + p), (a + p, b)):
                if y - x >= 2:
                    nxt.append((x, y))
        current = nxt
    return levels


def _build(ids: np.ndarray, amap: AlphabetMap, symbol_width: int,
           workers: int, params: RankSelectParams | None) -> WaveletTree:
    sigma = amap.size
    num_levels = ceil_log2(sigma)
    codes = create_codes(sigma)
    encoded, hist = encode_and_histogram(ids, codes, workers)
    sizes = level_sizes(codes, hist)
    cum = cumulative_histogram(hist)
    ba = build_bit_array(sizes)
    cur = encoded
    for l in range(num_levels):
        if l:
            cur = stable_sort_by_prefix(cur, l, num_levels)
        fill_level(ba, l, cur, int(sizes[l]), num_levels, workers)
    if params is None:
        params = RankSelectParams(sample_rate=TREE_SAMPLE_RATE)
    rs = [build_index(ba, l, params, workers) for l in range(num_levels)]

    shape = _node_intervals(sigma, num_levels)
    node_starts = []
    node_rank0 = []
    for l in range(num_levels):
        starts = np.fromiter((a for a, _ in shape[l]), np.int64,
                             count=len(shape[l]))
        vals = np.fromiter((rs[l].rank0(int(cum[a])) for a, _ in shape[l]),
                           np.int64, count=len(shape[l]))
        node_starts.append(starts)
        node_rank0.append(vals)
    return WaveletTree(len(ids), symbol_width, amap, codes, cum, sizes, ba,
                       rs, node_starts, node_rank0)


def construct(text, workers: int = 1,
              params: RankSelectParams | None = None) -> WaveletTree:
    """Build a wavelet tree, inferring the alphabet from the text."""
    arr, width = _coerce_text(text)
    if len(arr) == 0:
        raise BuildError("cannot build an index over an empty text")
    ids, amap = minimal_alphabet(arr)
    return _build(ids, amap, width, workers, params)


def construct_with_alphabet(text, alphabet, workers: int = 1,
                            params: RankSelectParams | None = None) -> WaveletTree:
    """Build with a caller-declared alphabet (may be a superset of the text's).

    Declaring the alphabet skips the extraction pass; every text symbol must
    be covered by the declaration.
    """
    arr, width = _coerce_text(text)
    if len(arr) == 0:
        raise BuildError("cannot build an index over an empty text")
    alpha, awidth = _coerce_text(alphabet)
    if len(alpha) == 0:
        raise BuildError("declared alphabet is empty")
    symbols = np.unique(alpha)
    if len(symbols) > MAX_SIGMA:
        raise BuildError(f"alphabet size {len(symbols)} exceeds {MAX_SIGMA}")
    amap = AlphabetMap(symbols)
    ids = amap.map_text(arr)
    return _build(ids, amap, max(width, awidth), workers, params)


# -- index file format ------------------------------------------------------


def save(tree: WaveletTree, sink) -> None:
    """Serialize ``tree``; all integers are little-endian fixed width."""
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as f:
            save(tree, f)
        return
    out: BinaryIO = sink
    flags = _FLAG_WIDE_SYMBOLS if tree.symbol_width == 2 else 0
    out.write(MAGIC)
    out.write(struct.pack("<IIQQI", VERSION, flags, tree.n, tree.sigma,
                          tree.num_levels))
    sym_dtype = "<u2" if tree.symbol_width == 2 else "<u1"
    write_array(out, tree.alphabet.sorted_symbols, sym_dtype, length_prefix=False)
    out.write(struct.pack("<Q", tree.codes.num_explicit))
    for s in range(tree.codes.first_coded, tree.sigma):
        out.write(struct.pack("<IB", int(tree.codes.values[s]),
                              int(tree.codes.lens[s])))
    write_array(out, tree.level_sizes, "<u8", length_prefix=False)
    write_array(out, tree.cum_hist, "<u8", length_prefix=False)
    write_array(out, tree.bits.words, "<u8")
    for rs in tree.rs:
        rs.write(out)
    for starts, vals in zip(tree.node_starts, tree.node_rank0):
        out.write(struct.pack("<Q", len(starts)))
        write_array(out, starts, "<u8", length_prefix=False)
        write_array(out, vals, "<u8", length_prefix=False)


def load(source) -> WaveletTree:
    """Deserialize an index, validating structure before returning."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as f:
            return load(f)
    src: BinaryIO = source
    magic = read_exact(src, len(MAGIC))
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    version, flags, n, sigma, num_levels = read_struct(src, "<IIQQI")
    if version != VERSION:
        raise BadVersionError(f"unsupported index version {version}")
    if flags & ~_FLAG_WIDE_SYMBOLS:
        raise CorruptIndexError(f"unknown flag bits {flags:#x}")
    width = 2 if flags & _FLAG_WIDE_SYMBOLS else 1
    if not 1 <= sigma <= MAX_SIGMA or n < 1:
        raise CorruptIndexError("implausible n or sigma")
    if num_levels != ceil_log2(sigma):
        raise CorruptIndexError("level count does not match alphabet size")

    sym_dtype = "<u2" if width == 2 else "<u1"
    symbols = read_array(src, sym_dtype, count=sigma)
    if np.any(np.diff(symbols.astype(np.int64)) <= 0):
        raise CorruptIndexError("alphabet symbols not strictly increasing")
    amap = AlphabetMap(symbols)

    codes = create_codes(sigma)
    (num_explicit,) = read_struct(src, "<Q")
    if num_explicit != codes.num_explicit:
        raise CorruptIndexError("explicit code count mismatch")
    for s in range(codes.first_coded, sigma):
        value, length = read_struct(src, "<IB")
        if value != int(codes.values[s]) or length != int(codes.lens[s]):
            raise CorruptIndexError(f"stored code for symbol {s} is inconsistent")

    sizes = read_array(src, "<u8", count=num_levels).astype(np.int64)
    cum = read_array(src, "<u8", count=sigma + 1).astype(np.int64)
    if cum[0] != 0 or int(cum[-1]) != n or np.any(np.diff(cum) < 0):
        raise CorruptIndexError("cumulative histogram is not a valid prefix sum")
    expected_sizes = level_sizes(codes, np.diff(cum))
    if not np.array_equal(sizes, expected_sizes):
        raise CorruptIndexError("level sizes inconsistent with histogram")

    ba = build_bit_array(sizes)
    words = read_array(src, "<u8").astype(np.uint64)
    if len(words) != len(ba.words):
        raise CorruptIndexError("bit array word count mismatch")
    ba.words = words

    rs = []
    for l in range(num_levels):
        idx = RankSelectIndex.read(src, ba.region_words(l))
        if idx.n_bits != int(sizes[l]):
            raise CorruptIndexError(f"rank structure length mismatch at level {l}")
        rs.append(idx)

    shape = _node_intervals(sigma, num_levels)
    node_starts = []
    node_rank0 = []
    for l in range(num_levels):
        (count,) = read_struct(src, "<Q")
        starts = read_array(src, "<u8", count=count).astype(np.int64)
        vals = read_array(src, "<u8", count=count).astype(np.int64)
        expected = np.fromiter((a for a, _ in shape[l]), np.int64,
                               count=len(shape[l]))
        if not np.array_equal(starts, expected):
            raise CorruptIndexError(f"node starts mismatch at level {l}")
        recomputed = np.fromiter((rs[l].rank0(int(cum[a])) for a in starts),
                                 np.int64, count=len(starts))
        if not np.array_equal(vals, recomputed):
            raise CorruptIndexError(f"precomputed node ranks mismatch at level {l}")
        node_starts.append(starts)
        node_rank0.append(vals)

    if src.read(1):
        raise CorruptIndexError("trailing bytes after index payload")
    return WaveletTree(n, width, amap, codes, cum, sizes, ba, rs,
                       node_starts, node_rank0)
