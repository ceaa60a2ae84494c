"""Constant-time binary rank and near-constant-time binary select.

The support structure is a two-level directory over one bit-array region:

* L1 blocks of 65536 bits store the absolute number of ones strictly before
  the block start in a 64-bit counter.
* L2 blocks (512 bits by default) store the number of ones from the
  enclosing L1 block start to the L2 block start in a 16-bit counter,
  which is why the L1 block size is pinned to 65536.
* Every ``sample_rate``-th one and zero position is additionally sampled so
  a select query only has to binary-search a narrow window of L1 blocks.

rank1(i) resolves as L1 + L2 + a popcount scan of at most one L2 block,
masking the final word.  select walks sample window -> L1 binary search ->
L2 binary search -> word scan -> in-word popcount-halving search.

All query state is immutable after construction; concurrent reads are safe.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .bitvec import WORD_BITS, BitArray, popcount_words
from .errors import CorruptIndexError, OrdinalError, PositionError

L1_BITS = 65536

DEFAULT_L2_BITS = 512
DEFAULT_SAMPLE_RATE = 16384
# Denser sampling pays off when the structure sits under a wavelet-tree
# level and every query touches it.
TREE_SAMPLE_RATE = 4096

_WORD_MASK = (1 << WORD_BITS) - 1


@dataclass(frozen=True)
class RankSelectParams:
    l1_bits: int = L1_BITS
    l2_bits: int = DEFAULT_L2_BITS
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if self.l1_bits != L1_BITS:
            raise ValueError(f"l1_bits is fixed at {L1_BITS}")
        if self.l2_bits < WORD_BITS or self.l2_bits % WORD_BITS:
            raise ValueError("l2_bits must be a multiple of the word size")
        if self.l1_bits % self.l2_bits:
            raise ValueError("l2_bits must divide l1_bits")
        if self.sample_rate < 1:
            raise ValueError("sample_rate must be positive")


def select_in_word(word: int, k: int) -> int:
    """0-based position of the k-th (1-based) set bit of ``word``.

    Popcount-halving binary search, low half first; six halvings for a
    64-bit word.  ``1 <= k <= popcount(word)`` is a caller contract.
    """
    assert 1 <= k <= (word & _WORD_MASK).bit_count(), "select_in_word ordinal out of range"
    w = word & _WORD_MASK
    pos = 0
    width = WORD_BITS
    while width > 1:
        half = width >> 1
        low = w & ((1 << half) - 1)
        c = low.bit_count()
        if k > c:
            k -= c
            w >>= half
            pos += half
        else:
            w = low
        width = half
    return pos


def _select_in_word_bulk(words: np.ndarray, ks: np.ndarray) -> np.ndarray:
    pos = np.zeros(len(words), np.int64)
    w = words.astype(np.uint64, copy=True)
    k = ks.astype(np.int64, copy=True)
    width = WORD_BITS
    while width > 1:
        half = width >> 1
        low = w & np.uint64((1 << half) - 1)
        c = np.bitwise_count(low).astype(np.int64)
        hi = k > c
        k -= np.where(hi, c, 0)
        w = np.where(hi, w >> np.uint64(half), low)
        pos += np.where(hi, half, 0)
        width = half
    return pos


class RankSelectIndex:
    """Rank/select directory over one region of a :class:`BitArray`.

    The index holds a view of the region's words; after :func:`load` the view
    is rebound to the deserialized bit array.
    """

    __slots__ = ("params", "n_bits", "total_ones", "l1_counts", "l2_counts",
                 "one_samples", "zero_samples", "_words", "_l2_shift",
                 "_l2_per_l1", "_words_per_l2", "_num_l1", "_num_l2")

    def __init__(self, params: RankSelectParams, n_bits: int, total_ones: int,
                 l1_counts: np.ndarray, l2_counts: np.ndarray,
                 one_samples: np.ndarray, zero_samples: np.ndarray,
                 words: np.ndarray):
        self.params = params
        self.n_bits = n_bits
        self.total_ones = total_ones
        self.l1_counts = l1_counts
        self.l2_counts = l2_counts
        self.one_samples = one_samples
        self.zero_samples = zero_samples
        self._words = words
        self._l2_shift = params.l2_bits.bit_length() - 1
        self._l2_per_l1 = params.l1_bits // params.l2_bits
        self._words_per_l2 = params.l2_bits // WORD_BITS
        self._num_l1 = len(l1_counts)
        self._num_l2 = len(l2_counts)

    # -- totals ------------------------------------------------------------

    @property
    def total_zeros(self) -> int:
        return self.n_bits - self.total_ones

    def rebind(self, words: np.ndarray) -> None:
        self._words = words

    # -- bit access ---------------------------------------------------------

    def get_bit(self, i: int) -> int:
        if not 0 <= i < self.n_bits:
            raise PositionError(f"bit index {i} outside [0, {self.n_bits})")
        return int(self._words[i >> 6]) >> (i & 63) & 1

    def get_bits_bulk(self, pos: np.ndarray) -> np.ndarray:
        w = self._words[pos >> 6]
        return ((w >> (pos & 63).astype(np.uint64)) & np.uint64(1)).astype(np.int64)

    # -- rank ---------------------------------------------------------------

    def rank1(self, i: int) -> int:
        """Number of ones in the region prefix [0, i)."""
        if not 0 <= i <= self.n_bits:
            raise PositionError(f"rank position {i} outside [0, {self.n_bits}]")
        if i == self.n_bits:
            return self.total_ones
        if i == 0:
            return 0
        res = int(self.l1_counts[i >> 16]) + int(self.l2_counts[i >> self._l2_shift])
        w = (i >> self._l2_shift) << (self._l2_shift - 6)
        end_w = i >> 6
        words = self._words
        while w < end_w:
            res += int(words[w]).bit_count()
            w += 1
        rem = i & 63
        if rem:
            res += (int(words[end_w]) & ((1 << rem) - 1)).bit_count()
        return res

    def rank0(self, i: int) -> int:
        return i - self.rank1(i)

    def rank0_with_bit(self, i: int) -> tuple[int, int]:
        """rank0(i) together with the bit at position i.

        The rank scan already touches the word holding bit ``i``, so callers
        that need both (the access query) avoid a second lookup.
        """
        if not 0 <= i < self.n_bits:
            raise PositionError(f"position {i} outside [0, {self.n_bits})")
        if i == 0:
            return 0, int(self._words[0]) & 1
        res = int(self.l1_counts[i >> 16]) + int(self.l2_counts[i >> self._l2_shift])
        w = (i >> self._l2_shift) << (self._l2_shift - 6)
        end_w = i >> 6
        words = self._words
        while w < end_w:
            res += int(words[w]).bit_count()
            w += 1
        last = int(words[end_w])
        rem = i & 63
        if rem:
            res += (last & ((1 << rem) - 1)).bit_count()
        return i - res, last >> rem & 1

    def rank1_bulk(self, pos: np.ndarray) -> np.ndarray:
        """Vectorized rank1 for positions in [0, n]."""
        pos = np.asarray(pos, dtype=np.int64)
        if self.n_bits == 0 or len(pos) == 0:
            return np.zeros(len(pos), np.int64)
        full = pos == self.n_bits
        p = np.where(full, 0, pos)
        res = self.l1_counts[p >> 16] + self.l2_counts[p >> self._l2_shift].astype(np.int64)
        base_w = (p >> self._l2_shift) << (self._l2_shift - 6)
        end_w = p >> 6
        last_valid = len(self._words) - 1
        for t in range(self._words_per_l2 - 1):
            idx = base_w + t
            take = idx < end_w
            if not take.any():
                break
            w = self._words[np.minimum(idx, last_valid)]
            res += np.bitwise_count(w).astype(np.int64) * take
        rem = (p & 63).astype(np.uint64)
        masked = self._words[end_w] & ((np.uint64(1) << rem) - np.uint64(1))
        res += np.bitwise_count(masked).astype(np.int64)
        return np.where(full, self.total_ones, res)

    def rank0_bulk(self, pos: np.ndarray) -> np.ndarray:
        pos = np.asarray(pos, dtype=np.int64)
        return pos - self.rank1_bulk(pos)

    # -- select -------------------------------------------------------------

    def _l1_value(self, b: int, ones: bool) -> int:
        return int(self.l1_counts[b]) if ones else (b << 16) - int(self.l1_counts[b])

    def _select_core(self, k: int, lo_b: int, hi_b: int, ones: bool) -> int:
        # Last L1 block whose cumulative count stays below k; ties across
        # empty blocks resolve to the last block, so the target bit is
        # inside the chosen block.
        while lo_b < hi_b:
            mid = (lo_b + hi_b + 1) >> 1
            if self._l1_value(mid, ones) < k:
                lo_b = mid
            else:
                hi_b = mid - 1
        b = lo_b
        k -= self._l1_value(b, ones)

        base_j = b * self._l2_per_l1
        lo_j = base_j
        hi_j = min(base_j + self._l2_per_l1, self._num_l2) - 1
        shift = self._l2_shift

        def l2_value(j: int) -> int:
            c = int(self.l2_counts[j])
            return c if ones else ((j - base_j) << shift) - c

        while lo_j < hi_j:
            mid = (lo_j + hi_j + 1) >> 1
            if l2_value(mid) < k:
                lo_j = mid
            else:
                hi_j = mid - 1
        k -= l2_value(lo_j)

        w = lo_j << (shift - 6)
        words = self._words
        while True:
            word = int(words[w])
            if not ones:
                word = ~word & _WORD_MASK
            pc = word.bit_count()
            if pc >= k:
                return (w << 6) + select_in_word(word, k)
            k -= pc
            w += 1

    def _select(self, k: int, ones: bool) -> int:
        total = self.total_ones if ones else self.total_zeros
        kind = "one" if ones else "zero"
        if not 1 <= k <= total:
            raise OrdinalError(f"select ordinal {k} outside [1, {total}] ({kind}s)")
        samples = self.one_samples if ones else self.zero_samples
        rate = self.params.sample_rate
        s_i = k // rate
        # Sample s_i-1 sits at or before the target, sample s_i at or after
        # it; with no sample below, the search starts from block 0.
        lo_pos = int(samples[s_i - 1]) if s_i >= 1 else 0
        hi_pos = int(samples[s_i]) if s_i < len(samples) else self.n_bits - 1
        return self._select_core(k, lo_pos >> 16,
                                 min(hi_pos >> 16, self._num_l1 - 1), ones)

    def select1(self, k: int) -> int:
        """0-based position of the k-th one, k starting at 1."""
        return self._select(k, True)

    def select0(self, k: int) -> int:
        return self._select(k, False)

    def _select_bulk(self, ks: np.ndarray, ones: bool) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        if len(ks) == 0:
            return np.zeros(0, np.int64)
        samples = self.one_samples if ones else self.zero_samples
        rate = self.params.sample_rate
        s_i = ks // rate
        if len(samples):
            below = np.minimum(np.maximum(s_i - 1, 0), len(samples) - 1)
            lo_pos = np.where(s_i >= 1, samples[below], 0)
            above = np.minimum(s_i, len(samples) - 1)
            hi_pos = np.where(s_i < len(samples), samples[above], self.n_bits - 1)
        else:
            lo_pos = np.zeros(len(ks), np.int64)
            hi_pos = np.full(len(ks), self.n_bits - 1, np.int64)
        lo = lo_pos >> 16
        hi = np.minimum(hi_pos >> 16, self._num_l1 - 1)

        def l1_values(b):
            c = self.l1_counts[b]
            return c if ones else (b << 16) - c

        while True:
            active = lo < hi
            if not active.any():
                break
            mid = (lo + hi + 1) >> 1
            go = l1_values(mid) < ks
            lo = np.where(active & go, mid, lo)
            hi = np.where(active & ~go, mid - 1, hi)
        b = lo
        k2 = ks - l1_values(b)

        shift = self._l2_shift
        base_j = b * self._l2_per_l1
        lo_j = base_j.copy()
        hi_j = np.minimum(base_j + self._l2_per_l1, self._num_l2) - 1

        def l2_values(j):
            c = self.l2_counts[j].astype(np.int64)
            return c if ones else ((j - base_j) << shift) - c

        while True:
            active = lo_j < hi_j
            if not active.any():
                break
            mid = (lo_j + hi_j + 1) >> 1
            go = l2_values(mid) < k2
            lo_j = np.where(active & go, mid, lo_j)
            hi_j = np.where(active & ~go, mid - 1, hi_j)
        k3 = k2 - l2_values(lo_j)

        base_w = lo_j << (shift - 6)
        last_valid = len(self._words) - 1
        acc = np.zeros(len(ks), np.int64)
        found = np.zeros(len(ks), bool)
        target = np.zeros(len(ks), np.uint64)
        rem = np.ones(len(ks), np.int64)
        wpos = np.zeros(len(ks), np.int64)
        for t in range(self._words_per_l2):
            idx = np.minimum(base_w + t, last_valid)
            word = self._words[idx]
            if not ones:
                word = ~word
            pc = np.bitwise_count(word).astype(np.int64)
            hit = ~found & (acc + pc >= k3)
            if hit.any():
                target = np.where(hit, word, target)
                rem = np.where(hit, k3 - acc, rem)
                wpos = np.where(hit, base_w + t, wpos)
                found |= hit
            acc += pc * ~found
            if found.all():
                break
        return (wpos << 6) + _select_in_word_bulk(target, rem)

    def select1_bulk(self, ks: np.ndarray) -> np.ndarray:
        return self._select_bulk(ks, True)

    def select0_bulk(self, ks: np.ndarray) -> np.ndarray:
        return self._select_bulk(ks, False)

    # -- serialization --------------------------------------------------------

    @property
    def rank_support_bytes(self) -> int:
        """Serialized size of the L1/L2 directory payload."""
        return self.l1_counts.nbytes + self.l2_counts.nbytes

    @property
    def select_support_bytes(self) -> int:
        """Serialized size of the position samples."""
        return self.one_samples.nbytes + self.zero_samples.nbytes

    def write(self, out: BinaryIO) -> None:
        p = self.params
        out.write(struct.pack("<IIIQQ", p.l1_bits, p.l2_bits, p.sample_rate,
                              self.n_bits, self.total_ones))
        for arr, code in ((self.l1_counts, "<u8"), (self.l2_counts, "<u2"),
                          (self.one_samples, "<u8"), (self.zero_samples, "<u8")):
            out.write(struct.pack("<Q", len(arr)))
            out.write(arr.astype(code, copy=False).tobytes())

    @classmethod
    def read(cls, src: BinaryIO, words: np.ndarray) -> "RankSelectIndex":
        from .serial import read_array, read_struct

        l1_bits, l2_bits, rate, n_bits, total_ones = read_struct(src, "<IIIQQ")
        try:
            params = RankSelectParams(l1_bits, l2_bits, rate)
        except ValueError as e:
            raise CorruptIndexError(str(e)) from e
        l1 = read_array(src, "<u8").astype(np.int64)
        l2 = read_array(src, "<u2")
        ones = read_array(src, "<u8").astype(np.int64)
        zeros = read_array(src, "<u8").astype(np.int64)
        idx = cls(params, n_bits, total_ones, l1, l2, ones, zeros, words)
        idx._validate()
        return idx

    def _validate(self) -> None:
        n = self.n_bits
        if n and len(self._words) != (n + WORD_BITS - 1) >> 6:
            raise CorruptIndexError("word count does not match region length")
        if len(self.l1_counts) != -(-n // L1_BITS):
            raise CorruptIndexError("L1 directory length mismatch")
        if len(self.l2_counts) != -(-n // self.params.l2_bits):
            raise CorruptIndexError("L2 directory length mismatch")
        if not 0 <= self.total_ones <= n:
            raise CorruptIndexError("total ones outside [0, n]")
        if len(self.l1_counts) and (int(self.l1_counts[0]) != 0
                                    or np.any(np.diff(self.l1_counts) < 0)):
            raise CorruptIndexError("L1 counts not a non-decreasing prefix sum")
        rate = self.params.sample_rate
        if len(self.one_samples) != self.total_ones // rate:
            raise CorruptIndexError("one-sample count mismatch")
        if len(self.zero_samples) != self.total_zeros // rate:
            raise CorruptIndexError("zero-sample count mismatch")


def _l2_popcounts(words: np.ndarray, num_l2: int, words_per_l2: int) -> np.ndarray:
    """Ones per L2 block; trailing padding bits are zero by construction."""
    counts = popcount_words(words)
    if len(counts) < num_l2 * words_per_l2:
        counts = np.concatenate(
            [counts, np.zeros(num_l2 * words_per_l2 - len(counts), np.int64)])
    return counts.reshape(num_l2, words_per_l2).sum(axis=1)


def build_index(ba: BitArray, region: int, params: RankSelectParams | None = None,
                workers: int = 1) -> RankSelectIndex:
    """Build the rank/select directory for one region.

    Phase 1 computes per-L2-block popcounts and in-block exclusive prefix
    sums, emitting per-L1 totals; phase 2 takes a global exclusive prefix sum
    over the L1 totals.  Select samples are then resolved through the binary
    select path itself, searching the full L1 range since the sample array is
    the one being built.  The result is bit-identical for any worker count.
    """
    if params is None:
        params = RankSelectParams()
    words = ba.region_words(region)
    n = int(ba.region_nbits[region])
    l2_bits = params.l2_bits
    num_l2 = -(-n // l2_bits)
    num_l1 = -(-n // params.l1_bits)
    words_per_l2 = l2_bits // WORD_BITS
    l2_per_l1 = params.l1_bits // l2_bits

    if num_l1 <= 1:
        # Single L1 block: the in-block exclusive prefix sum is the whole
        # directory.  Same values as the general path, fewer passes.
        l1_counts = np.zeros(num_l1, np.int64)
        if num_l2 <= 1:
            l2_counts = np.zeros(num_l2, np.uint16)
            total_ones = int(popcount_words(words).sum()) if num_l2 else 0
        else:
            blocks = _l2_popcounts(words, num_l2, words_per_l2)
            inclusive = np.cumsum(blocks)
            l2_counts = np.empty(num_l2, np.uint16)
            l2_counts[0] = 0
            l2_counts[1:] = inclusive[:-1]
            total_ones = int(inclusive[-1])
    else:
        l2_sums = np.zeros(num_l2, np.int64)
        if workers > 1:
            from concurrent.futures import ThreadPoolExecutor

            step = -(-num_l1 // workers)
            spans = [(a, min(a + step, num_l1)) for a in range(0, num_l1, step)]

            def count_span(span):
                a, b = span
                j0, j1 = a * l2_per_l1, min(b * l2_per_l1, num_l2)
                w0, w1 = j0 * words_per_l2, min(j1 * words_per_l2, len(words))
                l2_sums[j0:j1] = _l2_popcounts(words[w0:w1], j1 - j0, words_per_l2)

            with ThreadPoolExecutor(max_workers=len(spans)) as ex:
                list(ex.map(count_span, spans))
        else:
            l2_sums[:] = _l2_popcounts(words, num_l2, words_per_l2)

        # In-block exclusive prefix sums plus per-block totals, then the
        # global exclusive prefix sum over L1 totals.
        padded = np.zeros(num_l1 * l2_per_l1, np.int64)
        padded[:num_l2] = l2_sums
        rows = padded.reshape(num_l1, l2_per_l1)
        inclusive = np.cumsum(rows, axis=1)
        l2_counts = (inclusive - rows).reshape(-1)[:num_l2].astype(np.uint16)
        l1_totals = inclusive[:, -1]
        l1_counts = np.concatenate([[0], np.cumsum(l1_totals)[:-1]]).astype(np.int64)
        total_ones = int(l1_totals.sum())

    idx = RankSelectIndex(params, n, total_ones, l1_counts, l2_counts,
                          np.zeros(0, np.int64), np.zeros(0, np.int64), words)

    rate = params.sample_rate
    num_one = total_ones // rate
    num_zero = (n - total_ones) // rate
    one_samples = np.zeros(num_one, np.int64)
    zero_samples = np.zeros(num_zero, np.int64)

    def fill_samples(out, count, ones, a, b):
        for s in range(a, b):
            out[s] = idx._select_core((s + 1) * rate, 0, num_l1 - 1, ones)

    if workers > 1 and num_one + num_zero > 64:
        from concurrent.futures import ThreadPoolExecutor

        jobs = []
        for out, count, ones in ((one_samples, num_one, True),
                                 (zero_samples, num_zero, False)):
            step = max(1, -(-count // workers))
            jobs += [(out, count, ones, a, min(a + step, count))
                     for a in range(0, count, step)]
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(lambda j: fill_samples(*j), jobs))
    else:
        fill_samples(one_samples, num_one, True, 0, num_one)
        fill_samples(zero_samples, num_zero, False, 0, num_zero)

    idx.one_samples = one_samples
    idx.zero_samples = zero_samples
    return idx
