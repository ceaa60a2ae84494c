"""Word-packed bit array storage.

Bits live LSB-first inside 64-bit words: bit ``j`` of the array is stored in
word ``j // 64`` at intra-word position ``j % 64``, with position 0 the least
significant bit.  Several logical regions (one per wavelet-tree level, when
embedded) share a single contiguous word array; every region starts on a
1024-bit (128-byte cache line) boundary and the padding between regions is
kept zero, so popcount loops never have to mask region tails beyond the usual
partial-word handling.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import BuildError, PositionError

WORD_BITS = 64
ALIGN_BITS = 1024

_WORD_MASK = (1 << WORD_BITS) - 1
# Sanity cap so a bogus length list fails fast instead of attempting an
# absurd allocation.
_MAX_TOTAL_BITS = 1 << 48
# Below this many bits a region fill is cheaper without thread fan-out.
PARALLEL_MIN_BITS = 1 << 22


def popcount_words(words: np.ndarray) -> np.ndarray:
    """Per-word set-bit counts, as int64."""
    return np.bitwise_count(words).astype(np.int64)


def popcount(word: int) -> int:
    return (word & _WORD_MASK).bit_count()


def partial_word(word: int, k: int) -> int:
    """Keep the ``k`` least significant bits of ``word``, zeroing the rest."""
    if not 0 <= k <= WORD_BITS:
        raise PositionError(f"bit count {k} outside [0, {WORD_BITS}]")
    if k == WORD_BITS:
        return word & _WORD_MASK
    return word & ((1 << k) - 1)


def _align_up(bits: int) -> int:
    return (bits + ALIGN_BITS - 1) // ALIGN_BITS * ALIGN_BITS


class BitArray:
    """A zero-initialized multi-region bit array.

    Attributes:
        words: uint64 array backing all regions.
        region_offsets: int64 array of aligned region start bits.
        region_nbits: int64 array of valid bit counts per region.
        num_bits: total addressable span in bits (valid bits of the last
            region end exactly at ``num_bits``).
    """

    __slots__ = ("words", "region_offsets", "region_nbits", "num_bits")

    def __init__(self, words: np.ndarray, region_offsets: np.ndarray,
                 region_nbits: np.ndarray):
        self.words = words
        self.region_offsets = region_offsets
        self.region_nbits = region_nbits
        if len(region_offsets):
            self.num_bits = int(region_offsets[-1]) + int(region_nbits[-1])
        else:
            self.num_bits = 0

    @property
    def num_regions(self) -> int:
        return len(self.region_offsets)

    def _check(self, j: int) -> None:
        if not 0 <= j < self.num_bits:
            raise PositionError(f"bit index {j} outside [0, {self.num_bits})")

    def get_bit(self, j: int) -> int:
        self._check(j)
        return int(self.words[j >> 6]) >> (j & 63) & 1

    def set_bit(self, j: int, v: int) -> None:
        self._check(j)
        if v not in (0, 1):
            raise ValueError(f"bit value must be 0 or 1, got {v}")
        mask = np.uint64(1 << (j & 63))
        if v:
            self.words[j >> 6] |= mask
        else:
            self.words[j >> 6] &= ~mask

    def word_at_bit(self, j: int) -> int:
        """Return the full word containing bit ``j``."""
        self._check(j)
        return int(self.words[j >> 6])

    def region_words(self, r: int) -> np.ndarray:
        """View of the words backing region ``r`` (valid words only)."""
        off = int(self.region_offsets[r]) >> 6
        nwords = (int(self.region_nbits[r]) + WORD_BITS - 1) >> 6
        return self.words[off:off + nwords]

    def region_word_offset(self, r: int) -> int:
        return int(self.region_offsets[r]) >> 6

    def get_region_bit(self, r: int, j: int) -> int:
        n = int(self.region_nbits[r])
        if not 0 <= j < n:
            raise PositionError(f"bit index {j} outside region of {n} bits")
        g = int(self.region_offsets[r]) + j
        return int(self.words[g >> 6]) >> (g & 63) & 1

    def fill_region(self, r: int, bits: np.ndarray, workers: int = 1) -> None:
        """Pack a 0/1 array into region ``r``, LSB-first within each word.

        ``bits`` must have exactly the region's length.  Writers for distinct
        regions touch disjoint word ranges, so parallel construction is safe.
        """
        n = int(self.region_nbits[r])
        if len(bits) != n:
            raise BuildError(f"region {r} holds {n} bits, got {len(bits)}")
        if n == 0:
            return
        off_w = self.region_word_offset(r)
        if workers > 1 and n >= PARALLEL_MIN_BITS:
            from concurrent.futures import ThreadPoolExecutor

            # Split on 64-bit boundaries so workers write disjoint words.
            step = -(-n // workers)
            step = (step + 63) & ~63
            spans = [(a, min(a + step, n)) for a in range(0, n, step)]
            with ThreadPoolExecutor(max_workers=len(spans)) as ex:
                list(ex.map(lambda ab: self._pack_span(off_w, bits, *ab), spans))
        else:
            self._pack_span(off_w, bits, 0, n)

    def _pack_span(self, off_w: int, bits: np.ndarray, a: int, b: int) -> None:
        packed = np.packbits(bits[a:b].astype(np.uint8, copy=False),
                             bitorder="little")
        if len(packed) & 7:
            packed = np.concatenate(
                [packed, np.zeros(8 - (len(packed) & 7), np.uint8)])
        chunk = packed.view("<u8")
        w0 = off_w + (a >> 6)
        self.words[w0:w0 + len(chunk)] = chunk

    def __eq__(self, other) -> bool:
        return (isinstance(other, BitArray)
                and np.array_equal(self.words, other.words)
                and np.array_equal(self.region_offsets, other.region_offsets)
                and np.array_equal(self.region_nbits, other.region_nbits))


def build_bit_array(region_bit_lengths: Sequence[int]) -> BitArray:
    """Allocate one zero-initialized array holding all requested regions.

    Region ``i`` starts at the cumulative cache-line-aligned offset; region 0
    starts at bit 0.
    """
    offsets = []
    cursor = 0
    for length in region_bit_lengths:
        length = int(length)
        if length < 0:
            raise BuildError(f"negative region length {length}")
        offsets.append(cursor)
        cursor = _align_up(cursor + length)
        if cursor > _MAX_TOTAL_BITS:
            raise BuildError(f"total bit count {cursor} exceeds the supported maximum")
    if len(region_bit_lengths):
        span = offsets[-1] + int(region_bit_lengths[-1])
    else:
        span = 0
    words = np.zeros((span + WORD_BITS - 1) >> 6, dtype=np.uint64)
    return BitArray(words,
                    np.asarray(offsets, dtype=np.int64),
                    np.asarray(region_bit_lengths, dtype=np.int64))
