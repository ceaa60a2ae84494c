"""Minimal alphabets, histograms, and the prefix codes of the reduced tree.

A text is remapped onto the minimal alphabet [0, sigma) with an
order-preserving bijection.  For alphabet sizes that are not a power of two,
the symbols at and above the previous power of two are reassigned shorter
prefix-free codes so that every internal tree node keeps two children; code
lengths are non-increasing in symbol order, which keeps terminated symbols
at the tail of every level after the stable prefix sort.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BuildError, SymbolError

# Largest symbol width supported; texts needing wider symbols are out of scope.
MAX_SIGMA = 1 << 16

# Below this many elements the thread fan-out costs more than it saves.
PARALLEL_MIN_ELEMENTS = 1 << 22

_PREV_POW: np.ndarray | None = None


def prev_pow_two(x: int) -> int:
    """Largest power of two strictly below ``x`` (1 for x <= 2)."""
    if x <= 2:
        return 1
    return 1 << (int(x - 1).bit_length() - 1)


def prev_pow_two_table() -> np.ndarray:
    """Lookup table of prev_pow_two for widths up to MAX_SIGMA."""
    global _PREV_POW
    if _PREV_POW is None:
        t = np.ones(MAX_SIGMA + 1, np.int64)
        for x in range(3, MAX_SIGMA + 1):
            t[x] = 1 << (int(x - 1).bit_length() - 1)
        _PREV_POW = t
    return _PREV_POW


def ceil_log2(sigma: int) -> int:
    """Number of tree levels for an alphabet of size sigma (0 for sigma=1)."""
    return int(sigma - 1).bit_length()


class AlphabetMap:
    """Order-preserving bijection between original symbols and [0, sigma)."""

    __slots__ = ("sorted_symbols", "_ids")

    def __init__(self, sorted_symbols: np.ndarray):
        self.sorted_symbols = sorted_symbols
        self._ids = {int(s): i for i, s in enumerate(sorted_symbols)}

    @property
    def size(self) -> int:
        return len(self.sorted_symbols)

    def __contains__(self, symbol: int) -> bool:
        return int(symbol) in self._ids

    def id_for(self, symbol: int) -> int:
        try:
            return self._ids[int(symbol)]
        except KeyError:
            raise SymbolError(f"symbol {symbol!r} is not in the alphabet") from None

    def symbol_for(self, sym_id: int) -> int:
        return int(self.sorted_symbols[sym_id])

    def map_text(self, text: np.ndarray) -> np.ndarray:
        """Map original symbols to minimal ids, rejecting unknown symbols."""
        ids = np.searchsorted(self.sorted_symbols, text)
        clipped = np.minimum(ids, self.size - 1)
        if not np.array_equal(self.sorted_symbols[clipped], text):
            bad = np.flatnonzero(self.sorted_symbols[clipped] != text)[0]
            raise SymbolError(
                f"symbol {int(text[bad])} at position {int(bad)} is not in the alphabet")
        return clipped.astype(np.uint16)

    def ids_bulk(self, symbols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Minimal ids plus a validity mask, without raising."""
        ids = np.searchsorted(self.sorted_symbols, symbols)
        clipped = np.minimum(ids, self.size - 1)
        ok = self.sorted_symbols[clipped] == symbols
        return clipped.astype(np.int64), ok


def minimal_alphabet(text: np.ndarray) -> tuple[np.ndarray, AlphabetMap]:
    """Remap ``text`` onto its minimal alphabet.

    Returns the mapped text (uint16 ids) and the alphabet map.
    """
    if len(text) == 0:
        raise BuildError("text must be non-empty")
    if text.dtype == np.uint8:
        # Counting pass beats a sort for byte texts.
        present = np.bincount(text, minlength=256) > 0
        symbols = np.flatnonzero(present).astype(np.uint8)
        lut = np.zeros(256, np.uint16)
        lut[symbols] = np.arange(len(symbols), dtype=np.uint16)
        return lut[text], AlphabetMap(symbols)
    symbols, inverse = np.unique(text, return_inverse=True)
    if len(symbols) > MAX_SIGMA:
        raise BuildError(f"alphabet size {len(symbols)} exceeds {MAX_SIGMA}")
    return inverse.astype(np.uint16), AlphabetMap(symbols)


@dataclass(frozen=True)
class Code:
    """A left-aligned code: the top ``length`` bits of ``value`` (in a
    ``total_bits``-wide field) are significant, the rest are zero."""

    value: int
    length: int


class CodeTable:
    """Per-symbol path words for an alphabet of size sigma.

    Symbols below ``first_coded`` keep their plain binary in a
    ``total_bits``-wide field; symbols at or above it carry explicit shorter
    codes.  For power-of-two alphabets the explicit part is empty and the
    table is trivial.
    """

    __slots__ = ("sigma", "total_bits", "first_coded", "values", "lens")

    def __init__(self, sigma: int, total_bits: int, first_coded: int,
                 values: np.ndarray, lens: np.ndarray):
        self.sigma = sigma
        self.total_bits = total_bits
        self.first_coded = first_coded
        self.values = values
        self.lens = lens

    @property
    def is_trivial(self) -> bool:
        return self.first_coded == self.sigma

    @property
    def num_explicit(self) -> int:
        return self.sigma - self.first_coded

    def code(self, sym_id: int) -> Code:
        return Code(int(self.values[sym_id]), int(self.lens[sym_id]))

    def length(self, sym_id: int) -> int:
        return int(self.lens[sym_id])

    def explicit_items(self) -> list[tuple[int, Code]]:
        return [(s, self.code(s)) for s in range(self.first_coded, self.sigma)]


def create_codes(sigma: int) -> CodeTable:
    """Assign prefix-free codes producing the reduced tree shape.

    Power-of-two alphabets need no rewriting.  Otherwise the alphabet is
    consumed from the right spine: complete power-of-two subtrees are
    stripped off, and the remaining tail either becomes a single all-ones
    short code or a block of equal-length codes, until the shortest code
    length reaches one.  Entries start out as the symbol's plain binary so
    earlier iterations' high bits survive the rewrite of later ones.
    """
    if sigma < 1:
        raise BuildError(f"alphabet size must be positive, got {sigma}")
    total_bits = ceil_log2(sigma)
    values = np.arange(sigma, dtype=np.uint16)
    lens = np.full(sigma, total_bits, np.uint8)
    if sigma & (sigma - 1) == 0:
        return CodeTable(sigma, total_bits, sigma, values, lens)

    first_coded = prev_pow_two(sigma)
    alphabet_start_bit = total_bits - 1
    start_bit = 0
    start_i = 0
    code_len = total_bits
    num_codes = sigma
    while True:
        i = code_len - 1
        while i >= 1:
            pow_two = 1 << i
            if num_codes <= pow_two:
                break
            num_codes -= pow_two
            start_i += pow_two
            start_bit += 1
            i -= 1
        if num_codes == 1:
            code_len = 1
            lens[sigma - 1] = start_bit
            values[sigma - 1] = ((1 << start_bit) - 1) << (alphabet_start_bit + 1 - start_bit)
        else:
            code_len = ceil_log2(num_codes)
            keep_high = ~((1 << (total_bits - start_bit)) - 1)
            for s in range(sigma - num_codes, sigma):
                local = (s - start_i) << (total_bits - start_bit - code_len)
                values[s] = local + (keep_high & int(values[s]))
                lens[s] = start_bit + code_len
        if code_len == 1:
            break
    return CodeTable(sigma, total_bits, first_coded, values, lens)


def encode_and_histogram(text_ids: np.ndarray, codes: CodeTable,
                         workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Replace minimal symbols by their path words while histogramming.

    Histogram counts refer to the minimal symbols, not the code words.  The
    text may be partitioned across workers with per-worker histograms merged
    at the end; the result does not depend on the partitioning.
    """
    sigma = codes.sigma
    if len(text_ids) and int(text_ids.max()) >= sigma:
        bad = int(np.argmax(text_ids >= sigma))
        raise SymbolError(f"symbol id {int(text_ids[bad])} outside [0, {sigma})")
    encoded = np.empty(len(text_ids), np.uint16)
    hist = np.zeros(sigma, np.int64)
    if workers > 1 and len(text_ids) >= PARALLEL_MIN_ELEMENTS:
        from concurrent.futures import ThreadPoolExecutor

        step = -(-len(text_ids) // workers)
        spans = [(a, min(a + step, len(text_ids)))
                 for a in range(0, len(text_ids), step)]

        def work(span):
            a, b = span
            encoded[a:b] = codes.values[text_ids[a:b]]
            return np.bincount(text_ids[a:b], minlength=sigma).astype(np.int64)

        with ThreadPoolExecutor(max_workers=len(spans)) as ex:
            for part in ex.map(work, spans):
                hist += part
    else:
        encoded[:] = codes.values[text_ids]
        hist += np.bincount(text_ids, minlength=sigma).astype(np.int64)
    return encoded, hist


def cumulative_histogram(hist: np.ndarray) -> np.ndarray:
    """Exclusive prefix sum with a trailing total: sigma + 1 entries."""
    out = np.zeros(len(hist) + 1, np.int64)
    np.cumsum(hist, out=out[1:])
    return out


def level_sizes(codes: CodeTable, hist: np.ndarray) -> np.ndarray:
    """Bits per tree level: symbols whose code is exhausted stop contributing."""
    num_levels = ceil_log2(codes.sigma)
    if num_levels == 0:
        return np.zeros(0, np.int64)
    per_len = np.zeros(num_levels + 1, np.int64)
    np.add.at(per_len, codes.lens.astype(np.intp), hist)
    # size[l] = sum of counts of symbols with code length > l
    suffix = np.cumsum(per_len[::-1])[::-1]
    return suffix[1:num_levels + 1].copy()
