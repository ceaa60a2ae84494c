"""Brute-force reference implementations.

These are deliberately naive linear scans of the query definitions, kept
independent of the production data structures (including their helpers) so
tests can use them as arbiters.  They ship with the library so downstream
users can property-test their own integrations; none of the production code
paths consult them.
"""

from __future__ import annotations

from .errors import OrdinalError, PositionError, SymbolError


def _prev_pow_two(x: int) -> int:
    p = 1
    while p * 2 < x:
        p *= 2
    return p


def naive_rank_bits(bits, i: int, value: int = 1) -> int:
    """Count of ``value`` bits in bits[0:i] by linear scan."""
    if not 0 <= i <= len(bits):
        raise PositionError(f"position {i} outside [0, {len(bits)}]")
    return sum(1 for b in bits[:i] if b == value)

def naive_select_bits(bits, k: int, value: int = 1) -> int:
    """0-based position of the k-th ``value`` bit (k >= 1) by linear scan."""
    if k >= 1:
        seen = 0
        for pos, b in enumerate(bits):
            if b == value:
                seen += 1
                if seen == k:
                    return pos
    raise OrdinalError(f"ordinal {k} out of range")


def naive_access(text, i: int):
    if not 0 <= i < len(text):
        raise PositionError(f"position {i} outside [0, {len(text)})")
    return text[i]


def naive_rank(text, c, i: int) -> int:
    """Occurrences of c in text[0:i] by linear scan."""
    if not 0 <= i <= len(text):
        raise PositionError(f"position {i} outside [0, {len(text)}]")
    return sum(1 for s in text[:i] if s == c)


def naive_select(text, c, k: int) -> int:
    """0-based position of the k-th occurrence of c (k >= 1) by linear scan."""
    if k >= 1:
        seen = 0
        for pos, s in enumerate(text):
            if s == c:
                seen += 1
                if seen == k:
                    return pos
    raise OrdinalError(f"ordinal {k} out of range for symbol {c!r}")


def naive_tree_shape(sigma: int) -> list[list[tuple[int, int]]]:
    """Node intervals per level of the reduced tree.

    Every interval [a, b) splits at a + prevPowTwo(b - a); single-symbol
    intervals are leaves and do not recurse.  Level 0 is the root.
    """
    if sigma < 1:
        raise SymbolError(f"alphabet size must be positive, got {sigma}")
    levels = []
    current = [(0, sigma)]
    while current:
        levels.append(current)
        nxt = []
        for a, b in current:
            if b - a >= 2:
                p = _prev_pow_two(b - a)
                nxt.append((a, a + p))
                nxt.append((a + p, b))
        current = nxt
    return levels
