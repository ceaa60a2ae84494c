"""Shared test utilities: bit distributions and independent reference builders.

Everything here is deliberately written against the query definitions, not
against the production code paths, so it can serve as an arbiter.
"""

import numpy as np

from wtindex import build_bit_array
from wtindex.oracle import _prev_pow_two


def uniform_bits(rng, n, fill):
    """Random 0/1 array with an expected fraction ``fill`` of ones."""
    return (rng.random(n) < fill).astype(np.uint8)


def adversarial_bits(rng, n, fill_pct):
    """Concentrate 99% of the ones in the last fill_pct% of the array.

    The remaining one percent of the ones lands in the leading
    (100 - fill_pct)% of positions.
    """
    total_ones = n * fill_pct // 100
    tail_start = n - n * fill_pct // 100
    tail_ones = total_ones * 99 // 100
    head_ones = total_ones - tail_ones
    bits = np.zeros(n, np.uint8)
    tail_positions = rng.choice(n - tail_start, size=min(tail_ones, n - tail_start),
                                replace=False)
    bits[tail_start + tail_positions] = 1
    if tail_start > 0 and head_ones:
        head_positions = rng.choice(tail_start, size=min(head_ones, tail_start),
                                    replace=False)
        bits[head_positions] = 1
    return bits


def bit_array_of(bits):
    """Single-region BitArray holding ``bits``."""
    ba = build_bit_array([len(bits)])
    if len(bits):
        ba.fill_region(0, np.asarray(bits, np.uint8))
    return ba


def reference_level_bits(text_ids, sigma):
    """Per-level bit lists built by direct recursion over node intervals.

    Splits [a, b) at a + prevPowTwo(b - a), emitting one bit per occurrence
    in text order within each node and concatenating nodes left to right.
    Completely independent of the construction pipeline.
    """
    levels = []

    def descend(seq, a, b, level):
        if b - a <= 1 or not seq:
            return
        while len(levels) <= level:
            levels.append([])
        p = _prev_pow_two(b - a)
        split = a + p
        bits = [1 if s >= split else 0 for s in seq]
        levels[level].extend(bits)
        descend([s for s in seq if s < split], a, split, level + 1)
        descend([s for s in seq if s >= split], split, b, level + 1)

    descend(list(text_ids), 0, sigma, 0)
    return levels


def full_depth_access(tree, i):
    """Access by descending to a width-1 interval, with no early exit."""
    if tree.num_levels == 0:
        return tree.alphabet.symbol_for(0)
    start, end = 0, tree.sigma
    level = 0
    while end - start > 1:
        counts = int(tree.cum_hist[start])
        rs = tree.rs[level]
        zeros_node = rs.rank0(counts)
        zeros_here = rs.rank0(counts + i)
        bit = rs.get_bit(counts + i)
        p = _prev_pow_two(end - start)
        if bit:
            i -= zeros_here - zeros_node
            start += p
        else:
            i = zeros_here - zeros_node
            end = start + p
        level += 1
    return tree.alphabet.symbol_for(start)


def decode_by_walk(code_value, code_len, sigma, total_bits):
    """Walk a left-aligned code through node intervals; return the leaf symbol."""
    a, b = 0, sigma
    for depth in range(code_len):
        bit = code_value >> (total_bits - 1 - depth) & 1
        p = _prev_pow_two(b - a)
        if bit:
            a = a + p
        else:
            b = a + p
        if b - a < 1:
            raise AssertionError("walk left the tree")
    if b - a != 1:
        raise AssertionError(f"code does not land on a leaf: [{a}, {b})")
    return a
