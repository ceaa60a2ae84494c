import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wtindex import (
    OrdinalError,
    PositionError,
    RankSelectParams,
    build_index,
    select_in_word,
)
from helpers import bit_array_of, uniform_bits


def make_index(bits, l2_bits=512, sample_rate=16384, workers=1):
    ba = bit_array_of(bits)
    return build_index(ba, 0, RankSelectParams(l2_bits=l2_bits,
                                               sample_rate=sample_rate), workers)


def test_params_validation():
    with pytest.raises(ValueError):
        RankSelectParams(l1_bits=1024)
    with pytest.raises(ValueError):
        RankSelectParams(l2_bits=100)
    with pytest.raises(ValueError):
        RankSelectParams(l2_bits=32)
    with pytest.raises(ValueError):
        RankSelectParams(sample_rate=0)
    p = RankSelectParams()
    assert (p.l1_bits, p.l2_bits, p.sample_rate) == (65536, 512, 16384)


def test_all_zeros_three_l1_blocks():
    n = 65536 * 3
    idx = make_index(np.zeros(n, np.uint8))
    assert idx.l1_counts.tolist() == [0, 0, 0]
    assert not idx.l2_counts.any()
    assert idx.total_ones == 0
    assert len(idx.one_samples) == 0
    # the k*16384-th zero of an all-zeros array sits at position k*16384 - 1
    assert idx.zero_samples.tolist() == [16384 * k - 1 for k in range(1, n // 16384 + 1)]


def test_all_ones_saturated_l2():
    n = 2048
    idx = make_index(np.ones(n, np.uint8))
    assert idx.l1_counts.tolist() == [0]
    assert idx.l2_counts.tolist() == [0, 512, 1024, 1536]
    assert idx.total_ones == n
    assert idx.rank1(n) == n
    for k in (1, 5, 512, 2048):
        assert idx.select1(k) == k - 1


def test_directory_matches_linear_scan():
    rng = np.random.default_rng(42)
    bits = uniform_bits(rng, 200_000, 0.5)
    idx = make_index(bits)
    csum = np.concatenate([[0], np.cumsum(bits, dtype=np.int64)])
    for b in range(len(idx.l1_counts)):
        assert idx.l1_counts[b] == csum[b * 65536]
    for j in range(len(idx.l2_counts)):
        assert idx.l2_counts[j] == csum[j * 512] - csum[(j >> 7) << 16]


def test_rank_examples():
    # positions listed LSB-order: bit 0 first
    bits = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1]
    idx = make_index(np.array(bits, np.uint8))
    assert idx.rank1(0) == 0
    assert idx.rank1(6) == 3
    assert idx.rank1(10) == idx.total_ones == 6
    assert idx.rank0(10) == 4
    assert idx.select1(4) == 6


def test_rank_select_against_oracle_random():
    rng = np.random.default_rng(3)
    bits = uniform_bits(rng, 200_000, 0.3)
    idx = make_index(bits, sample_rate=4096)
    csum = np.concatenate([[0], np.cumsum(bits, dtype=np.int64)])
    ones = np.flatnonzero(bits == 1)
    zeros = np.flatnonzero(bits == 0)
    pos = np.concatenate([rng.integers(0, len(bits) + 1, 1500),
                          [0, len(bits), 511, 512, 513, 65535, 65536, 65537]])
    for i in pos:
        i = int(i)
        assert idx.rank1(i) == csum[i]
        assert idx.rank0(i) == i - csum[i]
    assert np.array_equal(idx.rank1_bulk(pos), csum[pos])
    ks = np.concatenate([rng.integers(1, len(ones) + 1, 1500),
                         [1, len(ones), 4096, 4097]])
    for k in ks:
        assert idx.select1(int(k)) == ones[int(k) - 1]
    assert np.array_equal(idx.select1_bulk(ks), ones[ks - 1])
    kz = np.concatenate([rng.integers(1, len(zeros) + 1, 1500), [1, len(zeros)]])
    for k in kz:
        assert idx.select0(int(k)) == zeros[int(k) - 1]
    assert np.array_equal(idx.select0_bulk(kz), zeros[kz - 1])


def test_select_in_word_examples():
    for p in range(64):
        assert select_in_word(1 << p, 1) == p
    assert select_in_word(0b0110, 2) == 2
    rng = np.random.default_rng(99)
    for w in rng.integers(1, 1 << 64, 1000, dtype=np.uint64):
        w = int(w)
        positions = [i for i in range(64) if w >> i & 1]
        for k, p in enumerate(positions, start=1):
            assert select_in_word(w, k) == p


def test_rank_plus_rank0_is_identity_exhaustive():
    rng = np.random.default_rng(17)
    for n in (1, 63, 64, 65, 511, 512, 1024, 4096):
        bits = uniform_bits(rng, n, 0.5)
        idx = make_index(bits, sample_rate=64)
        for i in range(n + 1):
            assert idx.rank0(i) + idx.rank1(i) == i


def test_inverse_properties_small_sample_rate():
    rng = np.random.default_rng(23)
    bits = uniform_bits(rng, 9000, 0.4)
    idx = make_index(bits, sample_rate=64)
    for k in range(1, idx.total_ones + 1):
        p = idx.select1(k)
        assert idx.rank1(p) == k - 1
        assert idx.get_bit(p) == 1
    for k in range(1, idx.total_zeros + 1):
        p = idx.select0(k)
        assert idx.rank0(p) == k - 1
        assert idx.get_bit(p) == 0
    set_positions = np.flatnonzero(bits == 1)
    for p in set_positions[::7]:
        assert idx.select1(idx.rank1(int(p)) + 1) == p


def test_error_contracts():
    idx = make_index(np.array([1, 0, 1], np.uint8))
    with pytest.raises(OrdinalError):
        idx.select1(0)
    with pytest.raises(OrdinalError):
        idx.select1(3)
    with pytest.raises(OrdinalError):
        idx.select0(2)
    with pytest.raises(PositionError):
        idx.rank1(4)
    with pytest.raises(PositionError):
        idx.rank1(-1)


def test_empty_region():
    idx = make_index(np.zeros(0, np.uint8))
    assert idx.total_ones == 0
    assert idx.rank1(0) == 0
    assert idx.rank0(0) == 0
    with pytest.raises(OrdinalError):
        idx.select1(1)


def test_build_deterministic_across_workers():
    rng = np.random.default_rng(5)
    bits = uniform_bits(rng, 300_000, 0.5)
    payloads = []
    for workers in (1, 2, 8):
        idx = make_index(bits, sample_rate=4096, workers=workers)
        buf = io.BytesIO()
        idx.write(buf)
        payloads.append(buf.getvalue())
    assert payloads[0] == payloads[1] == payloads[2]


def test_overhead_close_to_directory_arithmetic():
    rng = np.random.default_rng(8)
    n = 10_000_000
    bits = uniform_bits(rng, n, 0.5)
    idx = make_index(bits, l2_bits=512, sample_rate=16384)
    rank_pct = idx.rank_support_bytes * 8 * 100 / n
    assert abs(rank_pct - 3.22) < 0.05
    combined = (idx.rank_support_bytes + idx.select_support_bytes) * 8 * 100 / n
    assert abs(combined - 3.6) < 0.1


@settings(max_examples=40)
@given(st.binary(min_size=1, max_size=600),
       st.sampled_from([64, 128, 512]),
       st.sampled_from([16, 100, 16384]))
def test_property_rank_select_match_scan(data, l2_bits, sample_rate):
    bits = np.frombuffer(data, np.uint8) & 1
    idx = make_index(bits, l2_bits=l2_bits, sample_rate=sample_rate)
    csum = np.concatenate([[0], np.cumsum(bits, dtype=np.int64)])
    n = len(bits)
    for i in range(0, n + 1, max(1, n // 50)):
        assert idx.rank1(i) == csum[i]
    ones = np.flatnonzero(bits == 1)
    for k in range(1, len(ones) + 1, max(1, len(ones) // 25)):
        assert idx.select1(k) == ones[k - 1]
    zeros = np.flatnonzero(bits == 0)
    for k in range(1, len(zeros) + 1, max(1, len(zeros) // 25)):
        assert idx.select0(k) == zeros[k - 1]
