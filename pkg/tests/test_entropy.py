import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage import data

from sdct.entropy import (
    CoefficientRangeError,
    MAX_PLANES,
    arith_decode_planes,
    arith_encode_planes,
    measure_block_rate,
    measure_block_rates,
)
from sdct.rd import quantize_indices
from sdct.transform import dct2

# measured once from the coder: termination plus the empty-length symbol
ZERO_BLOCK_BITS = 3


def blocks(n):
    small = st.integers(-5, 5)
    wide = st.integers(-(2**15), 2**15)
    return st.lists(st.one_of(small, small, wide), min_size=n * n, max_size=n * n).map(np.array)


@pytest.mark.parametrize("n", [4, 8])
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_round_trip_and_exact_length(n, data):
    q = data.draw(blocks(n))
    bits = arith_encode_planes(q)
    assert bits.size == measure_block_rate(q)
    dec, used = arith_decode_planes(bits, n * n)
    assert np.array_equal(dec, q)
    assert used == bits.size


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_segment_length_recovered_with_trailing_data(seed):
    rng = np.random.default_rng(seed)
    q = rng.integers(-3, 4, 64) * (rng.random(64) < 0.3)
    bits = arith_encode_planes(q)
    junk = rng.integers(0, 2, 50).astype(np.uint8)
    dec, used = arith_decode_planes(np.concatenate([bits, junk]), 64)
    assert np.array_equal(dec, q) and used == bits.size


@pytest.mark.parametrize("n", [8, 16, 32])
def test_zero_block_cost(n):
    assert measure_block_rate(np.zeros(n * n, dtype=int)) == ZERO_BLOCK_BITS


def test_dense_random_rate_near_raw():
    rng = np.random.default_rng(5)
    q = rng.integers(-128, 128, 256)
    raw = 256 * 9  # 8 magnitude bits + sign
    rate = measure_block_rate(q)
    assert 0.85 * raw < rate < 1.1 * raw


def test_sparse_natural_blocks_beat_fixed_length():
    img = data.camera().astype(float) - 128
    blocks = img[:256, :256].reshape(32, 8, 32, 8).swapaxes(1, 2).reshape(-1, 8, 8)
    q = quantize_indices(dct2(blocks), 16.0)
    rates = measure_block_rates(q, 8)
    raw = 64 * (int(np.abs(q).max()).bit_length() + 1)
    assert rates.sum() < 0.5 * raw * len(q)
    assert all(r == measure_block_rate(b) for r, b in zip(rates[:20], q[:20]))


def test_range_guard():
    q = np.zeros(16, dtype=np.int64)
    q[3] = 1 << MAX_PLANES
    with pytest.raises(CoefficientRangeError):
        measure_block_rate(q)
    with pytest.raises(ValueError):
        arith_encode_planes(np.zeros(15))
