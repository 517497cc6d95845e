"""Adaptive bit-plane binary arithmetic coding of quantized coefficients.

Each block is coded in isolation (contexts reset per block) so the coded
length of a block is a pure function of its indices, which is what the
binary-tree optimizer needs for real-bitrate evaluation.

Per block, with indices taken in zigzag scan order:

1. ``L`` = 1 + position of the last nonzero index (0 for an empty block),
   binarized as a unary bit-length prefix followed by the mantissa bits.
2. ``M`` = number of magnitude bit planes, unary with a cap.
3. For each plane from most significant down, every scan position ``< L``
   gets a significance bit (if not yet significant, followed by a sign bit
   on becoming significant) or a refinement bit.

The binary coder keeps 16-bit ``low``/``high`` registers with the usual
three-way renormalization, and 12-bit probabilities estimated from
Krichevsky-Trofimov counts.  Termination emits two bits plus pending bits so
the decoder may read arbitrary data past the end of a segment; the decoder
therefore recovers the exact segment length from its own renormalization
count.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .transform import zigzag_scan

STATE_BITS = 16
PROB_BITS = 12
MAX_PLANES = 24
N_BANDS = 8
COUNT_LIMIT = 1024

_FULL = 1 << STATE_BITS
_HALF = _FULL >> 1
_QUARTER = _HALF >> 1
_MASK = _FULL - 1


class CoefficientRangeError(ValueError):
    pass


# context layout
_CTX_LEN = 0
_CTX_LSB = _CTX_LEN + 16
_CTX_PLANES = _CTX_LSB + 16
_CTX_SIGN = _CTX_PLANES + MAX_PLANES
_CTX_REF = _CTX_SIGN + 1
_CTX_SIG = _CTX_REF + MAX_PLANES
N_CONTEXTS = _CTX_SIG + MAX_PLANES * N_BANDS * 2


@numba.njit(cache=True, inline="always")
def _band(pos):
    b = 0
    while pos > 0 and b < N_BANDS - 1:
        pos >>= 1
        b += 1
    return b


@numba.njit(cache=True, inline="always")
def _bit_length(v):
    b = 0
    while v > 0:
        v >>= 1
        b += 1
    return b


@numba.njit(cache=True)
def _p0(c0, c1, ctx):
    p = (c0[ctx] << PROB_BITS) // (c0[ctx] + c1[ctx])
    if p < 1:
        p = 1
    elif p > (1 << PROB_BITS) - 1:
        p = (1 << PROB_BITS) - 1
    return p


@numba.njit(cache=True)
def _adapt(c0, c1, ctx, bit):
    if bit:
        c1[ctx] += 2
    else:
        c0[ctx] += 2
    if c0[ctx] + c1[ctx] > COUNT_LIMIT:
        c0[ctx] = (c0[ctx] + 1) >> 1
        c1[ctx] = (c1[ctx] + 1) >> 1


@numba.njit(cache=True)
def _emit(out, nbits, bit, pending, write):
    if write:
        out[nbits] = bit
    nbits += 1
    for _ in range(pending):
        if write:
            out[nbits] = 1 - bit
        nbits += 1
    return nbits


@numba.njit(cache=True)
def _encode_bit(state, c0, c1, out, ctx, bit, write):
    # state: low, high, pending, nbits
    low = state[0]
    high = state[1]
    rng = high - low + 1
    split = low + ((rng * _p0(c0, c1, ctx)) >> PROB_BITS)
    if bit:
        low = split
    else:
        high = split - 1
    pending = state[2]
    nbits = state[3]
    while True:
        if high < _HALF:
            nbits = _emit(out, nbits, 0, pending, write)
            pending = 0
        elif low >= _HALF:
            nbits = _emit(out, nbits, 1, pending, write)
            pending = 0
            low -= _HALF
            high -= _HALF
        elif low >= _QUARTER and high < _HALF + _QUARTER:
            pending += 1
            low -= _QUARTER
            high -= _QUARTER
        else:
            break
        low = low << 1
        high = (high << 1) | 1
    state[0] = low
    state[1] = high
    state[2] = pending
    state[3] = nbits
    _adapt(c0, c1, ctx, bit)


@numba.njit(cache=True)
def _finish(state, out, write):
    pending = state[2] + 1
    if state[0] < _QUARTER:
        nbits = _emit(out, state[3], 0, pending, write)
    else:
        nbits = _emit(out, state[3], 1, pending, write)
    state[3] = nbits
    return nbits


@numba.njit(cache=True)
def _encode_block(scanned, out, write):
    c0 = np.ones(N_CONTEXTS, dtype=np.int64)
    c1 = np.ones(N_CONTEXTS, dtype=np.int64)
    state = np.zeros(4, dtype=np.int64)
    state[1] = _MASK
    count = scanned.size

    last = 0
    peak = 0
    for pos in range(count):
        v = scanned[pos]
        if v != 0:
            last = pos + 1
            a = v if v > 0 else -v
            if a > peak:
                peak = a

    # end-of-block position
    nl = _bit_length(last)
    for k in range(nl):
        _encode_bit(state, c0, c1, out, _CTX_LEN + k, 1, write)
    if nl < _bit_length(count):
        _encode_bit(state, c0, c1, out, _CTX_LEN + nl, 0, write)
    for b in range(nl - 2, -1, -1):
        _encode_bit(state, c0, c1, out, _CTX_LSB + b, (last >> b) & 1, write)
    if last == 0:
        return _finish(state, out, write)

    planes = _bit_length(peak)
    for k in range(planes - 1):
        _encode_bit(state, c0, c1, out, _CTX_PLANES + k, 1, write)
    if planes < MAX_PLANES:
        _encode_bit(state, c0, c1, out, _CTX_PLANES + planes - 1, 0, write)

    sig = np.zeros(last, dtype=np.uint8)
    for plane in range(planes - 1, -1, -1):
        for pos in range(last):
            v = scanned[pos]
            a = v if v > 0 else -v
            bit = (a >> plane) & 1
            if sig[pos]:
                _encode_bit(state, c0, c1, out, _CTX_REF + plane, bit, write)
                continue
            if plane == 0 and pos == last - 1:
                # the last position is nonzero by construction
                bit = 1
            else:
                nbr = 1 if pos > 0 and sig[pos - 1] else 0
                ctx = _CTX_SIG + (plane * N_BANDS + _band(pos)) * 2 + nbr
                _encode_bit(state, c0, c1, out, ctx, bit, write)
            if bit:
                sig[pos] = 1
                _encode_bit(state, c0, c1, out, _CTX_SIGN, 1 if v < 0 else 0, write)
    return _finish(state, out, write)


@numba.njit(cache=True)
def _read(bits, pos, end):
    if pos < end:
        return bits[pos]
    return 0


@numba.njit(cache=True)
def _decode_bit(state, c0, c1, bits, end, ctx):
    # state: low, high, value, read position, renormalization count
    low = state[0]
    high = state[1]
    value = state[2]
    rng = high - low + 1
    split = low + ((rng * _p0(c0, c1, ctx)) >> PROB_BITS)
    if value < split:
        bit = 0
        high = split - 1
    else:
        bit = 1
        low = split
    pos = state[3]
    steps = state[4]
    while True:
        if high < _HALF:
            pass
        elif low >= _HALF:
            low -= _HALF
            high -= _HALF
            value -= _HALF
        elif low >= _QUARTER and high < _HALF + _QUARTER:
            low -= _QUARTER
            high -= _QUARTER
            value -= _QUARTER
        else:
            break
        low = low << 1
        high = (high << 1) | 1
        value = (value << 1) | _read(bits, pos, end)
        pos += 1
        steps += 1
    state[0] = low
    state[1] = high
    state[2] = value
    state[3] = pos
    state[4] = steps
    _adapt(c0, c1, ctx, bit)
    return bit


@numba.njit(cache=True)
def _decode_block(bits, start, end, count, scanned):
    c0 = np.ones(N_CONTEXTS, dtype=np.int64)
    c1 = np.ones(N_CONTEXTS, dtype=np.int64)
    state = np.zeros(5, dtype=np.int64)
    state[1] = _MASK
    value = 0
    for k in range(STATE_BITS):
        value = (value << 1) | _read(bits, start + k, end)
    state[2] = value
    state[3] = start + STATE_BITS

    max_nl = _bit_length(count)
    nl = 0
    while nl < max_nl and _decode_bit(state, c0, c1, bits, end, _CTX_LEN + nl):
        nl += 1
    last = 0
    if nl > 0:
        last = 1
        for b in range(nl - 2, -1, -1):
            last = (last << 1) | _decode_bit(state, c0, c1, bits, end, _CTX_LSB + b)
    for pos in range(count):
        scanned[pos] = 0
    if last > count:
        return -1
    if last == 0:
        return state[4] + 2

    planes = 1
    while planes < MAX_PLANES and _decode_bit(state, c0, c1, bits, end, _CTX_PLANES + planes - 1):
        planes += 1

    sig = np.zeros(last, dtype=np.uint8)
    mag = np.zeros(last, dtype=np.int64)
    neg = np.zeros(last, dtype=np.uint8)
    for plane in range(planes - 1, -1, -1):
        for pos in range(last):
            if sig[pos]:
                mag[pos] |= _decode_bit(state, c0, c1, bits, end, _CTX_REF + plane) << plane
                continue
            if plane == 0 and pos == last - 1:
                bit = 1
            else:
                nbr = 1 if pos > 0 and sig[pos - 1] else 0
                ctx = _CTX_SIG + (plane * N_BANDS + _band(pos)) * 2 + nbr
                bit = _decode_bit(state, c0, c1, bits, end, ctx)
            if bit:
                sig[pos] = 1
                mag[pos] = 1 << plane
                neg[pos] = _decode_bit(state, c0, c1, bits, end, _CTX_SIGN)
    for pos in range(last):
        scanned[pos] = -mag[pos] if neg[pos] else mag[pos]
    return state[4] + 2


def _scan(indices) -> tuple[np.ndarray, int]:
    q = np.asarray(indices, dtype=np.int64).ravel()
    n = math.isqrt(q.size)
    if n * n != q.size:
        raise ValueError(f"expected n*n indices, got {q.size}")
    if q.size and np.abs(q).max() >= 1 << MAX_PLANES:
        raise CoefficientRangeError(f"quantization index magnitude must stay below 2**{MAX_PLANES}")
    return np.ascontiguousarray(q[zigzag_scan(n)]), n


def _max_bits(count: int) -> int:
    # 2 bits (sign/significance + refinement) per position per plane, plus headers
    return count * (MAX_PLANES + 2) * 2 + 256


def arith_encode_planes(indices) -> np.ndarray:
    """Code one block of quantization indices (raster order); returns a 0/1 bit array."""
    scanned, _ = _scan(indices)
    out = np.empty(_max_bits(scanned.size), dtype=np.uint8)
    nbits = _encode_block(scanned, out, True)
    return out[:nbits].copy()


def arith_decode_planes(bits, count: int, start: int = 0, end: int | None = None) -> tuple[np.ndarray, int]:
    """Decode ``count`` raster-order indices from a 0/1 bit array.

    Returns the indices and the number of bits the encoder produced for them.
    Bits at or past ``end`` read as zero.
    """
    n = math.isqrt(count)
    if n * n != count:
        raise ValueError(f"count must be a square, got {count}")
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    end = bits.size if end is None else end
    scanned = np.empty(count, dtype=np.int64)
    used = _decode_block(bits, start, end, count, scanned)
    if used < 0:
        raise ValueError("corrupt coefficient segment")
    out = np.empty(count, dtype=np.int64)
    out[zigzag_scan(n)] = scanned
    return out, int(used)


_SCRATCH = np.empty(0, dtype=np.uint8)


def measure_block_rate(indices) -> int:
    """Exact number of bits :func:`arith_encode_planes` emits for this block."""
    scanned, _ = _scan(indices)
    return int(_encode_block(scanned, _SCRATCH, False))


def measure_block_rates(indices_2d: np.ndarray, n: int) -> np.ndarray:
    """Vector of block rates for stacked raster index vectors ``(m, n*n)``."""
    zz = zigzag_scan(n)
    q = np.ascontiguousarray(np.asarray(indices_2d, dtype=np.int64).reshape(-1, n * n)[:, zz])
    if q.size and np.abs(q).max() >= 1 << MAX_PLANES:
        raise CoefficientRangeError(f"quantization index magnitude must stay below 2**{MAX_PLANES}")
    return _rates_many(q, np.empty(0, dtype=np.uint8))


@numba.njit(cache=True)
def _rates_many(q, scratch):
    out = np.empty(q.shape[0], dtype=np.int64)
    for m in range(q.shape[0]):
        out[m] = _encode_block(q[m], scratch, False)
    return out
