"""Rate-distortion functional shared by the angle optimizers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .entropy import measure_block_rate
from .transform import AngleVector, SdctBasis, _samples, as_block, build_sdct, dct2, inverse, num_pairs

DEFAULT_ALPHA = 8.0


class AngleRateMode(enum.Enum):
    AM_INDEXED = "am"
    BT_TREE = "bt"


@dataclass(frozen=True)
class RdParams:
    lam: float
    alpha: float = DEFAULT_ALPHA
    q_theta: int = 8
    coeff_step: float = 1.0
    angle_mode: AngleRateMode = AngleRateMode.AM_INDEXED

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.q_theta < 2:
            raise ValueError(f"q_theta must be >= 2, got {self.q_theta}")
        if not self.coeff_step > 0:
            raise ValueError(f"coeff_step must be > 0, got {self.coeff_step}")

    @property
    def angle_bits(self) -> int:
        return math.ceil(math.log2(self.q_theta))

    def with_(self, **changes) -> "RdParams":
        fields = dict(self.__dict__)
        fields.update(changes)
        return RdParams(**fields)


@dataclass(frozen=True)
class RdBreakdown:
    distortion: float
    rate_coeffs: float
    rate_angles: float
    lam: float
    num_subbands: int
    nonzeros: int

    @property
    def J(self) -> float:
        return self.distortion + self.lam * (self.rate_coeffs + self.rate_angles)


def distortion(block, basis: SdctBasis, coeffs) -> float:
    """Squared reconstruction error of ``coeffs`` under ``basis``."""
    x = _samples(block, basis.n).reshape(-1)
    c = np.asarray(coeffs, dtype=np.float64)
    if c.size != x.size:
        raise ValueError("coefficient vector does not match block size")
    r = x - inverse(basis, c)
    return float(r @ r)


def rate_coeffs_model(coeffs, params: RdParams) -> float:
    return params.alpha * float(np.count_nonzero(coeffs))


def count_subbands(indices) -> int:
    """Number of constant runs in the angle vector; 0 for the all-zero vector.

    The all-zero vector is the plain DCT, which is signalled by the block
    mode flag and carries no angle information.
    """
    idx = np.asarray(indices)
    if idx.size == 0 or not idx.any():
        return 0
    return 1 + int(np.count_nonzero(idx[1:] != idx[:-1]))


def angle_rate_for_subbands(s: int, p: int, params: RdParams) -> float:
    if s == 0:
        return 0.0
    if params.angle_mode is AngleRateMode.AM_INDEXED:
        return float(s * (params.angle_bits + math.ceil(math.log2(p))))
    return float(s * params.angle_bits + 2 * s - 1)


def rate_angles(angles: AngleVector, params: RdParams, num_subbands: int | None = None) -> float:
    """Side-information bits for the angle vector.

    ``num_subbands`` overrides the run count, which the binary-tree mode
    needs because adjacent tree leaves may carry equal angles.
    """
    s = count_subbands(angles.indices) if num_subbands is None else num_subbands
    if angles.is_zero():
        s = 0
    return angle_rate_for_subbands(s, angles.p, params)


def hard_threshold(values, threshold: float) -> np.ndarray:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    v = np.asarray(values, dtype=np.float64)
    return np.where(np.abs(v) > threshold, v, 0.0)


def quantize_indices(values, step: float) -> np.ndarray:
    """Nearest multiple of ``step`` as an integer index, ties toward zero."""
    v = np.asarray(values, dtype=np.float64) / step
    return (np.sign(v) * np.ceil(np.abs(v) - 0.5)).astype(np.int64)


def quantize_coeffs(values, params: RdParams) -> np.ndarray:
    return quantize_indices(values, params.coeff_step) * params.coeff_step


def quantize_angle_index(value: float, params: RdParams) -> int:
    """Grid index of the nearest angle in ``{i*pi/q}``; angles are taken mod pi."""
    q = params.q_theta
    u = (float(value) % math.pi) / (math.pi / q)
    i = math.ceil(u - 0.5)
    return i % q


def quantize_angle(value: float, params: RdParams) -> float:
    return quantize_angle_index(value, params) * math.pi / params.q_theta


def evaluate_J(block, angles: AngleVector, coeffs, params: RdParams, num_subbands: int | None = None) -> RdBreakdown:
    basis = build_sdct(angles.n, angles)
    d = distortion(block, basis, coeffs)
    s = count_subbands(angles.indices) if num_subbands is None else num_subbands
    if angles.is_zero():
        s = 0
    return RdBreakdown(
        distortion=d,
        rate_coeffs=rate_coeffs_model(coeffs, params),
        rate_angles=angle_rate_for_subbands(s, angles.p, params),
        lam=params.lam,
        num_subbands=s,
        nonzeros=int(np.count_nonzero(coeffs)),
    )


def estimate_alpha(block, params: RdParams, default: float = DEFAULT_ALPHA) -> float:
    """Twice the measured bits per nonzero of the block's quantized plain DCT."""
    x = as_block(block)
    q = quantize_indices(dct2(x), params.coeff_step)
    return alpha_from_rate(measure_block_rate(q), int(np.count_nonzero(q)), default)


def alpha_from_rate(bits: float, nonzeros: int, default: float = DEFAULT_ALPHA) -> float:
    if nonzeros == 0:
        return default
    return 2.0 * bits / nonzeros


__all__ = [
    "AngleRateMode",
    "RdParams",
    "RdBreakdown",
    "distortion",
    "rate_coeffs_model",
    "count_subbands",
    "rate_angles",
    "hard_threshold",
    "quantize_coeffs",
    "quantize_indices",
    "quantize_angle",
    "quantize_angle_index",
    "evaluate_J",
    "estimate_alpha",
    "alpha_from_rate",
    "num_pairs",
]
