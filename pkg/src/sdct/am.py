"""Alternated minimization of the RD functional over coefficients and angles.

Everything runs in the DCT coefficient domain: with ``d = V^T x`` and an
orthogonal ``V``, the distortion of coefficients ``c`` under angles
``theta`` is ``||x||^2 - 2 d^T R(theta) c + ||c||^2``.  For fixed ``c`` the
angle-dependent part splits over pairs as ``a_j cos(theta_j) + b_j sin(theta_j)``
with ``a_j = d_i c_i + d_k c_k`` and ``b_j = d_i c_k - d_k c_i`` (``i``/``k``
being the pair's two coefficient indices).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rd import AngleRateMode, RdBreakdown, RdParams, angle_rate_for_subbands, count_subbands, quantize_indices
from .transform import AngleVector, _samples, as_block, dct2, dct_2d_matrix, num_pairs, pair_indices, rotate

MAX_SWEEPS = 50


@dataclass
class AmState:
    angles: AngleVector
    coeffs: np.ndarray  # quantized coefficient values (multiples of the step)
    J_history: list[RdBreakdown] = field(default_factory=list)
    iterations: int = 0
    capped: bool = False

    @property
    def J(self) -> float:
        return self.J_history[-1].J


def _am_params(params: RdParams) -> RdParams:
    if params.angle_mode is AngleRateMode.AM_INDEXED:
        return params
    return params.with_(angle_mode=AngleRateMode.AM_INDEXED)


def coeffs_from_dct(d: np.ndarray, theta: np.ndarray, n: int, params: RdParams) -> np.ndarray:
    """Exact per-coefficient minimizer of ``(c - x)^2 + lam*alpha*[c != 0]`` over the grid.

    ``x = V(theta)^T I``.  The only candidates are 0 and the nearest grid
    point ``Q[x]``; the nonzero one is kept when its distortion saving
    exceeds ``lam*alpha``.  For a fine grid this is the hard threshold of
    ``Q[x]`` at ``sqrt(lam*alpha)``.
    """
    return rd_quantize_indices(rotate(d, theta, n), params) * params.coeff_step


def rd_quantize_indices(x, params: RdParams) -> np.ndarray:
    """Grid indices of the per-coefficient minimizer described in :func:`coeffs_from_dct`."""
    x = np.asarray(x, dtype=np.float64)
    q = quantize_indices(x, params.coeff_step)
    qx = q * params.coeff_step
    keep = x * x - (qx - x) ** 2 > params.lam * params.alpha
    return np.where(keep, q, 0)


def update_coeffs(block, angles: AngleVector, params: RdParams) -> np.ndarray:
    n = angles.n
    return coeffs_from_dct(dct2(_samples(block, n)), angles.radians, n, params)


def build_W(coeffs, n: int) -> np.ndarray:
    """``W(c)`` with ``V R~(theta) c = W(c) (cos t1, sin t1, ..., cos tp, sin tp)^T``."""
    c = np.asarray(coeffs, dtype=np.float64)
    v = dct_2d_matrix(n)
    i, k = pair_indices(n)
    w = np.empty((n * n, 2 * i.size))
    w[:, 0::2] = v[:, i] * c[i] + v[:, k] * c[k]
    w[:, 1::2] = v[:, i] * c[k] - v[:, k] * c[i]
    return w


def _pair_terms(d: np.ndarray, c: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    i, k = pair_indices(n)
    return d[i] * c[i] + d[k] * c[k], d[i] * c[k] - d[k] * c[i]


def stationary_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Continuous minimizer of the distortion over ``[0, pi]`` for each pair.

    The stationary point ``arctan(b / a)`` is compared with the end points
    0 and pi.
    """
    stat = np.mod(np.arctan2(b, a), np.pi)
    cands = np.stack([stat, np.zeros_like(stat), np.full_like(stat, np.pi)])
    gain = a * np.cos(cands) + b * np.sin(cands)
    return cands[np.argmax(gain, axis=0), np.arange(stat.size)]


def projected_angles(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Best grid index for each pair's distortion term.

    The distortion restricted to ``[0, pi]`` is a sinusoid over half a
    period, so the best grid point is one of the two grid points bracketing
    the continuous optimum, or one of the two extreme grid points.
    """
    best = stationary_angles(a, b)
    u = best / (np.pi / q)
    lo = np.minimum(np.floor(u), q - 1).astype(np.int64)
    hi = np.minimum(lo + 1, q - 1)
    cands = np.stack([lo, hi, np.zeros_like(lo), np.full_like(lo, q - 1)])
    ang = cands * (np.pi / q)
    gain = a * np.cos(ang) + b * np.sin(ang)
    return cands[np.argmax(gain, axis=0), np.arange(lo.size)]


def _breakdown(d, energy, idx, c, n, params: RdParams) -> RdBreakdown:
    theta = idx * (math.pi / params.q_theta)
    r = rotate(d, theta, n) - c
    dist = float(r @ r) + energy - float(d @ d)
    s = count_subbands(idx)
    nnz = int(np.count_nonzero(c))
    return RdBreakdown(
        distortion=max(dist, 0.0),
        rate_coeffs=params.alpha * nnz,
        rate_angles=angle_rate_for_subbands(s, idx.size, params),
        lam=params.lam,
        num_subbands=s,
        nonzeros=nnz,
    )


def _candidate_values(j: int, idx: np.ndarray, theta_hat: int) -> list[int]:
    # neighbours first so that ties merge subbands
    p = idx.size
    cands = [int(idx[j - 1]) if j > 0 else 0]
    if j < p - 1:
        cands.append(int(idx[j + 1]))
    cands.append(int(theta_hat))
    return cands


def _sweep_angles(idx: np.ndarray, gains: np.ndarray, theta_hat: np.ndarray, params: RdParams) -> None:
    """In-place angle updates for ``j = p-1 .. 0`` with the subband rate term."""
    p = idx.size
    lam = params.lam
    changes = int(np.count_nonzero(idx[1:] != idx[:-1]))
    nonzero = int(np.count_nonzero(idx))
    rate_cache = {}

    def rate(s):
        r = rate_cache.get(s)
        if r is None:
            r = rate_cache[s] = angle_rate_for_subbands(s, p, params)
        return r

    for j in range(p - 1, -1, -1):
        cur = int(idx[j])
        left = int(idx[j - 1]) if j > 0 else None
        right = int(idx[j + 1]) if j < p - 1 else None
        base_changes = changes - (left is not None and left != cur) - (right is not None and right != cur)
        base_nonzero = nonzero - (cur != 0)
        best_v, best_cost = cur, None
        for v in _candidate_values(j, idx, theta_hat[j]):
            ch = base_changes + (left is not None and left != v) + (right is not None and right != v)
            nz = base_nonzero + (v != 0)
            s = 0 if nz == 0 else 1 + ch
            cost = -2.0 * gains[j, v] + lam * rate(s)
            if best_cost is None or cost < best_cost:
                best_v, best_cost = v, cost
        if best_v != cur:
            changes = base_changes + (left is not None and left != best_v) + (right is not None and right != best_v)
            nonzero = base_nonzero + (best_v != 0)
            idx[j] = best_v


def _gain_table(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    ang = np.arange(q) * (np.pi / q)
    return a[:, None] * np.cos(ang)[None, :] + b[:, None] * np.sin(ang)[None, :]


def run_am_dct(d: np.ndarray, n: int, params: RdParams, init, energy: float | None = None,
               max_sweeps: int = MAX_SWEEPS) -> AmState:
    """SDCT-AM on precomputed DCT coefficients ``d`` of one block."""
    params = _am_params(params)
    q = params.q_theta
    d = np.asarray(d, dtype=np.float64)
    energy = float(d @ d) if energy is None else float(energy)
    if isinstance(init, AngleVector):
        idx = init.indices.copy()
    elif np.ndim(init) == 0:
        idx = np.full(num_pairs(n), int(init), dtype=np.int64)
    else:
        idx = np.array(init, dtype=np.int64)

    step = math.pi / q
    c = coeffs_from_dct(d, idx * step, n, params)
    history = [_breakdown(d, energy, idx, c, n, params)]
    capped = True
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        prev_idx, prev_c = idx.copy(), c
        c = coeffs_from_dct(d, idx * step, n, params)
        a, b = _pair_terms(d, c, n)
        theta_hat = projected_angles(a, b, q)
        _sweep_angles(idx, _gain_table(a, b, q), theta_hat, params)
        bd = _breakdown(d, energy, idx, c, n, params)
        if bd.J > history[-1].J:
            # only reachable through rounding when the true J is unchanged
            idx, c = prev_idx, prev_c
            capped = False
            break
        # a tie may move an angle without changing J; the coefficients then need one more pass
        stalled = bd.J == history[-1].J and np.array_equal(idx, prev_idx)
        history.append(bd)
        if stalled:
            capped = False
            break
    return AmState(AngleVector(n, idx, q), c, history, sweeps, capped)


def run_sdct_am(block, params: RdParams, init) -> AmState:
    x = as_block(block)
    n = x.shape[-1]
    return run_am_dct(dct2(x), n, params, init, energy=float((x * x).sum()))


def best_over_inits(d: np.ndarray, n: int, params: RdParams, energy: float | None = None) -> AmState:
    """Run from every constant-angle initialization and keep the lowest J."""
    best = None
    for start in range(params.q_theta):
        st = run_am_dct(d, n, params, start, energy)
        if best is None or st.J < best.J:
            best = st
    return best


def update_angle(j: int, block, state: AmState, params: RdParams) -> int:
    """Single-coordinate angle update (1-based ``j``); returns the new grid index."""
    params = _am_params(params)
    n = state.angles.n
    p = num_pairs(n)
    if not 1 <= j <= p:
        raise IndexError(f"angle index {j} outside 1..{p}")
    x = _samples(block, n)
    d = dct2(x)
    a, b = _pair_terms(d, np.asarray(state.coeffs, dtype=np.float64), n)
    if a[j - 1] == 0 and b[j - 1] == 0:
        return int(state.angles.indices[j - 1])
    theta_hat = projected_angles(a, b, params.q_theta)
    idx = state.angles.indices.copy()
    gains = _gain_table(a, b, params.q_theta)
    _update_one(idx, j - 1, gains, theta_hat[j - 1], params)
    return int(idx[j - 1])


def _update_one(idx: np.ndarray, j: int, gains: np.ndarray, theta_hat: int, params: RdParams) -> None:
    best_v, best_cost = int(idx[j]), None
    for v in _candidate_values(j, idx, theta_hat):
        trial = idx.copy()
        trial[j] = v
        cost = -2.0 * gains[j, v] + params.lam * angle_rate_for_subbands(count_subbands(trial), idx.size, params)
        if best_cost is None or cost < best_cost:
            best_v, best_cost = v, cost
    idx[j] = best_v


def candidate_set(j: int, state: AmState, block, params: RdParams) -> list[int]:
    """The comparison set used when updating angle ``j`` (1-based)."""
    n = state.angles.n
    d = dct2(_samples(block, n))
    a, b = _pair_terms(d, np.asarray(state.coeffs, dtype=np.float64), n)
    theta_hat = projected_angles(a, b, params.q_theta)
    return _candidate_values(j - 1, state.angles.indices, theta_hat[j - 1])
