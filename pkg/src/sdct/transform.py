"""Steerable DCT construction and fast transforms.

The 2D-DCT basis of an ``n x n`` block is the Kronecker eigenbasis of the
Laplacian of the grid graph ``P_n x P_n``.  Every off-diagonal frequency pair
``(k, l)`` / ``(l, k)`` shares an eigenvalue, so the two basis vectors may be
rotated into each other by an arbitrary angle without leaving the eigenspace.
The resulting orthogonal transform ``V(theta) = V R(theta)`` is the steerable
DCT.

Conventions used throughout the package:

* blocks are vectorized row-major, so sample ``(r, c)`` sits at ``r * n + c``;
* coefficient ``(k, l)`` (vertical frequency ``k``, horizontal ``l``) sits at
  ``k * n + l``;
* rotatable pairs are stored with ``k > l``: index ``i = k*n + l`` is the
  coefficient that the sparsifying angle nulls, ``j = l*n + k`` its partner;
* the ``p = n(n-1)/2`` angles are ordered by a zigzag scan restricted to the
  strictly lower triangle of the coefficient matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp


class InvalidSizeError(ValueError):
    pass


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


def _check_n(n: int) -> None:
    if int(n) != n or n < 2:
        raise InvalidSizeError(f"block size must be an integer >= 2, got {n!r}")


@dataclass(frozen=True)
class DctBasis1D:
    n: int
    vectors: np.ndarray  # shape (n, n); row k is basis vector k
    eigenvalues: np.ndarray


@lru_cache(maxsize=None)
def _dct_1d(n: int) -> DctBasis1D:
    j = np.arange(n)
    k = j[:, None]
    vectors = np.cos(np.pi * k * (j + 0.5) / n)
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    eigenvalues = 4.0 * np.sin(np.pi * np.arange(n) / (2 * n)) ** 2
    vectors.setflags(write=False)
    eigenvalues.setflags(write=False)
    return DctBasis1D(n, vectors, eigenvalues)


def build_dct_1d(n: int) -> DctBasis1D:
    """Unit-norm DCT-2 vectors, i.e. the eigenvectors of the path-graph Laplacian."""
    _check_n(n)
    return _dct_1d(int(n))


def path_laplacian(n: int) -> np.ndarray:
    _check_n(n)
    adj = np.eye(n, k=1, dtype=np.int64) + np.eye(n, k=-1, dtype=np.int64)
    return np.diag(adj.sum(axis=1)) - adj


def grid_laplacian(n: int) -> np.ndarray:
    """Laplacian of the 4-connected ``n x n`` grid (product of two path graphs)."""
    lp = path_laplacian(n)
    eye = np.eye(n, dtype=np.int64)
    return np.kron(lp, eye) + np.kron(eye, lp)


@lru_cache(maxsize=None)
def _zigzag_lower(n: int) -> tuple[tuple[int, int], ...]:
    order = []
    for s in range(2 * n - 1):
        rows = range(max(0, s - n + 1), min(s, n - 1) + 1)
        # JPEG zigzag: even anti-diagonals run bottom-left to top-right
        rows = reversed(rows) if s % 2 == 0 else rows
        for r in rows:
            c = s - r
            if r > c:
                order.append((r, c))
    return tuple(order)


@lru_cache(maxsize=None)
def zigzag_scan(n: int) -> np.ndarray:
    """Classic zigzag scan of all ``n*n`` coefficient positions (raster indices)."""
    order = []
    for s in range(2 * n - 1):
        rows = range(max(0, s - n + 1), min(s, n - 1) + 1)
        rows = reversed(rows) if s % 2 == 0 else rows
        order.extend(r * n + (s - r) for r in rows)
    out = np.array(order, dtype=np.intp)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class EigenPairIndex:
    k: int
    l: int
    zigzag_position: int
    eigenvalue: float
    multiplicity: int


@dataclass(frozen=True)
class EigenTable:
    """Spectrum of the grid Laplacian indexed by DCT coefficient position."""

    n: int
    pairs: tuple[EigenPairIndex, ...]
    eigenvalues: np.ndarray  # length n*n, eigenvalue of coefficient k*n + l
    multiplicity: np.ndarray  # length n*n

    def distinct(self) -> list[tuple[float, int]]:
        """(eigenvalue, algebraic multiplicity) for every distinct eigenvalue."""
        seen: dict[float, int] = {}
        for lam, m in zip(self.eigenvalues, self.multiplicity):
            key = round(float(lam), 9)
            seen[key] = int(m)
        return sorted(seen.items())

    def multiplicity_of(self, value: float, tol: float = 1e-9) -> int:
        return int(np.count_nonzero(np.abs(self.eigenvalues - value) <= tol))

    def simple_count(self) -> int:
        return sum(1 for _, m in self.distinct() if m == 1)


@lru_cache(maxsize=None)
def eigen_pair_table(n: int, tol: float = 1e-9) -> EigenTable:
    """Enumerate ``lambda_{k,l} = lambda_k + lambda_l`` with multiplicities.

    Multiplicities are counted numerically, so accidental degeneracies
    (e.g. ``n = 6``, where ``lambda_{0,4} = lambda_{2,3}``) are reported
    rather than assumed away.
    """
    _check_n(n)
    lam1 = build_dct_1d(n).eigenvalues
    lam = (lam1[:, None] + lam1[None, :]).ravel()
    order = np.argsort(lam, kind="stable")
    mult = np.empty(n * n, dtype=np.int64)
    start = 0
    for stop in range(1, n * n + 1):
        if stop == n * n or lam[order[stop]] - lam[order[start]] > tol:
            mult[order[start:stop]] = stop - start
            start = stop
    pairs = tuple(
        EigenPairIndex(k, l, pos, float(lam[k * n + l]), int(mult[k * n + l]))
        for pos, (k, l) in enumerate(_zigzag_lower(n))
    )
    lam.setflags(write=False)
    mult.setflags(write=False)
    return EigenTable(n, pairs, lam, mult)


@lru_cache(maxsize=None)
def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Raster coefficient indices ``(i, j)`` of every rotatable pair, zigzag order."""
    zz = _zigzag_lower(n)
    i = np.array([k * n + l for k, l in zz], dtype=np.intp)
    j = np.array([l * n + k for k, l in zz], dtype=np.intp)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


@lru_cache(maxsize=None)
def dct_2d_matrix(n: int) -> np.ndarray:
    """Dense 2D-DCT basis ``V``; column ``k*n + l`` is ``v_k (x) v_l``."""
    c = build_dct_1d(n).vectors
    v = np.kron(c, c).T
    v.setflags(write=False)
    return v


class AngleVector:
    """Quantized rotation angles, stored as indices into ``{i*pi/q : i < q}``."""

    __slots__ = ("n", "q_theta", "indices")

    def __init__(self, n: int, indices, q_theta: int = 8):
        _check_n(n)
        if q_theta < 2:
            raise ValueError("q_theta must be >= 2")
        idx = np.asarray(indices, dtype=np.int64).ravel().copy()
        if idx.size != num_pairs(n):
            raise ValueError(f"expected {num_pairs(n)} angles for n={n}, got {idx.size}")
        if idx.size and (idx.min() < 0 or idx.max() >= q_theta):
            raise ValueError("angle index outside the quantization grid")
        idx.setflags(write=False)
        self.n = int(n)
        self.q_theta = int(q_theta)
        self.indices = idx

    @classmethod
    def constant(cls, n: int, index: int, q_theta: int = 8) -> "AngleVector":
        return cls(n, np.full(num_pairs(n), index), q_theta)

    @property
    def p(self) -> int:
        return self.indices.size

    @property
    def radians(self) -> np.ndarray:
        return self.indices * (np.pi / self.q_theta)

    def is_zero(self) -> bool:
        return not self.indices.any()

    def __eq__(self, other):
        if not isinstance(other, AngleVector):
            return NotImplemented
        return (self.n, self.q_theta) == (other.n, other.q_theta) and np.array_equal(
            self.indices, other.indices
        )

    def __hash__(self):
        return hash((self.n, self.q_theta, self.indices.tobytes()))

    def __repr__(self):
        return f"AngleVector(n={self.n}, q_theta={self.q_theta}, indices={self.indices.tolist()})"


def _as_radians(n: int, angles) -> np.ndarray:
    if isinstance(angles, AngleVector):
        if angles.n != n:
            raise InvalidSizeError(f"angle vector is for n={angles.n}, not n={n}")
        return angles.radians
    theta = np.asarray(angles, dtype=np.float64)
    if theta.shape[-1:] != (num_pairs(n),):
        raise InvalidSizeError(f"expected {num_pairs(n)} angles for n={n}, got shape {theta.shape}")
    return theta


def rotate(coeffs: np.ndarray, theta: np.ndarray, n: int) -> np.ndarray:
    """``R(theta)^T c``: steer DCT coefficients.  Works on stacked ``(..., n*n)``."""
    i, j = pair_indices(n)
    cos, sin = np.cos(theta), np.sin(theta)
    a, b = coeffs[..., i], coeffs[..., j]
    out = np.array(coeffs, dtype=np.float64, copy=True)
    out[..., i] = cos * a - sin * b
    out[..., j] = sin * a + cos * b
    return out


def unrotate(coeffs: np.ndarray, theta: np.ndarray, n: int) -> np.ndarray:
    """``R(theta) c``: map SDCT coefficients back to DCT coefficients."""
    i, j = pair_indices(n)
    cos, sin = np.cos(theta), np.sin(theta)
    a, b = coeffs[..., i], coeffs[..., j]
    out = np.array(coeffs, dtype=np.float64, copy=True)
    out[..., i] = cos * a + sin * b
    out[..., j] = -sin * a + cos * b
    return out


def dct2(blocks: np.ndarray) -> np.ndarray:
    """Separable orthonormal 2D-DCT of ``(..., n, n)`` blocks, returned vectorized."""
    blocks = np.asarray(blocks, dtype=np.float64)
    n = blocks.shape[-1]
    c = build_dct_1d(n).vectors
    out = c @ blocks @ c.T
    return out.reshape(*blocks.shape[:-2], n * n)


def idct2(coeffs: np.ndarray, n: int) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    c = build_dct_1d(n).vectors
    mat = coeffs.reshape(*coeffs.shape[:-1], n, n)
    return c.T @ mat @ c


@dataclass(frozen=True)
class SdctBasis:
    n: int
    theta: np.ndarray = field(repr=False)

    @cached_property
    def R(self) -> sp.csr_matrix:
        """Sparse rotation factor ``Delta + R~(theta)``."""
        n = self.n
        i, j = pair_indices(n)
        cos, sin = np.cos(self.theta), np.sin(self.theta)
        diag = np.arange(n) * (n + 1)
        rows = np.concatenate([diag, i, j, i, j])
        cols = np.concatenate([diag, i, j, j, i])
        vals = np.concatenate([np.ones(n), cos, cos, sin, -sin])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n))

    @cached_property
    def V(self) -> np.ndarray:
        """Dense orthogonal ``n^2 x n^2`` matrix whose columns are the steered basis."""
        return np.asarray(self.R.T @ dct_2d_matrix(self.n).T).T


def build_sdct(n: int, angles) -> SdctBasis:
    _check_n(n)
    theta = _as_radians(n, angles)
    if theta.ndim != 1:
        raise InvalidSizeError("build_sdct takes a single angle vector")
    theta = theta.copy()
    theta.setflags(write=False)
    return SdctBasis(int(n), theta)


def _samples(block, n: int) -> np.ndarray:
    x = np.asarray(getattr(block, "samples", block), dtype=np.float64)
    if x.shape[-2:] == (n, n):
        return x
    if x.shape[-1] != n * n:
        raise InvalidSizeError(f"block does not match basis size n={n}")
    return x.reshape(*x.shape[:-1], n, n)


def as_block(block) -> np.ndarray:
    """``(n, n)`` float view of a :class:`Block`, a square array or a raster vector."""
    x = np.asarray(getattr(block, "samples", block), dtype=np.float64)
    if x.ndim == 2 and x.shape[0] == x.shape[1]:
        return x
    n = int(round(np.sqrt(x.size)))
    if x.ndim != 1 or n * n != x.size:
        raise InvalidSizeError(f"cannot interpret shape {x.shape} as a square block")
    return x.reshape(n, n)


def forward(basis: SdctBasis, block) -> np.ndarray:
    """SDCT coefficients ``V(theta)^T x`` via two 1D-DCT passes plus the sparse rotation."""
    return rotate(dct2(_samples(block, basis.n)), basis.theta, basis.n)


def inverse(basis: SdctBasis, coeffs) -> np.ndarray:
    """Samples ``V(theta) c`` in raster-vectorized form."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape[-1] != basis.n * basis.n:
        raise InvalidSizeError(f"expected {basis.n * basis.n} coefficients")
    out = idct2(unrotate(c, basis.theta, basis.n), basis.n)
    return out.reshape(*c.shape)


def sparsifying_angles(block, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Continuous angles that null one coefficient of every pair.

    Returns the angles in ``[0, pi)`` and the rotated coefficients.  A pair
    that is already zero keeps angle 0.
    """
    if n is None:
        x = as_block(block)
        n = x.shape[-1]
    else:
        x = _samples(block, n)
    d = dct2(x)
    i, j = pair_indices(n)
    theta = np.mod(np.arctan2(d[..., i], d[..., j]), np.pi)
    # mod can land exactly on pi for tiny negative inputs
    theta[theta >= np.pi] = 0.0
    return theta, rotate(d, theta, n)


@dataclass(frozen=True)
class Block:
    n: int
    samples: np.ndarray
    origin: tuple[int, int] = (0, 0)
    bit_depth: int = 8

    def __post_init__(self):
        if np.asarray(self.samples).size != self.n * self.n:
            raise InvalidSizeError(f"block needs {self.n * self.n} samples")
