"""Integer approximation of the SDCT.

Integer 2D-DCT with HEVC-style scaled matrices (``T ~ 64*sqrt(N) * C``),
followed by the pair rotations in 14-bit fixed point.  Stage shifts are
chosen so that outputs approximate the orthonormal coefficients at unit
scale, which lets the float and integer codecs share quantizer steps.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .transform import AngleVector, _as_radians, pair_indices

ROT_BITS = 14
TABLE_VERSION = 1


class MissingTableError(KeyError):
    pass


class TableFormatError(ValueError):
    pass


def parse_integer_tables(text: str) -> dict[int, np.ndarray]:
    tables: dict[int, np.ndarray] = {}
    version = None
    rows: list[list[int]] = []
    size = None

    def close():
        if size is None:
            return
        mat = np.array(rows, dtype=np.int64)
        if mat.shape != (size, size):
            raise TableFormatError(f"table for size {size} has shape {mat.shape}")
        tables[size] = mat

    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "version":
            version = int(rest[0])
        elif head == "size":
            close()
            size, rows = int(rest[0]), []
        else:
            if size is None:
                raise TableFormatError("matrix row before any 'size' line")
            try:
                rows.append([int(v) for v in line.split()])
            except ValueError as exc:
                raise TableFormatError(f"bad matrix row: {raw!r}") from exc
    close()
    if version != TABLE_VERSION:
        raise TableFormatError(f"unsupported table version {version}")
    return tables


@lru_cache(maxsize=None)
def _default_tables() -> dict[int, np.ndarray]:
    text = resources.files("sdct").joinpath("data/hevc_dct.txt").read_text()
    return parse_integer_tables(text)


def load_integer_tables(path: str | Path | None = None) -> dict[int, np.ndarray]:
    if path is None:
        return _default_tables()
    return parse_integer_tables(Path(path).read_text())


def _table(n: int, tables) -> np.ndarray:
    tables = _default_tables() if tables is None else tables
    try:
        return tables[n]
    except KeyError:
        raise MissingTableError(f"no integer DCT table for n={n}") from None


def _shift(x: np.ndarray, bits: int) -> np.ndarray:
    if bits <= 0:
        return x << -bits
    return (x + (1 << (bits - 1))) >> bits


def _log2(n: int) -> int:
    b = n.bit_length() - 1
    if 1 << b != n:
        raise MissingTableError(f"integer transform needs a power-of-two size, got {n}")
    return b


def integer_dct2(block, tables=None) -> np.ndarray:
    """Integer separable 2D-DCT of an ``(n, n)`` integer block, vectorized."""
    x = np.asarray(block, dtype=np.int64)
    n = x.shape[-1]
    t = _table(n, tables)
    log2n = _log2(n)
    s1 = max(log2n - 1, 0)
    tmp = _shift(t @ x, s1)
    out = _shift(tmp @ t.T, 12 + log2n - s1)
    return out.reshape(*x.shape[:-2], n * n)


def integer_idct2(coeffs, n: int, tables=None) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.int64).reshape(-1, n, n)
    t = _table(n, tables)
    log2n = _log2(n)
    tmp = _shift(t.T @ c, 7)
    out = _shift(tmp @ t, 5 + log2n)
    return out.reshape(*np.shape(coeffs)[:-1], n, n)


def _fixed_point(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scale = 1 << ROT_BITS
    return (
        np.rint(np.cos(theta) * scale).astype(np.int64),
        np.rint(np.sin(theta) * scale).astype(np.int64),
    )


def integer_rotate(coeffs, angles, n: int) -> np.ndarray:
    theta = _as_radians(n, angles)
    cs, sn = _fixed_point(theta)
    i, j = pair_indices(n)
    c = np.array(coeffs, dtype=np.int64, copy=True)
    a, b = c[..., i], c[..., j]
    c[..., i] = _shift(cs * a - sn * b, ROT_BITS)
    c[..., j] = _shift(sn * a + cs * b, ROT_BITS)
    return c


def integer_unrotate(coeffs, angles, n: int) -> np.ndarray:
    theta = _as_radians(n, angles)
    cs, sn = _fixed_point(theta)
    i, j = pair_indices(n)
    c = np.array(coeffs, dtype=np.int64, copy=True)
    a, b = c[..., i], c[..., j]
    c[..., i] = _shift(cs * a + sn * b, ROT_BITS)
    c[..., j] = _shift(cs * b - sn * a, ROT_BITS)
    return c


def forward_integer(angles: AngleVector | np.ndarray, block, tables=None) -> np.ndarray:
    """Integer SDCT: integer 2D-DCT, then fixed-point ``R(theta)^T``."""
    x = np.asarray(getattr(block, "samples", block))
    n = x.shape[-1] if x.ndim >= 2 else int(round(np.sqrt(x.size)))
    x = x.reshape(*x.shape[:-2], n, n) if x.ndim >= 2 else x.reshape(n, n)
    return integer_rotate(integer_dct2(x, tables), angles, n)


def inverse_integer(angles: AngleVector | np.ndarray, coeffs, n: int, tables=None) -> np.ndarray:
    """Integer samples ``(n, n)`` from integer SDCT coefficients."""
    return integer_idct2(integer_unrotate(coeffs, angles, n), n, tables)
