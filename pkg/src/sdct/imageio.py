"""Binary PGM (P5) and ``.res16`` residual-plane I/O.

``.res16`` layout: the 4-byte tag ``RS16``, big-endian ``uint32`` width and
height, then ``width * height`` big-endian ``int16`` samples in raster order.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError

RES16_MAGIC = b"RS16"


def _pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FormatError("malformed PGM header")
        tokens.append(int(data[start:pos]))
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    (width, height, maxval), pos = _pgm_tokens(data, 3)
    if not 0 < maxval < 65536:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    need = width * height * dtype.itemsize
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise FormatError(f"{path}: truncated PGM raster")
    return np.frombuffer(raster, dtype=dtype).reshape(height, width).astype(
        np.uint8 if maxval < 256 else np.uint16
    )


def _atomic_write(path: str | Path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_pgm(path: str | Path, image: np.ndarray) -> None:
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM images are 2-D")
    maxval = 255 if img.dtype == np.uint8 else 65535
    raster = img.astype(np.uint8 if maxval == 255 else ">u2").tobytes()
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode()
    _atomic_write(path, header + raster)


def read_res16(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != RES16_MAGIC:
        raise FormatError(f"{path}: missing RS16 tag")
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header")
    width, height = struct.unpack(">II", data[4:12])
    need = 2 * width * height
    if len(data) - 12 != need:
        raise FormatError(f"{path}: expected {need} sample bytes, found {len(data) - 12}")
    return np.frombuffer(data[12:], dtype=">i2").reshape(height, width).astype(np.int16)


def write_res16(path: str | Path, plane: np.ndarray) -> None:
    plane = np.asarray(plane)
    header = RES16_MAGIC + struct.pack(">II", plane.shape[1], plane.shape[0])
    _atomic_write(path, header + plane.astype(">i2").tobytes())


def read_image(path: str | Path) -> np.ndarray:
    """Load a PGM or ``.res16`` file by extension."""
    if str(path).endswith(".res16"):
        return read_res16(path)
    return read_pgm(path)


def write_image(path: str | Path, image: np.ndarray) -> None:
    if str(path).endswith(".res16"):
        write_res16(path, image)
    else:
        write_pgm(path, image)


def write_bytes(path: str | Path, payload: bytes) -> None:
    _atomic_write(path, payload)
