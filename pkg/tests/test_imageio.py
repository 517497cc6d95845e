import os
import stat

import numpy as np
import pytest

from sdct.errors import FormatError
from sdct.imageio import read_image, read_pgm, read_res16, write_image, write_pgm, write_res16


def test_pgm_round_trip_8_and_16_bit(tmp_path):
    img8 = np.random.default_rng(0).integers(0, 256, (7, 11)).astype(np.uint8)
    write_pgm(tmp_path / "a.pgm", img8)
    out = read_pgm(tmp_path / "a.pgm")
    assert out.dtype == np.uint8 and np.array_equal(out, img8)
    img16 = np.random.default_rng(1).integers(0, 65536, (5, 3)).astype(np.uint16)
    write_image(tmp_path / "b.pgm", img16)
    assert np.array_equal(read_image(tmp_path / "b.pgm"), img16)


def test_pgm_header_with_comments(tmp_path):
    (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n2 2\n# max\n255\n" + bytes([1, 2, 3, 4]))
    assert read_pgm(tmp_path / "c.pgm").tolist() == [[1, 2], [3, 4]]


def test_pgm_rejects_malformed(tmp_path):
    (tmp_path / "p2.pgm").write_bytes(b"P2\n2 2\n255\n1 2 3 4\n")
    with pytest.raises(FormatError):
        read_pgm(tmp_path / "p2.pgm")
    (tmp_path / "short.pgm").write_bytes(b"P5\n4 4\n255\n" + bytes(5))
    with pytest.raises(FormatError):
        read_pgm(tmp_path / "short.pgm")


def test_res16_round_trip_and_errors(tmp_path):
    plane = np.array([[-32768, 0, 5], [32767, -1, 200]], dtype=np.int16)
    write_res16(tmp_path / "r.res16", plane)
    raw = (tmp_path / "r.res16").read_bytes()
    assert raw[:4] == b"RS16" and len(raw) == 12 + 2 * plane.size
    assert np.array_equal(read_image(tmp_path / "r.res16"), plane)
    (tmp_path / "bad.res16").write_bytes(raw[:-1])
    with pytest.raises(FormatError):
        read_res16(tmp_path / "bad.res16")


def test_atomic_write_leaves_no_temp_and_respects_umask(tmp_path):
    old = os.umask(0o022)
    try:
        write_pgm(tmp_path / "m.pgm", np.zeros((2, 2), dtype=np.uint8))
    finally:
        os.umask(old)
    assert [p.name for p in tmp_path.iterdir()] == ["m.pgm"]
    assert stat.S_IMODE((tmp_path / "m.pgm").stat().st_mode) == 0o644
