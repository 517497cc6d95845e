import csv
import shutil
from pathlib import Path

import numpy as np
import pytest

from sdct.cli import EXIT_FORMAT, EXIT_INVARIANT, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from sdct.imageio import read_pgm, write_pgm

DATA = Path(__file__).parent / "data"
TABLES = Path(__file__).parents[1] / "src" / "sdct" / "data"


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.pgm"
    write_pgm(path, read_pgm(DATA / "camera.pgm")[:40, :48])
    return path


def test_encode_decode_round_trip(tmp_path, small, capsys):
    out = tmp_path / "a.sdc"
    assert main(["encode", str(small), str(out), "--algorithm", "sdct-am", "--n", "16", "--step", "18"]) == EXIT_OK
    report = capsys.readouterr().out
    for key in ("bits:", "bpp:", "psnr_db:", "ssim:", "directional_blocks:", "mean_subbands:", "angle_bits:"):
        assert key in report
    assert main(["decode", str(out), str(tmp_path / "b.pgm")]) == EXIT_OK
    dec = read_pgm(tmp_path / "b.pgm")
    assert dec.shape == (40, 48)
    assert main(["analyze", str(out), "--reference", str(small)]) == EXIT_OK
    analyzed = capsys.readouterr().out
    bits_line = [l for l in report.splitlines() if l.startswith("bits:")][0]
    assert bits_line in analyzed


def test_usage_errors(tmp_path, small):
    assert main(["encode", str(small), str(tmp_path / "x"), "--n", "12"]) == EXIT_USAGE
    assert main(["encode", str(small), str(tmp_path / "x"), "--step", "-1"]) == EXIT_USAGE
    assert main(["encode", str(small), str(tmp_path / "x"), "--lambda-policy", "auto"]) == EXIT_USAGE
    assert main(["encode", str(small), str(tmp_path / "x"), "--q-theta", "1"]) == EXIT_USAGE
    assert main(["sweep", str(DATA), "--steps", "10,20", "--step", "5"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_io_and_format_errors(tmp_path, small):
    assert main(["encode", str(tmp_path / "missing.pgm"), str(tmp_path / "x")]) == EXIT_IO
    assert main(["encode", str(small), str(tmp_path / "no" / "dir" / "x")]) == EXIT_IO
    junk = tmp_path / "junk.sdc"
    junk.write_bytes(b"not a stream at all, clearly")
    assert main(["decode", str(junk), str(tmp_path / "o.pgm")]) == EXIT_FORMAT
    notpgm = tmp_path / "bad.pgm"
    notpgm.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
    assert main(["encode", str(notpgm), str(tmp_path / "x")]) == EXIT_FORMAT
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["sweep", str(empty), "--steps", "10,20,30,40"]) == EXIT_USAGE


def test_residual_plane_encode(tmp_path):
    from sdct.imageio import read_res16, write_res16

    plane = np.random.default_rng(2).normal(0, 50, (16, 24)).astype(np.int16)
    write_res16(tmp_path / "r.res16", plane)
    assert main(["encode", str(tmp_path / "r.res16"), str(tmp_path / "r.sdc"), "--n", "8", "--step", "2",
                 "--algorithm", "sdct-bt", "--integer"]) == EXIT_OK
    assert main(["decode", str(tmp_path / "r.sdc"), str(tmp_path / "o.res16")]) == EXIT_OK
    assert np.abs(read_res16(tmp_path / "o.res16").astype(int) - plane).max() <= 8


def test_sweep_writes_csv_bd_and_plot(tmp_path, small, capsys):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    shutil.copy(small, corpus / "small.pgm")
    csv_path = tmp_path / "pts.csv"
    rc = main(["sweep", str(corpus), "--algorithms", "sdct1", "--sizes", "8", "--steps", "12,20,32,52",
               "--csv", str(csv_path), "--plot", str(tmp_path / "rd")])
    assert rc == EXIT_OK
    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    assert {r["algorithm"] for r in rows} == {"dct", "sdct1"}
    assert len(rows) == 8
    with open(tmp_path / "pts_bd.csv") as fh:
        bd = list(csv.reader(fh))
    assert len(bd) == 2 and bd[1][:3] == ["small", "8", "sdct1"]
    assert (tmp_path / "rd_small_n8.dat").exists()
    assert "mean BD-PSNR n=8 sdct1" in capsys.readouterr().out


def test_sweep_single_step_skips_bd(tmp_path, small, capsys):
    rc = main(["sweep", str(small), "--algorithms", "dct", "--sizes", "8", "--step", "20",
               "--csv", str(tmp_path / "one.csv")])
    assert rc == EXIT_OK
    assert "BD-PSNR skipped" in capsys.readouterr().out


def test_selftest_passes_and_detects_corrupt_table(tmp_path, capsys):
    assert main(["selftest"]) == EXIT_OK
    assert "all suites passed" in capsys.readouterr().out
    table = next(TABLES.glob("*.txt"))
    lines = table.read_text().splitlines()
    # scale every number of the first data row: still parseable, numerically wrong
    for k, line in enumerate(lines):
        parts = line.split()
        if parts and all(p.lstrip("-").isdigit() for p in parts) and len(parts) >= 8:
            lines[k] = " ".join(str(int(p) * 3) for p in parts)
            break
    bad = tmp_path / "bad_tables.txt"
    bad.write_text("\n".join(lines) + "\n")
    assert main(["selftest", "--tables", str(bad)]) == EXIT_INVARIANT
    assert "FAIL" in capsys.readouterr().out
