"""RD sweeps, baselines, block-usage statistics and CSV/plot emission."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .bt import run_sdct1_dct
from .codec import HEADER_BYTES, Algorithm, CodecParams, EncodeResult, decode_stream, encode_image
from .imageio import write_bytes
from .metrics import bd_psnr, psnr, ssim
from .rd import AngleRateMode, RdParams
from .transform import as_block, dct2

ALGORITHM_NAMES = {
    Algorithm.DCT_ONLY: "dct",
    Algorithm.SDCT_1: "sdct1",
    Algorithm.SDCT_AM: "sdct-am",
    Algorithm.SDCT_BT: "sdct-bt",
}


@dataclass(frozen=True)
class RdPoint:
    bits_per_pixel: float
    psnr_db: float
    ssim: float
    image: str
    algorithm: str
    n: int
    coeff_step: float
    lam: float
    integer: bool
    payload_bpp: float  # header bytes excluded
    directional_fraction: float
    mean_subbands: float


@dataclass
class RdCurve:
    points: list[RdPoint] = field(default_factory=list)

    def sorted(self) -> "RdCurve":
        return RdCurve(sorted(self.points, key=lambda p: p.bits_per_pixel))

    def rates(self, include_header: bool = True) -> np.ndarray:
        return np.array([p.bits_per_pixel if include_header else p.payload_bpp for p in self.points])

    def psnrs(self) -> np.ndarray:
        return np.array([p.psnr_db for p in self.points])

    def ssims(self) -> np.ndarray:
        return np.array([p.ssim for p in self.points])

    def validate(self) -> None:
        r = self.rates()
        if len(r) < 4:
            raise ValueError("an RD curve needs at least 4 points")
        if np.any(np.diff(r) <= 0):
            raise ValueError("RD points must have strictly increasing bpp")


def rd_point(image: np.ndarray, params: CodecParams, name: str = "", threads: int = 1) -> RdPoint:
    img = np.asarray(image)
    return point_from_encoding(img, params, encode_image(img, params, threads=threads), name)


def point_from_encoding(image: np.ndarray, params: CodecParams, enc: EncodeResult, name: str = "") -> RdPoint:
    """Decode ``enc`` and measure it against ``image``."""
    img = np.asarray(image)
    dec = decode_stream(enc.bitstream).image
    pixels = img.shape[0] * img.shape[1]
    peak = 255.0 if img.dtype == np.uint8 else float(np.abs(img).max() or 1)
    return RdPoint(
        bits_per_pixel=enc.total_bits / pixels,
        psnr_db=psnr(img, dec, peak),
        ssim=ssim(img, dec, peak) if img.dtype == np.uint8 else float("nan"),
        image=name,
        algorithm=ALGORITHM_NAMES[params.algorithm] + ("+rd" if params.dct_threshold else ""),
        n=params.n,
        coeff_step=params.coeff_step,
        lam=params.lam,
        integer=bool(params.flavor),
        payload_bpp=(enc.total_bits - 8 * HEADER_BYTES) / pixels,
        directional_fraction=enc.directional_fraction,
        mean_subbands=enc.mean_subbands,
    )


def rd_sweep(image: np.ndarray, params: CodecParams, steps, name: str = "", threads: int = 1) -> RdCurve:
    """Encode and decode at each quantizer step; points sorted by bpp."""
    return RdCurve([rd_point(image, replace(params, coeff_step=float(s)), name, threads) for s in steps]).sorted()


def bd_between(reference: RdCurve, test: RdCurve, include_header: bool = True) -> float:
    return bd_psnr(reference.rates(include_header), reference.psnrs(), test.rates(include_header), test.psnrs())


def baseline_sdct1(block, params: RdParams) -> tuple[int, np.ndarray, float]:
    """Best single angle per block; ``J`` charges the angle index and the mode bit.

    The zero angle is the plain DCT and carries neither.
    """
    x = as_block(block)
    params = params.with_(angle_mode=AngleRateMode.BT_TREE)
    angle, coeffs, bd = run_sdct1_dct(dct2(x), x.shape[-1], params, float((x * x).sum()), mode_bit=True)
    return angle, coeffs, bd.J


def block_usage_report(bitstream: bytes) -> float:
    """Fraction of blocks coded with the directional transform."""
    rec = decode_stream(bitstream, reconstruct=False).records
    return float(np.mean([r.directional for r in rec]))


CSV_FIELDS = [f for f in RdPoint.__dataclass_fields__]


def write_points_csv(path, points: list[RdPoint]) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS)
    w.writeheader()
    for p in points:
        w.writerow(asdict(p))
    write_bytes(path, buf.getvalue().encode())


@dataclass(frozen=True)
class BdRow:
    image: str
    n: int
    algorithm: str
    bd_psnr_db: float
    bd_psnr_payload_db: float


def bd_table(curves: dict[tuple[str, int, str], RdCurve], baseline: str = "dct") -> list[BdRow]:
    """BD-PSNR of every non-baseline curve against the baseline of the same image and size."""
    rows = []
    for (image, n, alg), curve in sorted(curves.items()):
        ref = curves.get((image, n, baseline))
        if alg == baseline or ref is None:
            continue
        rows.append(BdRow(image, n, alg, bd_between(ref, curve, True), bd_between(ref, curve, False)))
    return rows


def write_bd_csv(path, rows: list[BdRow]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["image", "block_size", "algorithm", "bd_psnr_vs_dct_db", "bd_psnr_payload_only_db"])
    for r in rows:
        w.writerow([r.image, r.n, r.algorithm, f"{r.bd_psnr_db:.4f}", f"{r.bd_psnr_payload_db:.4f}"])
    write_bytes(path, buf.getvalue().encode())


def write_plot_data(prefix, curves: dict[tuple[str, int, str], RdCurve]) -> list[Path]:
    """One gnuplot data file per (image, n): blocks per algorithm, columns bpp psnr ssim."""
    prefix = Path(prefix)
    groups: dict[tuple[str, int], list[tuple[str, RdCurve]]] = {}
    for (image, n, alg), c in sorted(curves.items()):
        groups.setdefault((image, n), []).append((alg, c))
    written = []
    for (image, n), items in groups.items():
        lines = []
        for alg, c in items:
            lines.append(f'# "{alg}"  bpp psnr_db ssim')
            lines += [f"{p.bits_per_pixel:.6f} {p.psnr_db:.4f} {p.ssim:.6f}" for p in c.points]
            lines += ["", ""]  # gnuplot index separator
        path = prefix.parent / f"{prefix.name}_{image or 'image'}_n{n}.dat"
        write_bytes(path, "\n".join(lines).encode())
        written.append(path)
    return written


def summarize_bd(rows: list[BdRow]) -> dict[tuple[int, str], float]:
    """Mean BD-PSNR per (block size, algorithm)."""
    acc: dict[tuple[int, str], list[float]] = {}
    for r in rows:
        acc.setdefault((r.n, r.algorithm), []).append(r.bd_psnr_db)
    return {k: float(np.mean(v)) for k, v in sorted(acc.items())}


def default_steps(count: int = 5, lo: float = 8.0, hi: float = 64.0) -> list[float]:
    return [float(s) for s in np.geomspace(lo, hi, count)]


__all__ = [
    "RdPoint",
    "RdCurve",
    "BdRow",
    "rd_point",
    "point_from_encoding",
    "rd_sweep",
    "bd_between",
    "bd_table",
    "baseline_sdct1",
    "block_usage_report",
    "write_points_csv",
    "write_bd_csv",
    "write_plot_data",
    "summarize_bd",
    "default_steps",
]
