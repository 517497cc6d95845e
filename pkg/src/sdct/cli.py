"""Command-line interface: encode, decode, analyze, sweep and selftest.

Exit codes: 0 success, 1 usage, 2 I/O, 3 format, 4 invariant failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .codec import Algorithm, CodecParams, Flavor, LambdaPolicy, decode_stream, encode_image
from .errors import FormatError
from .evaluation import (
    ALGORITHM_NAMES,
    bd_table,
    rd_sweep,
    summarize_bd,
    write_bd_csv,
    write_plot_data,
    write_points_csv,
)
from .imageio import read_image, write_bytes, write_image
from .metrics import psnr, ssim

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_FORMAT, EXIT_INVARIANT = 0, 1, 2, 3, 4

_ALGORITHMS = {name: alg for alg, name in ALGORITHM_NAMES.items()}


class UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number: {text!r}")
    return v


def _step_list(text: str) -> list[float]:
    steps = [_positive_float(t) for t in text.split(",") if t.strip()]
    if not steps:
        raise argparse.ArgumentTypeError("empty step list")
    return steps


def _lambda_policy(text: str) -> LambdaPolicy:
    try:
        return LambdaPolicy.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _codec_flags(p: argparse.ArgumentParser, algorithm_default: str = "sdct-am") -> None:
    p.add_argument("--algorithm", choices=list(_ALGORITHMS), default=algorithm_default)
    p.add_argument("--n", type=int, choices=[8, 16, 32], default=16, help="block size")
    p.add_argument("--lambda-policy", type=_lambda_policy, default=LambdaPolicy(),
                   help="'paired' (lambda from step) or 'fixed:VALUE'")
    p.add_argument("--q-theta", type=int, default=8, help="angle grid size")
    p.add_argument("--integer", action="store_true", help="integer transform arithmetic")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdct", description="Steerable DCT image codec")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="compress a PGM image or .res16 residual plane")
    enc.add_argument("input")
    enc.add_argument("output")
    _codec_flags(enc)
    enc.add_argument("--step", type=_positive_float, default=16.0, help="quantizer step")

    dec = sub.add_parser("decode", help="decompress to PGM or .res16")
    dec.add_argument("input")
    dec.add_argument("output")

    ana = sub.add_parser("analyze", help="report per-block statistics of a bitstream")
    ana.add_argument("input")
    ana.add_argument("--reference", help="original image for PSNR/SSIM")

    sw = sub.add_parser("sweep", help="RD curves and BD-PSNR against the DCT baseline")
    sw.add_argument("corpus", help="directory of .pgm files, or a single file")
    sw.add_argument("--algorithms", default="sdct-am,sdct-bt",
                    help="comma-separated algorithms compared against dct")
    sw.add_argument("--sizes", default="16", help="comma-separated block sizes")
    sw.add_argument("--lambda-policy", type=_lambda_policy, default=LambdaPolicy())
    sw.add_argument("--q-theta", type=int, default=8)
    sw.add_argument("--integer", action="store_true")
    sw.add_argument("--threads", type=int, default=1)
    group = sw.add_mutually_exclusive_group()
    group.add_argument("--steps", type=_step_list, help="comma-separated quantizer steps")
    group.add_argument("--step", type=_positive_float, help="single step (not enough for BD)")
    sw.add_argument("--csv", default="rd_points.csv", help="per-point CSV path")
    sw.add_argument("--bd-csv", default=None, help="BD summary CSV path (default: <csv>_bd.csv)")
    sw.add_argument("--plot", default=None, help="prefix for gnuplot data files")

    st = sub.add_parser("selftest", help="run the invariant suites at small sizes")
    st.add_argument("--tables", default=None, help="integer DCT table file to test")
    return parser


def _params(args, step: float, n: int | None = None, algorithm: Algorithm | None = None) -> CodecParams:
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    try:
        return CodecParams(
            n=n or args.n,
            coeff_step=step,
            algorithm=algorithm if algorithm is not None else _ALGORITHMS[args.algorithm],
            flavor=Flavor.INTEGER if args.integer else Flavor.FLOAT,
            q_theta=args.q_theta,
            lambda_policy=args.lambda_policy,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _report(img: np.ndarray, out: np.ndarray, records, total_bits: int) -> list[str]:
    pixels = img.shape[0] * img.shape[1]
    directional = [r for r in records if r.directional]
    side = sum(r.side_bits for r in records)
    s_bar = float(np.mean([r.num_subbands for r in directional])) if directional else 0.0
    peak = 255.0 if img.dtype == np.uint8 else float(np.abs(img).max() or 1)
    lines = [
        f"bits: {total_bits}",
        f"bpp: {total_bits / pixels:.4f}",
        f"psnr_db: {psnr(img, out, peak):.3f}",
    ]
    if img.dtype == np.uint8 and min(img.shape) > 10:
        lines.append(f"ssim: {ssim(img, out):.5f}")
    lines += [
        f"blocks: {len(records)}",
        f"directional_blocks: {len(directional)} ({100.0 * len(directional) / len(records):.1f}%)",
        f"mean_subbands: {s_bar:.3f}",
        f"angle_bits: {side} ({100.0 * side / total_bits:.2f}% of file)",
    ]
    return lines


def cmd_encode(args) -> int:
    params = _params(args, args.step)
    img = read_image(args.input)
    t0 = time.perf_counter()
    enc = encode_image(img, params, threads=args.threads)
    write_bytes(args.output, enc.bitstream)
    for line in _report(img, enc.image, enc.records, enc.total_bits):
        print(line)
    print(f"encode_seconds: {time.perf_counter() - t0:.2f}")
    return EXIT_OK


def cmd_decode(args) -> int:
    data = Path(args.input).read_bytes()
    res = decode_stream(data)
    write_image(args.output, res.image)
    print(f"decoded {res.header.width}x{res.header.height} -> {args.output}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    data = Path(args.input).read_bytes()
    res = decode_stream(data)
    h = res.header
    print(f"size: {h.width}x{h.height}  n: {h.n}  algorithm: {ALGORITHM_NAMES[h.algorithm]}  "
          f"flavor: {h.flavor.name.lower()}  step: {h.coeff_step:g}  lambda: {h.lam:g}  q_theta: {h.q_theta}")
    if args.reference:
        ref = read_image(args.reference)
        if ref.shape != res.image.shape:
            raise UsageError("reference image size does not match the bitstream")
        lines = _report(ref, res.image, res.records, 8 * len(data))
    else:
        lines = _report(res.image, res.image, res.records, 8 * len(data))
        lines = [l for l in lines if not l.startswith(("psnr", "ssim"))]
    for line in lines:
        print(line)
    return EXIT_OK


def _corpus(path: str) -> list[Path]:
    p = Path(path)
    if p.is_file():
        return [p]
    if not p.is_dir():
        raise FileNotFoundError(f"no such corpus: {path}")
    files = sorted(p.glob("*.pgm")) + sorted(p.glob("*.res16"))
    if not files:
        raise UsageError(f"corpus {path} contains no .pgm or .res16 files")
    return files


def cmd_sweep(args) -> int:
    steps = args.steps or ([args.step] if args.step else None)
    if steps is None:
        raise UsageError("give --steps (at least 4 for BD-PSNR) or --step")
    try:
        sizes = [int(s) for s in args.sizes.split(",")]
        algs = [_ALGORITHMS[a.strip()] for a in args.algorithms.split(",") if a.strip()]
    except (ValueError, KeyError) as exc:
        raise UsageError(f"bad --sizes/--algorithms value: {exc}") from None
    args.n = sizes[0]
    files = _corpus(args.corpus)
    if Algorithm.DCT_ONLY not in algs:
        algs = [Algorithm.DCT_ONLY] + algs
    curves, points = {}, []
    for f in files:
        img = read_image(f)
        for n in sizes:
            for alg in algs:
                params = _params(args, steps[0], n, alg)
                curve = rd_sweep(img, params, steps, f.stem, threads=args.threads)
                curves[(f.stem, n, ALGORITHM_NAMES[alg])] = curve
                points += curve.points
                print(f"{f.stem} n={n} {ALGORITHM_NAMES[alg]}: "
                      + ", ".join(f"({p.bits_per_pixel:.3f} bpp, {p.psnr_db:.2f} dB)" for p in curve.points))
    write_points_csv(args.csv, points)
    if len(steps) >= 4:
        rows = bd_table(curves)
        bd_path = args.bd_csv or str(Path(args.csv).with_suffix("")) + "_bd.csv"
        write_bd_csv(bd_path, rows)
        for r in rows:
            print(f"BD-PSNR {r.image} n={r.n} {r.algorithm} vs dct: {r.bd_psnr_db:+.3f} dB")
        for (n, alg), v in summarize_bd(rows).items():
            print(f"mean BD-PSNR n={n} {alg}: {v:+.3f} dB")
    else:
        print("fewer than 4 steps: BD-PSNR skipped")
    if args.plot:
        for path in write_plot_data(args.plot, curves):
            print(f"plot data: {path}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest(tables_path=args.tables, out=sys.stdout)
    return EXIT_OK if ok else EXIT_INVARIANT


COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sdct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"sdct: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"sdct: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # malformed inputs that are not stream-format problems (e.g. sample range)
        print(f"sdct: invalid input: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
