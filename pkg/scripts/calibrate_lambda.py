"""Calibrate the constant c0 of the lambda pairing lambda = 0.85 * c0 * step**2.

Only the plain DCT is involved: for each candidate c0, the DCT codec with
Lagrangian coefficient decisions is compared (BD-PSNR) against plain
rounding on the test corpus, and the c0 with the largest mean gain is kept.
"""

import argparse
from pathlib import Path

import numpy as np

from sdct.codec import Algorithm, CodecParams, LambdaPolicy
from sdct.evaluation import bd_between, rd_sweep
from sdct.imageio import read_pgm

CANDIDATES = [0.01, 0.02, 0.03, 0.04, 0.08, 2.0 ** (-8.0 / 3.0)]
STEPS = [14.0, 22.0, 34.0, 54.0, 86.0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--corpus", default=Path(__file__).resolve().parents[1] / "tests" / "data")
    ap.add_argument("--sizes", default="8,16,32")
    args = ap.parse_args()
    images = {p.stem: read_pgm(p) for p in sorted(Path(args.corpus).glob("*.pgm"))}
    sizes = [int(s) for s in args.sizes.split(",")]
    base = {
        (n, k): rd_sweep(img, CodecParams(n=n, algorithm=Algorithm.DCT_ONLY), STEPS, k)
        for n in sizes
        for k, img in images.items()
    }
    for c0 in CANDIDATES:
        gains = []
        for n in sizes:
            for k, img in images.items():
                params = CodecParams(n=n, algorithm=Algorithm.DCT_ONLY, dct_threshold=True,
                                     lambda_policy=LambdaPolicy(c0=c0))
                gains.append(bd_between(base[n, k], rd_sweep(img, params, STEPS, k)))
        print(f"c0={c0:.4f}  mean BD-PSNR of Lagrangian decisions vs rounding: {np.mean(gains):+.3f} dB")


if __name__ == "__main__":
    main()
