"""Image quality metrics and the Bjontegaard delta-PSNR."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import gaussian_filter

SSIM_SIGMA = 1.5
SSIM_TRUNCATE = 3.5  # gives the 11x11 window
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(reference, test) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(reference, dtype=np.float64)
    b = np.asarray(test, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(reference, test) -> float:
    a, b = _pair(reference, test)
    return float(np.mean((a - b) ** 2))


def psnr(reference, test, peak: float = 255.0) -> float:
    """PSNR in dB; ``math.inf`` for identical inputs."""
    m = mse(reference, test)
    if m == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / m)


def ssim(reference, test, data_range: float = 255.0) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03.

    Local statistics use population (biased) moments; the mean is taken
    over pixels whose window lies inside the image.
    """
    a, b = _pair(reference, test)
    if a.ndim != 2:
        raise ValueError("ssim expects 2-D images")

    def blur(z):
        return gaussian_filter(z, SSIM_SIGMA, truncate=SSIM_TRUNCATE, mode="reflect")

    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    ma, mb = blur(a), blur(b)
    va = blur(a * a) - ma * ma
    vb = blur(b * b) - mb * mb
    cov = blur(a * b) - ma * mb
    s = ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
    pad = int(SSIM_TRUNCATE * SSIM_SIGMA + 0.5)
    if min(s.shape) <= 2 * pad:
        raise ValueError("image too small for an 11x11 window")
    return float(s[pad:-pad, pad:-pad].mean())


def _curve(rates, psnrs) -> tuple[np.ndarray, np.ndarray]:
    r = np.asarray(rates, dtype=np.float64)
    q = np.asarray(psnrs, dtype=np.float64)
    if r.shape != q.shape or r.ndim != 1:
        raise ValueError("rate and PSNR lists must be 1-D and of equal length")
    if r.size < 4:
        raise ValueError(f"BD computation needs at least 4 points, got {r.size}")
    if np.any(r <= 0) or not np.all(np.isfinite(q)):
        raise ValueError("rates must be positive and PSNRs finite")
    return np.log10(r), q


def bd_psnr(ref_rates, ref_psnr, test_rates, test_psnr) -> float:
    """Average PSNR gap (test minus reference) between cubic fits in log10(rate).

    The fits are integrated analytically over the overlapping log-rate
    interval.  Positive means the test curve is better.
    """
    lr1, q1 = _curve(ref_rates, ref_psnr)
    lr2, q2 = _curve(test_rates, test_psnr)
    lo = max(lr1.min(), lr2.min())
    hi = min(lr1.max(), lr2.max())
    if not hi > lo:
        raise ValueError("rate ranges do not overlap")
    p1 = np.polynomial.Polynomial.fit(lr1, q1, 3).convert().integ()
    p2 = np.polynomial.Polynomial.fit(lr2, q2, 3).convert().integ()
    return float(((p2(hi) - p2(lo)) - (p1(hi) - p1(lo))) / (hi - lo))
