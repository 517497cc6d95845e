import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.metrics import structural_similarity

from sdct.imageio import read_pgm
from sdct.metrics import bd_psnr, mse, psnr, ssim

from oracles import bd_oracle

DATA = Path(__file__).parent / "data"

CURVES = [
    ([0.25, 0.5, 1.0, 2.0], [28.0, 31.5, 35.2, 39.9], [0.22, 0.47, 0.96, 1.9], [28.4, 32.1, 35.9, 40.3]),
    ([0.2, 0.4, 0.9, 1.6, 2.2], [27.1, 30.0, 34.4, 37.6, 39.0], [0.3, 0.6, 1.1, 2.0], [29.0, 32.2, 35.1, 38.9]),
    ([0.1, 0.3, 0.7, 1.5], [25.0, 29.3, 33.0, 36.8], [0.12, 0.35, 0.8, 1.4], [24.6, 28.8, 32.9, 36.0]),
]


def test_psnr_closed_forms():
    a = np.zeros((8, 8), dtype=np.uint8)
    b = np.ones((8, 8), dtype=np.uint8)
    assert psnr(a, b) == pytest.approx(10 * math.log10(255 ** 2), abs=1e-12)
    assert psnr(a, b) == pytest.approx(48.1308, abs=1e-4)
    assert psnr(a, a) == math.inf
    assert psnr(a, 2 * b) == pytest.approx(psnr(a, b) - 20 * math.log10(2), abs=1e-12)
    assert mse(a, 3 * b) == 9.0
    with pytest.raises(ValueError):
        psnr(a, np.zeros((8, 9)))


def _pairs():
    cam = read_pgm(DATA / "camera.pgm")
    brick = read_pgm(DATA / "brick.pgm")
    rng = np.random.default_rng(11)
    noisy = np.clip(cam + rng.normal(0, 12, cam.shape), 0, 255).astype(np.uint8)
    shifted = np.clip(cam.astype(int) + 20, 0, 255).astype(np.uint8)
    return [
        (cam, noisy),
        (cam, 255 - cam),
        (cam, shifted),
        (brick, cam),
        (brick, np.clip(brick // 16 * 16, 0, 255).astype(np.uint8)),
    ]


@pytest.mark.parametrize("k", range(5))
def test_ssim_matches_reference_implementation(k):
    a, b = _pairs()[k]
    ref = structural_similarity(a, b, gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
                                data_range=255)
    assert ssim(a, b) == pytest.approx(ref, abs=1e-6)


def test_ssim_identity_symmetry_and_luminance_term():
    cam = read_pgm(DATA / "camera.pgm")
    assert ssim(cam, cam) == pytest.approx(1.0, abs=1e-12)
    a, b = _pairs()[0]
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-9)
    # a flat pair differs only in luminance: SSIM = (2 mu1 mu2 + C1) / (mu1^2 + mu2^2 + C1)
    f1, f2 = np.full((32, 32), 100.0), np.full((32, 32), 140.0)
    c1 = (0.01 * 255) ** 2
    assert ssim(f1, f2) == pytest.approx((2 * 100 * 140 + c1) / (100 ** 2 + 140 ** 2 + c1), abs=1e-12)
    assert ssim(cam, 255 - cam) < 0.5


@pytest.mark.parametrize("curve", CURVES)
def test_bd_psnr_matches_numerical_oracle(curve):
    assert bd_psnr(*curve) == pytest.approx(bd_oracle(*curve), abs=1e-6)


def test_bd_psnr_constant_offset_and_identity():
    r, q = [0.2, 0.5, 1.1, 2.0], [27.0, 31.0, 35.0, 39.5]
    assert bd_psnr(r, q, r, q) == pytest.approx(0.0, abs=1e-12)
    assert bd_psnr(r, q, r, [v + 1 for v in q]) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_bd_psnr_antisymmetric_and_rate_scale_invariant(seed, scale):
    rng = np.random.default_rng(seed)
    r1 = np.sort(rng.uniform(0.1, 3.0, 5))
    r2 = np.sort(rng.uniform(0.1, 3.0, 5))
    if min(r1.max(), r2.max()) <= max(r1.min(), r2.min()) * 1.05 or np.any(np.diff(r1) < 1e-3) \
            or np.any(np.diff(r2) < 1e-3):
        return
    q1 = 30 + 6 * np.log2(r1) + rng.normal(0, 0.2, 5)
    q2 = 30.5 + 6 * np.log2(r2) + rng.normal(0, 0.2, 5)
    d = bd_psnr(r1, q1, r2, q2)
    assert bd_psnr(r2, q2, r1, q1) == pytest.approx(-d, abs=1e-9)
    assert bd_psnr(r1 * scale, q1, r2 * scale, q2) == pytest.approx(d, abs=1e-7)


def test_bd_psnr_rejects_bad_curves():
    with pytest.raises(ValueError):
        bd_psnr([0.1, 0.2, 0.3], [1, 2, 3], [0.1, 0.2, 0.3, 0.4], [1, 2, 3, 4])
    with pytest.raises(ValueError):
        bd_psnr([0.1, 0.2, 0.3, 0.4], [1, 2, 3, 4], [1, 2, 3, 4], [1, 2, 3, 4])
