import math

import numpy as np
import pytest
from skimage.metrics import structural_similarity

from cassigsm import (HsiCube, MetricReport, ParameterError, ShapeError,
                      evaluate, psnr, psnr_per_band, ssim, ssim_per_band)
from conftest import random_cube


def test_psnr_identical_is_infinite(rng):
    a = random_cube(rng, 3, 12, 12)
    assert psnr(a, a) == math.inf
    assert np.isinf(psnr_per_band(a, a)).all()


def test_psnr_known_mse():
    # constant offset 0.1 gives MSE 0.01, hence 10*log10(100) = 20 dB
    a = HsiCube(np.zeros((2, 8, 8), dtype=np.float32))
    b = HsiCube(np.full((2, 8, 8), 0.1, dtype=np.float32))
    assert psnr(a, b, peak=1.0) == pytest.approx(20.0, abs=1e-6)


def test_psnr_symmetry(rng):
    a = random_cube(rng, 3, 10, 10)
    b = random_cube(rng, 3, 10, 10)
    assert psnr(a, b) == psnr(b, a)
    assert ssim(a, b) == ssim(b, a)


def test_psnr_monotone_on_noise_ladder(rng):
    base = random_cube(rng, 2, 16, 16)
    values = []
    for amp in (0.01, 0.02, 0.05, 0.1):
        noisy = HsiCube(base.data + amp * rng.standard_normal(base.shape)
                        .astype(np.float32))
        values.append(psnr(base, noisy))
    assert all(a > b for a, b in zip(values, values[1:]))


def test_psnr_shape_mismatch(rng):
    with pytest.raises(ShapeError):
        psnr(random_cube(rng, 2, 8, 8), random_cube(rng, 2, 8, 9))


def test_ssim_self_is_exactly_one(rng):
    a = random_cube(rng, 3, 16, 16)
    assert ssim(a, a) == 1.0
    assert (ssim_per_band(a, a) == 1.0).all()


def test_ssim_constant_pair_is_one():
    a = HsiCube(np.full((2, 12, 12), 0.5, dtype=np.float32))
    b = HsiCube(np.full((2, 12, 12), 0.5, dtype=np.float32))
    assert ssim(a, b) == 1.0


def test_ssim_inverted_is_low(rng):
    a = random_cube(rng, 2, 24, 24)
    b = HsiCube(1.0 - a.data)
    assert ssim(a, b) < 0.5


def test_ssim_bounds(rng):
    for _ in range(5):
        a = random_cube(rng, 2, 14, 14)
        b = random_cube(rng, 2, 14, 14)
        v = ssim(a, b)
        assert -1.0 <= v <= 1.0


def test_ssim_matches_reference_implementation(rng):
    a = random_cube(rng, 3, 20, 26)
    b = HsiCube(np.clip(a.data + 0.08 * rng.standard_normal(a.shape), 0, 1)
                .astype(np.float32))
    mine = ssim_per_band(a, b, peak=1.0)
    ref = np.array([
        structural_similarity(
            a.data[l].astype(np.float64), b.data[l].astype(np.float64),
            win_size=11, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False, data_range=1.0)
        for l in range(a.bands)
    ])
    np.testing.assert_allclose(mine, ref, atol=1e-10)


def test_ssim_window_too_large(rng):
    with pytest.raises(ParameterError):
        ssim(random_cube(rng, 2, 8, 8), random_cube(rng, 2, 8, 8))


def test_report_csv_and_summary(rng):
    a = random_cube(rng, 3, 12, 12)
    rep = evaluate(a, a)
    assert isinstance(rep, MetricReport)
    lines = rep.to_csv_string().splitlines()
    assert lines[0] == "band,psnr_db,ssim"
    assert lines[1].startswith("all,")
    assert len(lines) == 2 + a.bands
    assert "SSIM 1.0000" in rep.summary()
