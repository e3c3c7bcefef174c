"""Image quality metrics for spectral cubes: PSNR and band-averaged SSIM.

SSIM uses the canonical configuration: per-band 2D index with an 11x11
Gaussian window (std 1.5), K1 = 0.01, K2 = 0.03, uncentered window
moments, and valid-window evaluation (no padded statistics), averaged
over bands. PSNR defaults to one MSE over the whole cube; per-band
variants of both are reported alongside.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .cube import HsiCube
from .errors import ParameterError, ShapeError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_pair(a: HsiCube, b: HsiCube):
    if a.shape != b.shape:
        raise ShapeError(f"cube shapes differ: {a.shape} vs {b.shape}")


def psnr(a: HsiCube, b: HsiCube, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE) over all voxels; +inf when the cubes match."""
    _check_pair(a, b)
    if not peak > 0:
        raise ParameterError(f"peak must be > 0, got {peak}")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def psnr_per_band(a: HsiCube, b: HsiCube, peak: float = 1.0) -> np.ndarray:
    _check_pair(a, b)
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = np.mean(diff * diff, axis=(1, 2))
    with np.errstate(divide="ignore"):
        return np.where(mse == 0.0, np.inf, 10.0 * np.log10(peak * peak / mse))


def _gaussian_taps(n: int, sigma: float) -> np.ndarray:
    half = (n - 1) / 2.0
    x = np.arange(n, dtype=np.float64) - half
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _window_mean(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # interior values are unaffected by the padding mode; the border is cropped
    pad = (len(taps) - 1) // 2
    sm = correlate1d(img, taps, axis=0, mode="nearest")
    sm = correlate1d(sm, taps, axis=1, mode="nearest")
    return sm[pad:-pad, pad:-pad]


def _ssim_band(x: np.ndarray, y: np.ndarray, peak: float, taps: np.ndarray) -> float:
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mx = _window_mean(x, taps)
    my = _window_mean(y, taps)
    mxx = _window_mean(x * x, taps)
    myy = _window_mean(y * y, taps)
    mxy = _window_mean(x * y, taps)
    vx = mxx - mx * mx
    vy = myy - my * my
    cov = mxy - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * cov + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def ssim_per_band(a: HsiCube, b: HsiCube, peak: float = 1.0) -> np.ndarray:
    _check_pair(a, b)
    if not peak > 0:
        raise ParameterError(f"peak must be > 0, got {peak}")
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise ParameterError(
            f"image {a.height}x{a.width} smaller than the {SSIM_WINDOW}x"
            f"{SSIM_WINDOW} ssim window")
    taps = _gaussian_taps(SSIM_WINDOW, SSIM_SIGMA)
    xa = a.data.astype(np.float64)
    xb = b.data.astype(np.float64)
    return np.array([_ssim_band(xa[l], xb[l], peak, taps) for l in range(a.bands)])


def ssim(a: HsiCube, b: HsiCube, peak: float = 1.0) -> float:
    """Mean of per-band 2D SSIM values."""
    return float(np.mean(ssim_per_band(a, b, peak)))


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    psnr_bands: np.ndarray
    ssim_bands: np.ndarray

    def summary(self) -> str:
        return (f"PSNR {self.psnr_db:.2f} dB | SSIM {self.ssim:.4f} "
                f"({len(self.psnr_bands)} bands)")

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["band", "psnr_db", "ssim"])
        writer.writerow(["all", f"{self.psnr_db:.17g}", f"{self.ssim:.17g}"])
        for i, (p, s) in enumerate(zip(self.psnr_bands, self.ssim_bands)):
            writer.writerow([i, f"{p:.17g}", f"{s:.17g}"])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_string())


def evaluate(a: HsiCube, b: HsiCube, peak: float = 1.0) -> MetricReport:
    """Full report of whole-cube and per-band PSNR/SSIM."""
    return MetricReport(
        psnr_db=psnr(a, b, peak),
        ssim=ssim(a, b, peak),
        psnr_bands=psnr_per_band(a, b, peak),
        ssim_bands=ssim_per_band(a, b, peak),
    )
