"""The snapshot measurement operator A, its exact adjoint, and noise.

A applies modulate (mask), shift (band l moves step*l columns right) and
sum over bands; the adjoint extracts the mask-weighted shifted windows.
A dense-matrix view is available for small instances as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cube import HsiCube, Mask2D, Measurement
from .errors import ParameterError, ShapeError

DENSE_LIMIT = 4096


class ForwardOperator:
    """Measurement operator for one mask, band count and dispersion step."""

    __slots__ = ("mask", "bands", "step")

    def __init__(self, mask: Mask2D, bands: int, step: int = 2):
        if bands < 1:
            raise ParameterError(f"band count must be >= 1, got {bands}")
        if step < 0:
            raise ParameterError(f"dispersion step must be >= 0, got {step}")
        self.mask = mask
        self.bands = int(bands)
        self.step = int(step)

    @property
    def height(self) -> int:
        return self.mask.height

    @property
    def width(self) -> int:
        return self.mask.width

    @property
    def meas_width(self) -> int:
        return self.width + self.step * (self.bands - 1)

    def shifts(self) -> np.ndarray:
        """Per-band column displacement: step * band_index."""
        return self.step * np.arange(self.bands)

    def _check_cube(self, cube: HsiCube):
        if cube.shape != (self.bands, self.height, self.width):
            raise ShapeError(
                f"cube shape {cube.shape} does not match operator "
                f"{(self.bands, self.height, self.width)}")

    def _check_meas(self, meas: Measurement):
        if (meas.height != self.height or meas.width != self.meas_width
                or meas.step != self.step or meas.bands != self.bands):
            raise ShapeError(
                f"measurement ({meas.height}x{meas.width}, step={meas.step}, "
                f"bands={meas.bands}) does not match operator "
                f"({self.height}x{self.meas_width}, step={self.step}, "
                f"bands={self.bands})")

    def forward(self, cube: HsiCube) -> Measurement:
        """y(r, c + step*l) = sum_l mask(r, c) * x(l, r, c)."""
        self._check_cube(cube)
        y = kernels.forward_shift_sum(self.mask.data, cube.data, self.step)
        return Measurement(y, step=self.step, bands=self.bands)

    def adjoint(self, meas: Measurement) -> HsiCube:
        """x(l, r, c) = mask(r, c) * y(r, c + step*l); exact transpose of forward."""
        self._check_meas(meas)
        x = kernels.adjoint_extract(self.mask.data, meas.data, self.bands, self.step)
        return HsiCube(x)

    def dense_matrix(self) -> np.ndarray:
        """Explicit (M, N) float64 matrix equivalent of forward.

        Row index r*Wm + c', column index l*H*W + r*W + c (band-major).
        Refuses instances with N > DENSE_LIMIT.
        """
        H, W, L, s = self.height, self.width, self.bands, self.step
        n = H * W * L
        if n > DENSE_LIMIT:
            raise ParameterError(
                f"dense matrix refused: N={n} exceeds limit {DENSE_LIMIT}")
        wm = self.meas_width
        a = np.zeros((H * wm, n), dtype=np.float64)
        mask = self.mask.data.astype(np.float64)
        for l in range(L):
            for r in range(H):
                for c in range(W):
                    a[r * wm + (c + s * l), (l * H + r) * W + c] = mask[r, c]
        return a


@dataclass(frozen=True)
class NoiseModel:
    """Measurement noise: additive Gaussian or quantized shot noise."""

    kind: str
    sigma: float = 0.0
    bits: int = 11
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "shot"):
            raise ParameterError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian" and self.sigma < 0:
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")
        if self.kind == "shot" and not 1 <= self.bits <= 16:
            raise ParameterError(f"bits must lie in [1, 16], got {self.bits}")

    @classmethod
    def gaussian(cls, sigma: float, seed: int = 0) -> "NoiseModel":
        return cls(kind="gaussian", sigma=sigma, seed=seed)

    @classmethod
    def shot(cls, bits: int, seed: int = 0) -> "NoiseModel":
        return cls(kind="shot", bits=bits, seed=seed)


def add_noise(meas: Measurement, model: NoiseModel) -> Measurement:
    """Apply the noise model; deterministic in the seed.

    Gaussian adds sigma * N(0, 1) per pixel. Shot noise scales the image so
    its maximum hits the full 2^bits - 1 range, draws Poisson counts, and
    rescales back; an all-zero image passes through unchanged. Negative
    results are clamped to 0.
    """
    rng = np.random.default_rng(model.seed)
    y = meas.data.astype(np.float64)
    if model.kind == "gaussian":
        if model.sigma == 0.0:
            return meas
        y = y + model.sigma * rng.standard_normal(y.shape)
    else:
        top = y.max()
        if top == 0.0:
            return meas
        levels = float(2 ** model.bits - 1)
        y = rng.poisson(y * (levels / top)).astype(np.float64) * (top / levels)
    return Measurement(np.clip(y, 0.0, None).astype(np.float32),
                       step=meas.step, bands=meas.bands)
