"""Scale priors and the closed-form weight update.

Each voxel is modeled as Gaussian with mean u_i and random standard
deviation theta_i; minimizing the per-voxel objective
sigma^2 e^2 / theta^2 + 2 sigma^2 log theta + 2 sigma^2 J(theta) over
theta and substituting w = sigma^2 / theta^2 turns the scale prior into a
per-voxel quadratic regularization weight. For J(theta) = log theta the
stationary point is theta^2 = e^2 / 2, hence w = 2 sigma^2 / e^2; the
epsilon floor caps w where the residual vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .cube import HsiCube
from .errors import ParameterError, ShapeError


@dataclass(frozen=True)
class ScalePrior:
    """One of: jeffreys(eps) | local_variance(window, eps) | constant(w0)."""

    kind: str
    eps: float = 1e-4
    window: int = 3
    w0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("jeffreys", "local_variance", "constant"):
            raise ParameterError(f"unknown scale prior {self.kind!r}")
        if self.kind in ("jeffreys", "local_variance") and not self.eps > 0:
            raise ParameterError(f"eps must be > 0, got {self.eps}")
        if self.kind == "local_variance" and (self.window < 1 or self.window % 2 == 0):
            raise ParameterError(f"window must be odd and >= 1, got {self.window}")
        if self.kind == "constant" and self.w0 < 0:
            raise ParameterError(f"w0 must be >= 0, got {self.w0}")

    @classmethod
    def jeffreys(cls, eps: float = 1e-4) -> "ScalePrior":
        return cls(kind="jeffreys", eps=eps)

    @classmethod
    def local_variance(cls, window: int = 3, eps: float = 1e-4) -> "ScalePrior":
        return cls(kind="local_variance", window=window, eps=eps)

    @classmethod
    def constant(cls, w0: float) -> "ScalePrior":
        return cls(kind="constant", w0=w0)


@dataclass(frozen=True)
class GsmState:
    """Per-voxel weights w and local means u for noise level sigma."""

    w: np.ndarray
    u: np.ndarray
    sigma: float


def update_weights(x, u, sigma: float, prior: ScalePrior) -> np.ndarray:
    """Map the residual x - u to per-voxel regularization weights.

    jeffreys:        w = 2 sigma^2 / ((x - u)^2 + eps)
    local_variance:  w = sigma^2 / (Var_window(x - u) + eps)
    constant:        w = w0 everywhere
    """
    xa = x.data if isinstance(x, HsiCube) else np.asarray(x)
    ua = np.asarray(u)
    if xa.shape != ua.shape:
        raise ShapeError(f"x shape {xa.shape} != u shape {ua.shape}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    e = xa.astype(np.float64) - ua.astype(np.float64)
    s2 = float(sigma) ** 2
    if prior.kind == "jeffreys":
        w = 2.0 * s2 / (e * e + prior.eps)
    elif prior.kind == "local_variance":
        win = (1, prior.window, prior.window)
        mean = uniform_filter(e, size=win, mode="nearest")
        mean_sq = uniform_filter(e * e, size=win, mode="nearest")
        var = np.clip(mean_sq - mean * mean, 0.0, None)
        w = s2 / (var + prior.eps)
    else:
        w = np.full(e.shape, prior.w0, dtype=np.float64)
    return w.astype(np.float32)
