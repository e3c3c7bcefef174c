"""Coordinate search over solver hyperparameters.

Line-scans one parameter grid at a time while holding the others fixed,
cycling until a full pass brings no improvement. Loss is the mean
per-element L1 reconstruction error over a set of (measurement, truth)
training pairs, so values are comparable across cube sizes. Evaluations
are cached; the log records each fresh evaluation exactly once.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .cube import HsiCube, Measurement
from .errors import DivergenceError, ParameterError, ShapeError
from .operator import ForwardOperator
from .solver import SolverConfig, run, tv_baseline

GSM_KEYS = ("sigma", "eps", "h", "delta0")
TV_KEYS = ("lambda_tv", "delta0")


@dataclass(frozen=True)
class TunerSpec:
    """Search space plus the training data it is scored on.

    grids maps parameter names to candidate values; allowed names are
    sigma, eps, h, delta0 for the scale-mixture solver and lambda_tv,
    delta0 for the TV baseline. The seed is recorded with the log (kept
    for randomized refinements; the plain scan uses no randomness).
    """

    grids: dict
    pairs: tuple
    op: ForwardOperator
    base: SolverConfig = field(default_factory=SolverConfig)
    algorithm: str = "gsm"
    tv_iters: int = 30
    max_cycles: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ("gsm", "tv"):
            raise ParameterError(f"algorithm must be 'gsm' or 'tv', got {self.algorithm!r}")
        allowed = GSM_KEYS if self.algorithm == "gsm" else TV_KEYS
        if not self.grids:
            raise ParameterError("grids must be nonempty")
        for k, vals in self.grids.items():
            if k not in allowed:
                raise ParameterError(f"unknown parameter {k!r}; allowed: {allowed}")
            if len(vals) == 0:
                raise ParameterError(f"grid for {k!r} is empty")
        if not self.pairs:
            raise ParameterError("training pairs must be nonempty")
        for meas, truth in self.pairs:
            self.op._check_meas(meas)
            self.op._check_cube(truth)


def _configure(params: dict, base: SolverConfig) -> SolverConfig:
    cfg = base
    if "sigma" in params:
        cfg = replace(cfg, sigma=float(params["sigma"]))
    if "eps" in params:
        cfg = replace(cfg, prior=replace(cfg.prior, eps=float(params["eps"])))
    if "h" in params:
        cfg = replace(cfg, bandwidth=float(params["h"]))
    if "delta0" in params:
        cfg = replace(cfg, delta0=float(params["delta0"]))
    return cfg


def loss(params: dict, pairs, op: ForwardOperator,
         base: SolverConfig = SolverConfig(), algorithm: str = "gsm",
         tv_iters: int = 30) -> float:
    """Mean per-element L1 error of the reconstructions against the truths."""
    if not pairs:
        raise ParameterError("training pairs must be nonempty")
    total = 0.0
    for d, (meas, truth) in enumerate(pairs):
        try:
            if algorithm == "tv":
                delta0 = float(params.get("delta0", base.delta0))
                recon, _ = tv_baseline(meas, op, lam=float(params.get("lambda_tv", 0.0)),
                                       iters=tv_iters, delta0=delta0)
            else:
                recon, _ = run(meas, op, _configure(params, base))
        except DivergenceError as err:
            raise DivergenceError(f"pair {d}: {err}") from err
        diff = recon.data.astype(np.float64) - truth.data.astype(np.float64)
        total += float(np.mean(np.abs(diff)))
    return total / len(pairs)


@dataclass(frozen=True)
class Evaluation:
    index: int
    params: dict
    loss: float


class SearchLog:
    def __init__(self, keys, seed: int):
        self.keys = tuple(keys)
        self.seed = seed
        self.evaluations: list[Evaluation] = []

    def append(self, params: dict, value: float):
        self.evaluations.append(Evaluation(len(self.evaluations), dict(params), value))

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["eval_index", *self.keys, "loss"])
        for ev in self.evaluations:
            writer.writerow([ev.index,
                             *[f"{ev.params[k]:.17g}" for k in self.keys],
                             f"{ev.loss:.17g}"])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_string())


def coordinate_search(spec: TunerSpec):
    """Cyclic per-parameter line scan. Returns (best_params, best_loss, log).

    Starts from the first value of every grid, so the returned loss never
    exceeds the loss at that initial point.
    """
    keys = list(spec.grids.keys())
    log = SearchLog(keys, spec.seed)
    cache: dict[tuple, float] = {}

    def evaluate(params: dict) -> float:
        key = tuple(params[k] for k in keys)
        if key not in cache:
            cache[key] = loss(params, spec.pairs, spec.op, spec.base,
                              spec.algorithm, spec.tv_iters)
            log.append(params, cache[key])
        return cache[key]

    current = {k: spec.grids[k][0] for k in keys}
    best = evaluate(current)
    for _ in range(spec.max_cycles):
        improved = False
        for k in keys:
            scan_best, scan_val = current[k], best
            for v in spec.grids[k]:
                trial = evaluate({**current, k: v})
                if trial < scan_val:
                    scan_best, scan_val = v, trial
            if scan_val < best:
                current = {**current, k: scan_best}
                best = scan_val
                improved = True
        if not improved:
            break
    return current, best, log
