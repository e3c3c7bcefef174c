"""Command-line front door.

Subcommands: gen, gen-mask, simulate, reconstruct, evaluate, tune,
export-band. Every flag can also come from a plain key=value config file
(--config); explicit flags win, unknown keys are rejected, and each run
echoes its fully resolved configuration to stderr in the same key=value
form, so the echo replays the run.

Exit codes: 0 ok, 2 usage/parse/I-O, 3 shape mismatch, 4 divergence.
Thread count of the compiled kernels follows OMP_NUM_THREADS.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import formats, metrics
from .cube import HsiCube, SceneSpec, generate_scene, random_mask
from .errors import (CassiError, DivergenceError, FormatError, ParameterError,
                     ShapeError)
from .operator import ForwardOperator, NoiseModel, add_noise
from .prior import ScalePrior
from .solver import SolverConfig, run, tv_baseline
from .tune import TunerSpec, coordinate_search


class UsageError(CassiError):
    """Bad flag/config combination; maps to exit 2."""


@dataclass(frozen=True)
class Opt:
    name: str
    typ: type = str
    default: object = None
    required: bool = False
    choices: tuple = ()
    multi: bool = False
    is_bool: bool = False
    help: str = ""

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


_SOLVER_OPTS = [
    Opt("stages", int, 4, help="outer stages"),
    Opt("inner", int, 10, help="gradient steps per stage"),
    Opt("sigma", float, 0.05, help="noise level of the data-fit model"),
    Opt("eps", float, 1e-4, help="weight floor of the scale prior"),
    Opt("prior", str, "jeffreys", choices=("jeffreys", "localvar", "constant"),
        help="scale prior variant"),
    Opt("window", int, 3, help="window of the localvar prior"),
    Opt("w0", float, 0.0, help="weight of the constant prior"),
    Opt("q", int, 7, help="filter length (odd)"),
    Opt("bandwidth", float, 0.1, help="similarity bandwidth h"),
    Opt("delta0", float, 0.5, help="initial step size"),
    Opt("beta", float, 0.5, help="backtracking shrink factor"),
    Opt("backtrack", is_bool=True, default=True, help="line-search the step size"),
    Opt("init", str, "adjoint", choices=("adjoint", "zero"), help="initial estimate"),
]

COMMANDS = {
    "gen": [
        Opt("height", int, required=True),
        Opt("width", int, required=True),
        Opt("bands", int, required=True),
        Opt("blobs", int, 6),
        Opt("seed", int, 0),
        Opt("smoothness", float, 2.0),
        Opt("out", str, required=True, help="output cube (HSC1)"),
    ],
    "gen-mask": [
        Opt("height", int, required=True),
        Opt("width", int, required=True),
        Opt("density", float, 0.5),
        Opt("kind", str, "binary", choices=("binary", "uniform")),
        Opt("seed", int, 0),
        Opt("out", str, required=True, help="output mask (MSK1)"),
    ],
    "simulate": [
        Opt("cube", str, required=True, help="input cube (HSC1)"),
        Opt("mask", str, required=True, help="coded aperture (MSK1)"),
        Opt("step", int, 2, help="dispersion step in pixels per band"),
        Opt("noise", str, "none", choices=("none", "gaussian", "shot")),
        Opt("noise-sigma", float, 0.01),
        Opt("bits", int, 11),
        Opt("noise-seed", int, 0),
        Opt("out", str, required=True, help="output measurement (MEA1)"),
    ],
    "reconstruct": [
        Opt("meas", str, required=True, help="input measurement (MEA1)"),
        Opt("mask", str, required=True, help="coded aperture (MSK1)"),
        Opt("out", str, required=True, help="output cube (HSC1)"),
        Opt("trace", str, help="optional objective trace CSV"),
        Opt("algorithm", str, "gsm", choices=("gsm", "tv")),
        Opt("lambda-tv", float, 0.01),
        Opt("tv-iters", int, 50),
        *_SOLVER_OPTS,
    ],
    "evaluate": [
        Opt("recon", str, required=True),
        Opt("truth", str, required=True),
        Opt("peak", float, 1.0),
        Opt("out", str, help="also write the CSV report here"),
    ],
    "tune": [
        Opt("mask", str, required=True),
        Opt("step", int, 2),
        Opt("pair", str, required=True, multi=True,
            help="measurement:truth path pair, repeatable"),
        Opt("grid", str, required=True, multi=True,
            help="name=v1,v2,... value grid, repeatable"),
        Opt("algorithm", str, "gsm", choices=("gsm", "tv")),
        Opt("cycles", int, 4),
        Opt("tv-iters", int, 30),
        Opt("seed", int, 0),
        Opt("out", str, required=True, help="search log CSV"),
        Opt("stages", int, 4),
        Opt("inner", int, 10),
        Opt("q", int, 7),
    ],
    "export-band": [
        Opt("cube", str, required=True),
        Opt("band", int, required=True),
        Opt("scale", str, "fixed", choices=("fixed", "minmax")),
        Opt("peak", float, 1.0),
        Opt("out", str, required=True, help="output grayscale PNG"),
    ],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cassigsm",
        description="Snapshot spectral imaging: simulate and reconstruct.")
    subs = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in COMMANDS.items():
        sp = subs.add_parser(cmd)
        sp.add_argument("--config", default=None,
                        help="key=value file; explicit flags override it")
        for o in opts:
            flag = "--" + o.name
            if o.is_bool:
                sp.add_argument(flag, dest=o.dest, default=None,
                                action=argparse.BooleanOptionalAction, help=o.help)
            elif o.multi:
                sp.add_argument(flag, dest=o.dest, action="append", default=None,
                                help=o.help)
            else:
                kw = {"dest": o.dest, "type": o.typ, "default": None, "help": o.help}
                if o.choices:
                    kw["choices"] = o.choices
                sp.add_argument(flag, **kw)
    return parser


def _parse_config_file(path):
    pairs = []
    try:
        text = open(path).read()
    except OSError as err:
        raise UsageError(f"cannot read config file: {err}") from err
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        pairs.append((key.strip(), value.strip()))
    return pairs


def _coerce(o: Opt, raw: str):
    if o.is_bool:
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise UsageError(f"{o.name}: expected true/false, got {raw!r}")
    try:
        val = o.typ(raw)
    except ValueError as err:
        raise UsageError(f"{o.name}: {err}") from err
    if o.choices and val not in o.choices:
        raise UsageError(f"{o.name}: {val!r} not in {o.choices}")
    return val


def _resolve(args, opts) -> dict:
    by_name = {o.name: o for o in opts}
    file_vals: dict[str, list] = {}
    if args.config:
        for key, raw in _parse_config_file(args.config):
            o = by_name.get(key)
            if o is None:
                raise UsageError(f"unknown config key {key!r}")
            if not o.multi and key in file_vals:
                raise UsageError(f"duplicate config key {key!r}")
            file_vals.setdefault(key, []).append(_coerce(o, raw))
    resolved = {}
    for o in opts:
        flag_val = getattr(args, o.dest)
        if flag_val is not None:
            resolved[o.dest] = flag_val
        elif o.name in file_vals:
            vals = file_vals[o.name]
            resolved[o.dest] = vals if o.multi else vals[0]
        else:
            resolved[o.dest] = o.default
        if o.required and resolved[o.dest] is None:
            raise UsageError(f"missing required option --{o.name}")
    return resolved


def _echo_config(command: str, opts, resolved: dict):
    lines = [f"# {command} resolved configuration"]
    for o in opts:
        val = resolved[o.dest]
        if val is None:
            continue
        if o.multi:
            lines.extend(f"{o.name}={v}" for v in val)
        elif o.is_bool:
            lines.append(f"{o.name}={'true' if val else 'false'}")
        else:
            lines.append(f"{o.name}={val}")
    print("\n".join(lines), file=sys.stderr)


def _make_prior(cfg: dict) -> ScalePrior:
    if cfg["prior"] == "jeffreys":
        return ScalePrior.jeffreys(cfg["eps"])
    if cfg["prior"] == "localvar":
        return ScalePrior.local_variance(cfg["window"], cfg["eps"])
    return ScalePrior.constant(cfg["w0"])


def _solver_config(cfg: dict) -> SolverConfig:
    return SolverConfig(
        stages=cfg["stages"], inner_steps=cfg["inner"], delta0=cfg["delta0"],
        beta=cfg["beta"], backtracking=cfg["backtrack"], sigma=cfg["sigma"],
        prior=_make_prior(cfg), q=cfg["q"], bandwidth=cfg["bandwidth"],
        init=cfg["init"])


def _cmd_gen(cfg):
    spec = SceneSpec(height=cfg["height"], width=cfg["width"], bands=cfg["bands"],
                     blobs=cfg["blobs"], seed=cfg["seed"],
                     spectral_smoothness=cfg["smoothness"])
    formats.save_cube(generate_scene(spec), cfg["out"])
    return 0


def _cmd_gen_mask(cfg):
    mask = random_mask(cfg["height"], cfg["width"], density=cfg["density"],
                       seed=cfg["seed"], kind=cfg["kind"])
    formats.save_mask(mask, cfg["out"])
    return 0


def _cmd_simulate(cfg):
    cube = formats.load_cube(cfg["cube"])
    mask = formats.load_mask(cfg["mask"])
    op = ForwardOperator(mask, bands=cube.bands, step=cfg["step"])
    meas = op.forward(cube)
    if cfg["noise"] == "gaussian":
        meas = add_noise(meas, NoiseModel.gaussian(cfg["noise_sigma"],
                                                   seed=cfg["noise_seed"]))
    elif cfg["noise"] == "shot":
        meas = add_noise(meas, NoiseModel.shot(cfg["bits"], seed=cfg["noise_seed"]))
    formats.save_measurement(meas, cfg["out"])
    return 0


def _cmd_reconstruct(cfg):
    meas = formats.load_measurement(cfg["meas"])
    mask = formats.load_mask(cfg["mask"])
    op = ForwardOperator(mask, bands=meas.bands, step=meas.step)
    if cfg["algorithm"] == "tv":
        recon, trace = tv_baseline(meas, op, lam=cfg["lambda_tv"],
                                   iters=cfg["tv_iters"], delta0=cfg["delta0"],
                                   beta=cfg["beta"], init=cfg["init"])
    else:
        recon, trace = run(meas, op, _solver_config(cfg))
    formats.save_cube(recon, cfg["out"])
    if cfg["trace"]:
        trace.to_csv(cfg["trace"])
    return 0


def _cmd_evaluate(cfg):
    recon = formats.load_cube(cfg["recon"], peak=cfg["peak"])
    truth = formats.load_cube(cfg["truth"], peak=cfg["peak"])
    report = metrics.evaluate(recon, truth, peak=cfg["peak"])
    text = report.to_csv_string()
    sys.stdout.write(text)
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    print(report.summary(), file=sys.stderr)
    return 0


def _parse_pairs(raw_pairs):
    pairs = []
    for raw in raw_pairs:
        meas_path, sep, truth_path = raw.partition(":")
        if not sep or not meas_path or not truth_path:
            raise UsageError(f"pair must be measurement:truth, got {raw!r}")
        pairs.append((formats.load_measurement(meas_path),
                      formats.load_cube(truth_path)))
    return tuple(pairs)


def _parse_grids(raw_grids):
    grids = {}
    for raw in raw_grids:
        name, sep, values = raw.partition("=")
        if not sep or not name or not values:
            raise UsageError(f"grid must be name=v1,v2,..., got {raw!r}")
        try:
            grids[name.strip()] = tuple(float(v) for v in values.split(","))
        except ValueError as err:
            raise UsageError(f"grid {name!r}: {err}") from err
    return grids


def _cmd_tune(cfg):
    mask = formats.load_mask(cfg["mask"])
    pairs = _parse_pairs(cfg["pair"])
    op = ForwardOperator(mask, bands=pairs[0][0].bands, step=cfg["step"])
    base = SolverConfig(stages=cfg["stages"], inner_steps=cfg["inner"], q=cfg["q"])
    spec = TunerSpec(grids=_parse_grids(cfg["grid"]), pairs=pairs, op=op, base=base,
                     algorithm=cfg["algorithm"], tv_iters=cfg["tv_iters"],
                     max_cycles=cfg["cycles"], seed=cfg["seed"])
    best, best_loss, log = coordinate_search(spec)
    log.to_csv(cfg["out"])
    for k in sorted(best):
        print(f"best {k}={best[k]:.17g}")
    print(f"best loss={best_loss:.17g}")
    return 0


def _cmd_export_band(cfg):
    from PIL import Image

    cube = formats.load_cube(cfg["cube"], peak=cfg["peak"])
    if not 0 <= cfg["band"] < cube.bands:
        raise UsageError(f"band {cfg['band']} out of range [0, {cube.bands})")
    plane = cube.data[cfg["band"]].astype(np.float64)
    if cfg["scale"] == "minmax":
        lo, hi = float(plane.min()), float(plane.max())
        plane = (plane - lo) / (hi - lo) if hi > lo else np.zeros_like(plane)
    else:
        plane = np.clip(plane / cfg["peak"], 0.0, 1.0)
    # round half away from zero so 0.5 * 255 = 127.5 lands on 128
    img = np.clip(np.floor(plane * 255.0 + 0.5), 0, 255).astype(np.uint8)
    Image.fromarray(img, mode="L").save(cfg["out"], format="PNG")
    return 0


_DISPATCH = {
    "gen": _cmd_gen,
    "gen-mask": _cmd_gen_mask,
    "simulate": _cmd_simulate,
    "reconstruct": _cmd_reconstruct,
    "evaluate": _cmd_evaluate,
    "tune": _cmd_tune,
    "export-band": _cmd_export_band,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    opts = COMMANDS[args.command]
    try:
        resolved = _resolve(args, opts)
        _echo_config(args.command, opts, resolved)
        return _DISPATCH[args.command](resolved)
    except (UsageError, FormatError, ParameterError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ShapeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except DivergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
