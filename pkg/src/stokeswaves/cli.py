"""Command-line front end: ``stokeswaves <command> [--config FILE] [flags]``.

Every command reads one JSON config, applies flag overrides (flags win),
writes its artifacts into ``--out`` and prints a JSON summary on stdout.
Exit codes: 0 success, 1 numerical failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bifurcation as bf
from .dispersion import (
    RESONANCE_TOL,
    PhysicalParams,
    atlas_scan,
    classify_kernel,
    find_resonant_kappa,
    write_atlas,
)
from .errors import DomainError, GridTooSmallError, MisuseError, StokesError, UnsupportedConfigurationError
from .formats import to_json, write_branch_csv
from .reduction import kernel_basis
from .selfcheck import run_selfcheck
from .wavefield import SpectralGrid

USAGE_ERRORS = (DomainError, GridTooSmallError, MisuseError, UnsupportedConfigurationError)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # physics
    g: float = 1.0
    depth: float = math.inf
    kappa: float = 0.0
    gamma: float = 0.0
    j_star: int = 1
    partner_j: int | None = None
    j: int | None = None
    # discretization
    n_modes: int = 32
    dealias: int = 4
    dno_order: int = 6
    # tolerances
    resonance_tol: float = RESONANCE_TOL
    newton_tol: float = 1e-13
    residual_tol: float = 1e-10
    distinct_tol: float = bf.DISTINCT_TOL
    grad_tol: float = 1e-8
    j_max: int = 256
    # command specific
    epsilons: list = field(default_factory=lambda: [0.01, 0.02, 0.04])
    a_list: list = field(default_factory=lambda: [4e-4])
    c_list: list | None = None
    c_offset: float = 0.01
    seed: int = 0
    multistart: int = 16
    n_random: int = 64
    mountain_pass: bool = False
    path_nodes: int = 12
    mp_steps: int = 150
    harmonics: int = 4
    atlas: dict = field(default_factory=dict)
    out: str = "."

    TOLERANCES = ("resonance_tol", "newton_tol", "residual_tol", "distinct_tol", "grad_tol")

    @property
    def params(self) -> PhysicalParams:
        return PhysicalParams(self.g, self.depth, self.kappa, self.gamma)

    @property
    def grid(self) -> SpectralGrid:
        return SpectralGrid(self.n_modes, self.dealias * self.n_modes, self.dno_order)

    def validate(self, needs_grid: bool = False) -> "RunConfig":
        for name in self.TOLERANCES:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.j_star == 0:
            raise ConfigError("j_star must be nonzero")
        for name in ("n_modes", "j_max", "multistart", "path_nodes", "mp_steps", "harmonics"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.dealias < 3:
            raise ConfigError("dealias must be at least 3")
        if self.n_random < 0 or self.dno_order < 0:
            raise ConfigError("n_random and dno_order must be non-negative")
        if needs_grid:
            modes = [abs(m) for m in (self.j_star, self.partner_j) if m is not None]
            if self.n_modes < 4 * max(modes):
                raise ConfigError(f"n_modes = {self.n_modes} is below 4 * max|j| = {4 * max(modes)}")
        return self

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def dumps(self) -> str:
        return to_json(self.as_dict()) + "\n"


_FLOAT = {"g", "depth", "kappa", "gamma", "c_offset"} | set(RunConfig.TOLERANCES)
_INT = {"j_star", "n_modes", "dealias", "dno_order", "j_max", "seed", "multistart",
        "n_random", "path_nodes", "mp_steps", "harmonics"}
_OPT_INT = {"partner_j", "j"}
_FLOAT_LIST = {"epsilons", "a_list"}
_OPT_FLOAT_LIST = {"c_list"}


def _as_float(name, value):
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "-inf"):
        return float(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _as_int(name, value):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _coerce(name, value):
    if name in _FLOAT:
        return _as_float(name, value)
    if name in _INT:
        return _as_int(name, value)
    if name in _OPT_INT:
        return None if value is None else _as_int(name, value)
    if name in _FLOAT_LIST or name in _OPT_FLOAT_LIST:
        if value is None and name in _OPT_FLOAT_LIST:
            return None
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list of numbers")
        return [_as_float(name, v) for v in value]
    if name == "mountain_pass":
        if not isinstance(value, bool):
            raise ConfigError("mountain_pass must be true or false")
        return value
    if name == "atlas":
        if not isinstance(value, dict):
            raise ConfigError("atlas must be an object mapping parameter names to values")
        allowed = {"g", "depth", "kappa", "gamma", "j_star"}
        out = {}
        for key in ("g", "depth", "kappa", "gamma", "j_star"):
            if key not in value:
                continue
            raw = value[key] if isinstance(value[key], list) else [value[key]]
            conv = _as_int if key == "j_star" else _as_float
            out[key] = [conv(key, v) for v in raw]
        unknown = set(value) - allowed
        if unknown:
            raise ConfigError(f"unknown atlas keys: {sorted(unknown)}")
        return out
    if name == "out":
        if not isinstance(value, str):
            raise ConfigError("out must be a path string")
        return value
    raise ConfigError(f"unknown config key {name!r}")


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """RunConfig from JSON text; entries of ``overrides`` replace file values."""
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw.update(overrides or {})
    names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    return RunConfig(**{k: _coerce(k, v) for k, v in raw.items()}).validate()


# ------------------------------------------------------------------ commands


def _write(cfg, name, text):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def cmd_classify(cfg: RunConfig, threads: int = 1) -> tuple:
    record = classify_kernel(cfg.params, cfg.j_star, cfg.j_max, cfg.resonance_tol).as_dict()
    _write(cfg, "classify.json", to_json(record) + "\n")
    return 0, record


def cmd_resonance(cfg: RunConfig, threads: int = 1) -> tuple:
    j = cfg.j if cfg.j is not None else cfg.partner_j
    if j is None:
        raise ConfigError("resonance needs the partner mode j")
    search = find_resonant_kappa(cfg.g, cfg.depth, cfg.gamma, cfg.j_star, j, full_output=True)
    record = {
        "g": cfg.g, "depth": cfg.depth, "gamma": cfg.gamma, "j_star": cfg.j_star, "j": j,
        "kappa": search.kappa, "gap_residual": search.residual, "roots": search.roots,
    }
    _write(cfg, "resonance.json", to_json(record) + "\n")
    return 0, record


def cmd_atlas(cfg: RunConfig, threads: int = 1) -> tuple:
    axes = {k: cfg.atlas.get(k, getattr(cfg, k)) for k in ("g", "depth", "kappa", "gamma", "j_star")}
    records = atlas_scan(axes, j_max=cfg.j_max, tol=cfg.resonance_tol, threads=threads)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "atlas.csv", "w", newline="") as fh:
        write_atlas(records, fh)
    dims = [r.kernel_dim for r in records]
    return 0, {"points": len(records), "dim2": dims.count(2), "dim4": dims.count(4), "file": "atlas.csv"}


def cmd_branch(cfg: RunConfig, threads: int = 1) -> tuple:
    cfg.validate(needs_grid=True)
    points = bf.nonresonant_branch(
        cfg.params, cfg.grid, cfg.j_star, cfg.epsilons, tol=cfg.residual_tol,
        threads=threads, resonance_tol=cfg.resonance_tol, range_tol=cfg.newton_tol,
    )
    kernel = kernel_basis(cfg.params, cfg.grid, cfg.j_star, cfg.resonance_tol)
    c_star = kernel.c_star
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "branch.csv", "w", newline="") as fh:
        write_branch_csv(points, fh, cfg.harmonics)
    summary = {"c_star": c_star, "points": len(points),
               "max_residual": max(p.residual_norm for p in points)}
    nonzero = [(p.amplitude, p.c - c_star) for p in points if p.amplitude != 0 and p.c != c_star]
    if len(nonzero) >= 2:
        summary["speed_slope"] = bf.loglog_slope(*zip(*nonzero))
    _write(cfg, "branch.json", to_json(summary) + "\n")
    return 0, summary


def _resonant_setup(cfg):
    cfg.validate(needs_grid=False)
    params = cfg.params
    record = classify_kernel(params, cfg.j_star, cfg.j_max, cfg.resonance_tol)
    if record.kernel_dim != 4:
        raise MisuseError(f"mode {cfg.j_star} is not resonant for these parameters",
                          {"nearest_residual": record.nearest_residual})
    partner = cfg.partner_j if cfg.partner_j is not None else record.partner
    cfg = dataclasses.replace(cfg, partner_j=partner).validate(needs_grid=True)
    return cfg, record


def cmd_resonant_speed(cfg: RunConfig, threads: int = 1) -> tuple:
    cfg, record = _resonant_setup(cfg)
    params, grid = cfg.params, cfg.grid
    c_star = record.c_star
    c_list = cfg.c_list if cfg.c_list is not None else [c_star + cfg.c_offset, c_star - cfg.c_offset]
    rows, sides, summary = [], [], {"c_star": c_star, "partner_j": cfg.partner_j, "speeds": []}
    for c in c_list:
        points = bf.resonant_fixed_speed(
            params, grid, cfg.j_star, cfg.partner_j, c, multistart=cfg.multistart,
            tol=cfg.residual_tol, seed=cfg.seed, n_random=cfg.n_random,
            distinct_tol=cfg.distinct_tol, threads=threads, range_tol=cfg.newton_tol,
        )
        entry = {"c": c, "side": "above" if c > c_star else "below", "orbits": [
            {"phi": p.phi, "momentum": p.momentum, "residual": p.residual_norm,
             "orbit_tag": list(p.orbit_tag.flat)} for p in points
        ]}
        if cfg.mountain_pass:
            entry["mountain_pass"] = _mountain_pass_entry(cfg, params, grid, c, points)
        summary["speeds"].append(entry)
        rows += points
        sides += [entry["side"]] * len(points)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "resonant_speed.csv", "w", newline="") as fh:
        write_branch_csv(rows, fh, cfg.harmonics, extra={"side": sides, "phi": [p.phi for p in rows]})
    _write(cfg, "resonant_speed.json", to_json(summary) + "\n")
    return 0, summary


def _mountain_pass_entry(cfg, params, grid, c, points):
    kernel = bf._resonant_kernel(params, grid, cfg.j_star, cfg.partner_j)
    try:
        mp = bf.mountain_pass(params, grid, kernel, c, path_nodes=cfg.path_nodes,
                              steps=cfg.mp_steps, range_tol=cfg.newton_tol)
    except bf.GeometryError as exc:
        return {"geometry": False, "message": str(exc)}
    entry = {"geometry": True, "level": mp.level, "converged": mp.converged,
             "iterations": mp.iterations, "gradient_norm": mp.gradient_norm}
    v, gnorm, ok = bf.refine_critical_point(params, kernel, grid, c, mp.point, range_tol=cfg.newton_tol)
    entry["polished_gradient"] = gnorm
    if ok and points:
        entry["distance_to_nearest_orbit"] = min(bf.orbit_distance(kernel, v, p.coords) for p in points)
    return entry


def cmd_resonant_momentum(cfg: RunConfig, threads: int = 1) -> tuple:
    cfg, record = _resonant_setup(cfg)
    params, grid = cfg.params, cfg.grid
    rows, kinds, summary = [], [], {"c_star": record.c_star, "partner_j": cfg.partner_j, "levels": []}
    for a in cfg.a_list:
        low, high = bf.resonant_fixed_momentum(
            params, grid, cfg.j_star, cfg.partner_j, a, multistart=cfg.multistart,
            tol=cfg.residual_tol, grad_tol=cfg.grad_tol, threads=threads, range_tol=cfg.newton_tol,
        )
        kernel = bf._resonant_kernel(params, grid, cfg.j_star, cfg.partner_j)
        summary["levels"].append({
            "a": a,
            "min": _level_entry(low),
            "max": _level_entry(high),
            "distinct": bf.orbit_distinct(kernel, low.coords, high.coords, cfg.distinct_tol),
        })
        rows += [low, high]
        kinds += ["min", "max"]
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "resonant_momentum.csv", "w", newline="") as fh:
        write_branch_csv(rows, fh, cfg.harmonics, extra={"kind": kinds, "energy": [p.energy for p in rows]})
    _write(cfg, "resonant_momentum.json", to_json(summary) + "\n")
    return 0, summary


def _level_entry(p):
    # on the momentum level set the constrained functional is the energy
    return {"c": p.c, "energy": p.energy, "residual": p.residual_norm, "momentum": p.momentum}


def cmd_selfcheck(cfg: RunConfig, threads: int = 1) -> tuple:
    cfg.validate(needs_grid=True)
    checks = run_selfcheck(cfg.params, cfg.grid, cfg.j_star, seed=cfg.seed)
    failed = [c.name for c in checks if not c.passed]
    report = {"passed": not failed, "failed": failed, "checks": [c.as_dict() for c in checks]}
    _write(cfg, "selfcheck.json", to_json(report) + "\n")
    return (1 if failed else 0), report


COMMANDS = {
    "classify": cmd_classify,
    "resonance": cmd_resonance,
    "atlas": cmd_atlas,
    "branch": cmd_branch,
    "resonant-speed": cmd_resonant_speed,
    "resonant-momentum": cmd_resonant_momentum,
    "selfcheck": cmd_selfcheck,
}


# ------------------------------------------------------------------ parsing


def _flag_type(name):
    if name in _FLOAT:
        return float
    if name in _INT or name in _OPT_INT:
        return int
    if name in _FLOAT_LIST or name in _OPT_FLOAT_LIST:
        return float
    return str


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--threads", type=int, help="worker cap (default: $STOKES_THREADS or 1)")
    common.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "atlas":
            common.add_argument(flag, dest=f.name, default=argparse.SUPPRESS, type=json.loads,
                                help="atlas grid as a JSON object")
        elif f.name == "mountain_pass":
            common.add_argument(flag, dest=f.name, default=argparse.SUPPRESS,
                                action=argparse.BooleanOptionalAction)
        elif f.name in _FLOAT_LIST or f.name in _OPT_FLOAT_LIST:
            common.add_argument(flag, dest=f.name, default=argparse.SUPPRESS, type=float, nargs="+")
        else:
            common.add_argument(flag, dest=f.name, default=argparse.SUPPRESS, type=_flag_type(f.name))
    parser = argparse.ArgumentParser(prog="stokeswaves", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _threads(value) -> int:
    if value is None:
        env = os.environ.get("STOKES_THREADS", "").strip()
        if not env:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"STOKES_THREADS must be an integer, got {env!r}") from None
    if value < 1:
        raise ConfigError("threads must be at least 1")
    return value


def _plain(obj):
    # diagnostics may carry arbitrary objects; keep what JSON can hold
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if obj is None or isinstance(obj, (bool, int, float, str, np.integer, np.floating, np.bool_)):
        return obj
    return repr(obj)


def _fail(code, exc):
    body = {"error": type(exc).__name__, "message": str(exc),
            "details": _plain(getattr(exc, "details", {}))}
    sys.stderr.write(to_json(body) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    ns = vars(args)
    command, path = ns.pop("command"), ns.pop("config")
    threads, print_only = ns.pop("threads"), ns.pop("print_config")
    try:
        text = Path(path).read_text() if path else "{}"
        cfg = parse_config(text, ns)
        threads = _threads(threads)
    except (OSError, ConfigError, *USAGE_ERRORS) as exc:
        return _fail(2, exc)
    if print_only:
        sys.stdout.write(cfg.dumps())
        return 0
    try:
        code, summary = COMMANDS[command](cfg, threads)
    except (ConfigError, *USAGE_ERRORS) as exc:
        return _fail(2, exc)
    except (StokesError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(1, exc)
    sys.stdout.write(to_json(summary) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
