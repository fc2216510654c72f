"""Command-line interface: ``python -m hco <command> [options]``.

Every run is described by a flat JSON config (snake_case keys).  Values come
from the defaults, then ``--config FILE``, then command-line flags.  The
resolved config is written to ``<out>/config.json`` and embedded in every
JSON output, so feeding ``config.json`` back reproduces the outputs.

Exit codes: 0 success, 2 invalid config, 3 integration failure, 4 too many
undecided results, 5 property violation.
"""
from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import sys
from pathlib import Path

import numpy as np

from .cycles import Undecided, cycles_to_json, find_cycles
from .equilibria import Kind, SeedGridTooCoarse, equilibria_to_json, find_equilibria
from .integrator import (EventKind, IntegratorSettings, StepSizeUnderflow, detect_events,
                         events_to_csv, integrate)
from .model import Params
from .portrait import BracketInvalid, export_portrait, locate_connection, trace_separatrices
from .properties import random_params, run_suite
from .regimes import Label, locate_boundary, sweep_plane, sweep_settings

EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_UNDECIDED = 4
EXIT_PROPERTY = 5

PARAM_KEYS = ("gamma", "d", "k", "alpha", "delta")
SETTINGS_KEYS = ("rel_tol", "abs_tol", "max_step", "t_transient", "t_max")

DEFAULTS = {
    "gamma": 0.7, "d": 1.0, "k": 50.0, "alpha": 1.5 * math.pi, "delta": 1.5 * math.pi,
    "rel_tol": 1e-9, "abs_tol": 1e-9, "max_step": None, "t_transient": 200.0, "t_max": 2000.0,
    "seed": 0,
    # simulate
    "phi1": None, "phi2": None, "t_end": 100.0,  # None: rest state of one unit
    # cycles / sweep / locate
    "scan_points": 64, "ic_grid": 16, "n_alpha": 64, "n_delta": 64,
    "alpha_min": 0.0, "alpha_max": 2 * math.pi, "delta_min": 0.0, "delta_max": 2 * math.pi,
    "fast": True, "undecided_max": 0.05,
    "axis": "alpha", "bracket": None, "target": "regime",
    # check
    "n_random": 20,
}
ANGLE_KEYS = {"alpha", "delta", "phi1", "phi2", "alpha_min", "alpha_max", "delta_min",
              "delta_max"}


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ parsing

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.operand))
    raise ValueError("unsupported expression")


def parse_angle(text) -> float:
    """Radians from a number or an expression such as ``"3*pi/2"`` or ``"1.5*pi+0.01"``."""
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(_eval(ast.parse(str(text).strip(), mode="eval")))
    except (SyntaxError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse angle {text!r}") from exc


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in ANGLE_KEYS:
            return parse_angle(value)
        if key == "bracket":
            parts = value.split(",") if isinstance(value, str) else list(value)
            if len(parts) != 2:
                raise ValueError("expected two values")
            return [parse_angle(x) for x in parts]
        if key in ("axis", "target"):
            return str(value)
        if key == "fast":
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes")
            return bool(value)
        default = DEFAULTS[key]
        if key in ("max_step",):
            return float(value)
        if isinstance(default, int) and not isinstance(default, bool):
            return int(value)
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = dict(DEFAULTS)
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config: expected a JSON object")
        for k, v in data.items():
            if k not in DEFAULTS:
                raise ConfigError(f"{k}: unknown config key")
            cfg[k] = _coerce(k, v)
    for k, v in overrides.items():
        if v is not None:
            cfg[k] = _coerce(k, v)
    return cfg


def params_of(cfg: dict) -> Params:
    try:
        return Params(**{k: cfg[k] for k in PARAM_KEYS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def settings_of(cfg: dict) -> IntegratorSettings:
    try:
        return IntegratorSettings(**{k: cfg[k] for k in SETTINGS_KEYS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _dump(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ------------------------------------------------------------------ commands

def cmd_simulate(cfg, out: Path) -> int:
    p, st = params_of(cfg), settings_of(cfg)
    rest = math.asin(p.gamma) if p.gamma <= 1.0 else 0.0
    s0 = [rest if cfg[k] is None else cfg[k] for k in ("phi1", "phi2")]
    tr = integrate(s0, p, st, t_end=cfg["t_end"])
    tr.to_csv(out / "trajectory.csv")
    events = detect_events(tr, EventKind.SPIKE_1) + detect_events(tr, EventKind.SPIKE_2)
    events.sort(key=lambda e: e.time)
    events_to_csv(events, out / "events.csv")
    print(f"{len(tr)} steps, {len(events)} spikes -> {out}")
    return 0


def cmd_equilibria(cfg, out: Path) -> int:
    eqs = find_equilibria(params_of(cfg))
    equilibria_to_json(eqs, out / "equilibria.json", config=cfg)
    for e in eqs:
        print(f"({e.point[0]:.6f}, {e.point[1]:.6f})  {e.kind.value}  {e.etype.value}")
    return 0


def cmd_cycles(cfg, out: Path) -> int:
    p, st = params_of(cfg), settings_of(cfg)
    cycles = find_cycles(p, st, n=cfg["scan_points"])
    cycles_to_json(cycles, out / "cycles.json", config=cfg)
    for c in cycles:
        print(f"{c.phase_class.value}  T={c.period:.6f}  multiplier={c.floquet:.6f}")
    return 0


def cmd_portrait(cfg, out: Path) -> int:
    p, st = params_of(cfg), settings_of(cfg)
    eqs = find_equilibria(p)
    cycles = find_cycles(p, st, eqs, n=cfg["scan_points"]) if p.gamma + p.d >= 1.0 else []
    seps = []
    for e in eqs:
        if e.kind is Kind.SADDLE:
            seps.extend(trace_separatrices(e, p, st, eqs, cycles))
    export_portrait(seps, out, config=cfg)
    for s in seps:
        print(f"({s.origin.point[0]:.4f}, {s.origin.point[1]:.4f}) {s.branch.value} -> {s.terminus_id}")
    return 0


def cmd_sweep(cfg, out: Path, jobs: int) -> int:
    p = params_of(cfg)
    st = sweep_settings(p) if cfg["fast"] else settings_of(cfg)
    grid = sweep_plane(p, (cfg["n_alpha"], cfg["n_delta"]), (cfg["alpha_min"], cfg["alpha_max"]),
                       (cfg["delta_min"], cfg["delta_max"]), ic_grid=cfg["ic_grid"], settings=st,
                       jobs=jobs, seed=cfg["seed"], scan_points=cfg["scan_points"])
    grid.to_csv(out / "sweep.csv")
    doc = json.loads((out / "sweep.json").read_text(encoding="utf-8"))
    doc["config"] = cfg
    _dump(out / "sweep.json", doc)
    labels, counts = np.unique(grid.labels, return_counts=True)
    print(", ".join(f"{a}: {c}" for a, c in zip(labels, counts)))
    undecided = float(np.mean(grid.labels == Label.UNDECIDED.value))
    if undecided > cfg["undecided_max"]:
        print(f"undecided fraction {undecided:.3f} exceeds {cfg['undecided_max']}", file=sys.stderr)
        return EXIT_UNDECIDED
    return 0


def cmd_locate(cfg, out: Path) -> int:
    if cfg["bracket"] is None:
        raise ConfigError("bracket: required for locate")
    if cfg["target"] not in ("regime", "connection"):
        raise ConfigError("target: expected 'regime' or 'connection'")
    p = params_of(cfg)
    try:
        if cfg["target"] == "connection":
            value = locate_connection(cfg["axis"], cfg["bracket"], p, None)
            doc = {"value": value}
        else:
            st = sweep_settings(p) if cfg["fast"] else settings_of(cfg)
            value, pair = locate_boundary(cfg["axis"], cfg["bracket"], p, cfg["ic_grid"], st,
                                          detail=True)
            doc = {"value": value, "labels": list(pair)}
    except (BracketInvalid, ValueError) as exc:
        raise ConfigError(f"bracket: {exc}") from exc
    doc["config"] = cfg
    _dump(out / "locate.json", doc)
    print(f"{value:.6f}")
    return 0


def cmd_check(cfg, out: Path) -> int:
    st = settings_of(cfg)
    rng = np.random.default_rng(cfg["seed"])
    sets = [params_of(cfg)] + [random_params(rng) for _ in range(cfg["n_random"])]
    report, failed = [], 0
    for p in sets:
        results = run_suite(p, rng, st)
        bad = [r for r in results if not r.passed]
        failed += len(bad)
        report.append({"params": p.to_dict(),
                       "results": [{"name": r.name, "passed": r.passed, "detail": r.detail}
                                   for r in results]})
        for r in bad:
            print(f"FAIL {r.name} at {p.to_dict()}: {r.detail}")
    _dump(out / "check.json", {"config": cfg, "sets": report, "failures": failed})
    print(f"{len(sets)} parameter sets, {failed} violation(s)")
    return EXIT_PROPERTY if failed else 0


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "cycles": cmd_cycles,
    "portrait": cmd_portrait,
    "sweep": cmd_sweep,
    "locate": cmd_locate,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hco", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat JSON config file")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.add_argument("--seed", default=None)
        for key in PARAM_KEYS + SETTINGS_KEYS:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
        if name == "simulate":
            for key in ("phi1", "phi2", "t_end"):
                sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
        if name in ("cycles", "portrait", "sweep"):
            sp.add_argument("--scan-points", dest="scan_points", default=None)
        if name in ("sweep", "locate"):
            sp.add_argument("--ic-grid", dest="ic_grid", default=None)
            sp.add_argument("--fast", dest="fast", default=None,
                            help="use sweep tolerances (true/false)")
        if name == "sweep":
            for key in ("n_alpha", "n_delta", "alpha_min", "alpha_max", "delta_min",
                        "delta_max", "undecided_max"):
                sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
        if name == "locate":
            sp.add_argument("--axis", default=None)
            sp.add_argument("--bracket", default=None, help="lo,hi")
            sp.add_argument("--target", default=None, help="regime or connection")
        if name == "check":
            sp.add_argument("--n-random", dest="n_random", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items()
                 if k in DEFAULTS and v is not None}
    try:
        cfg = load_config(args.config, overrides)
        params_of(cfg)
        settings_of(cfg)
        if args.jobs < 1:
            raise ConfigError("jobs: must be at least 1")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump(out / "config.json", cfg)
        fn = COMMANDS[args.command]
        return fn(cfg, out, args.jobs) if args.command == "sweep" else fn(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepSizeUnderflow, SeedGridTooCoarse, Undecided) as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
