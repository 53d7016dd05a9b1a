"""Command-line front end.

    sepm-qkd keyrate [--gamma G ...] [--x-min A --x-max B --step S] [--out FILE]
    sepm-qkd montecarlo --n N --seed S (--eta E | --x KM) [--workers W]
    sepm-qkd attack collective --qber E
    sepm-qkd attack bs --eta E --gamma G
    sepm-qkd bounds [--x-min A --x-max B --step S]
    sepm-qkd figures --out DIR

A JSON config (``--config`` or the ``SEPM_QKD_CONFIG`` environment variable)
supplies defaults; explicit flags win. Exit status is 0 on success,
2 for usage errors and 1 for runtime failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import attacks, keyrate
from .errors import ParameterError, SepmError
from .montecarlo import McConfig, run_session, summarize
from .params import DARK_MODES, ProtocolParams

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
CONFIG_ENV = "SEPM_QKD_CONFIG"
FIGURE_GAMMAS = (0.01, 0.005, 0.002, 0.001)

_PARAM_KEYS = {  # config key -> ProtocolParams field
    "gamma": "gamma", "eta_d": "eta_d", "p_dark": "p_dark", "e_d": "e_d", "f": "f",
    "beta_db_per_km": "beta_l", "dark_mode": "dark_mode", "include_bs_attack": "include_bs_attack",
}
_TOP_KEYS = set(_PARAM_KEYS) | {"seed", "sweep", "output", "format"}


class UsageError(ParameterError):
    pass


@dataclass
class RunConfig:
    params: ProtocolParams = field(default_factory=ProtocolParams)
    x_min: float = 0.0
    x_max: float = 400.0
    step: float = 1.0
    seed: int = 0
    output: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.x_min > self.x_max:
            raise UsageError("sweep: x_min must not exceed x_max")
        if self.step <= 0:
            raise UsageError("sweep: step must be positive")
        if self.fmt not in ("csv", "json"):
            raise UsageError(f"format: expected 'csv' or 'json', got {self.fmt!r}")


def _number(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"config key '{key}': expected a number, got {value!r}")
    return float(value)


def _parse_config(data: dict) -> dict:
    """Validate a config mapping and flatten it into RunConfig/ProtocolParams keywords."""
    if not isinstance(data, dict):
        raise UsageError("config: top level must be a JSON object")
    out = {}
    for key, value in data.items():
        if key not in _TOP_KEYS:
            raise UsageError(f"config key '{key}': unknown key")
        if key == "dark_mode":
            if value not in DARK_MODES:
                raise UsageError(f"config key 'dark_mode': expected one of {DARK_MODES}, got {value!r}")
            out["dark_mode"] = value
        elif key == "include_bs_attack":
            if not isinstance(value, bool):
                raise UsageError(f"config key 'include_bs_attack': expected true/false, got {value!r}")
            out[key] = value
        elif key == "seed":
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise UsageError(f"config key 'seed': expected a non-negative integer, got {value!r}")
            out["seed"] = value
        elif key == "sweep":
            if not isinstance(value, dict):
                raise UsageError("config key 'sweep': expected an object")
            for sub, v in value.items():
                if sub not in ("x_min", "x_max", "step"):
                    raise UsageError(f"config key 'sweep.{sub}': unknown key")
                out[sub] = _number(f"sweep.{sub}", v)
        elif key == "output":
            if not isinstance(value, str):
                raise UsageError("config key 'output': expected a path string")
            out["output"] = value
        elif key == "format":
            out["fmt"] = value
        else:
            out[_PARAM_KEYS[key]] = _number(key, value)
    return out


def _build(values: dict) -> RunConfig:
    param_fields = set(_PARAM_KEYS.values())
    p = {k: v for k, v in values.items() if k in param_fields}
    rest = {k: v for k, v in values.items() if k not in param_fields}
    try:
        params = ProtocolParams(**p)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    return RunConfig(params=params, **rest)


def load_config(path: str | os.PathLike | None, overrides: dict | None = None) -> RunConfig:
    """Read a JSON config, apply ``overrides`` (already-parsed flag values) and validate."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
        try:
            data = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path}: invalid JSON ({exc.msg})") from exc
        values = _parse_config(data)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return _build(values)


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    p.add_argument("--gamma", type=float)
    p.add_argument("--eta-d", dest="eta_d", type=float)
    p.add_argument("--p-dark", dest="p_dark", type=float)
    p.add_argument("--e-d", dest="e_d", type=float)
    p.add_argument("--f", type=float)
    p.add_argument("--beta", dest="beta_l", type=float, help="fiber loss in dB/km")
    p.add_argument("--dark-mode", dest="dark_mode", choices=DARK_MODES)
    p.add_argument("--bs-attack", dest="include_bs_attack", action="store_true", default=None)
    p.add_argument("--no-bs-attack", dest="include_bs_attack", action="store_false")
    p.add_argument("--x-min", dest="x_min", type=float)
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepm-qkd", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keyrate", help="key-rate sweep as CSV")
    _add_param_flags(p)
    p.add_argument("--format", dest="fmt", choices=("csv", "json"))

    p = sub.add_parser("montecarlo", help="sampled session report as JSON")
    _add_param_flags(p)
    p.add_argument("--n", type=int, default=100_000, help="number of coincidences")
    where = p.add_mutually_exclusive_group()
    where.add_argument("--eta", type=float, help="per-arm transmittance")
    where.add_argument("--x", type=float, help="per-arm distance in km")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--rounds-csv", help="also write per-round records here")

    p = sub.add_parser("attack", help="attack model reports as JSON")
    kinds = p.add_subparsers(dest="kind", required=True)
    c = kinds.add_parser("collective")
    c.add_argument("--qber", type=float, required=True)
    b = kinds.add_parser("bs")
    b.add_argument("--eta", type=float, required=True)
    b.add_argument("--gamma", type=float, default=0.001)

    p = sub.add_parser("bounds", help="PLOB and single-repeater bounds as CSV")
    _add_param_flags(p)

    p = sub.add_parser("figures", help="write the rate-curve family and bounds to a directory")
    _add_param_flags(p)
    return parser


def _run_config(args) -> RunConfig:
    path = args.config or os.environ.get(CONFIG_ENV)
    keys = ("gamma", "eta_d", "p_dark", "e_d", "f", "beta_l", "dark_mode", "include_bs_attack",
            "x_min", "x_max", "step", "seed", "output", "fmt")
    return load_config(path, {k: getattr(args, k, None) for k in keys})


def _emit(text: str, output: str | None, stdout) -> None:
    if output:
        Path(output).write_text(text)
    else:
        stdout.write(text)


def _points_json(points) -> str:
    # infinite bounds at zero distance become null to keep the JSON strict
    rows = [{k: (v if math.isfinite(v) else None) for k, v in zip(keyrate.CSV_COLUMNS, p.csv_row())}
            for p in points]
    return json.dumps(rows, allow_nan=False) + "\n"


def _bounds_csv(xs, params: ProtocolParams) -> str:
    lines = ["x_km,total_km,eta_total,plob,srb"]
    for x in xs:
        eta_total = keyrate.transmittance(float(x), params.beta_l) ** 2
        vals = (x, 2 * x, eta_total, keyrate.plob_bound(eta_total),
                keyrate.single_repeater_bound(eta_total))
        lines.append(",".join(f"{v:.9e}" for v in vals))
    return "\n".join(lines) + "\n"


def _cmd_keyrate(args, stdout) -> None:
    cfg = _run_config(args)
    points = keyrate.sweep(cfg.params, keyrate.distance_grid(cfg.x_min, cfg.x_max, cfg.step))
    text = keyrate.to_csv(points) if cfg.fmt == "csv" else _points_json(points)
    _emit(text, cfg.output, stdout)


def _cmd_montecarlo(args, stdout) -> None:
    cfg = _run_config(args)
    if args.eta is not None:
        eta = args.eta
    else:
        eta = keyrate.transmittance(args.x if args.x is not None else 0.0, cfg.params.beta_l)
    try:
        mc = McConfig(seed=cfg.seed, n_coincidences=args.n, eta=eta, params=cfg.params,
                      workers=args.workers)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    records = run_session(mc)
    report = summarize(records, cfg.params, eta)
    if args.rounds_csv:
        with open(args.rounds_csv, "w", newline="") as fh:
            records.write_csv(fh)
    _emit(report.to_json() + "\n", cfg.output, stdout)


def _cmd_attack(args, stdout) -> None:
    try:
        if args.kind == "collective":
            report = attacks.collective_report(args.qber)
        else:
            report = attacks.bs_report(args.eta, args.gamma)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    stdout.write(json.dumps(report, sort_keys=True) + "\n")


def _cmd_bounds(args, stdout) -> None:
    cfg = _run_config(args)
    _emit(_bounds_csv(keyrate.distance_grid(cfg.x_min, cfg.x_max, cfg.step), cfg.params),
          cfg.output, stdout)


def _cmd_figures(args, stdout) -> None:
    cfg = _run_config(args)
    out = Path(cfg.output or "figures")
    out.mkdir(parents=True, exist_ok=True)
    xs = keyrate.distance_grid(cfg.x_min, cfg.x_max, cfg.step)
    for gamma in FIGURE_GAMMAS:
        for bs in (True, False):
            params = cfg.params.replace(gamma=gamma, include_bs_attack=bs)
            name = f"keyrate_gamma{gamma:g}_{'bs' if bs else 'nobs'}.csv"
            (out / name).write_text(keyrate.to_csv(keyrate.sweep(params, xs)))
    (out / "bounds.csv").write_text(_bounds_csv(xs, cfg.params))
    summary = {f"{g:g}": keyrate.cutoff_distance(cfg.params.replace(gamma=g)) for g in FIGURE_GAMMAS}
    stdout.write(json.dumps({"directory": str(out), "cutoff_km_per_arm": summary}, sort_keys=True) + "\n")


_COMMANDS = {"keyrate": _cmd_keyrate, "montecarlo": _cmd_montecarlo, "attack": _cmd_attack,
             "bounds": _cmd_bounds, "figures": _cmd_figures}


def dispatch(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage problems this way
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        _COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        stderr.write(f"sepm-qkd: usage error: {exc}\n")
        return EXIT_USAGE
    except (SepmError, OSError) as exc:
        stderr.write(f"sepm-qkd: error: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())
