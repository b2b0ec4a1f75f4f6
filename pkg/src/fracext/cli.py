"""Batch command-line front end.

Every invocation runs one operation (or a parameter sweep), writes a JSON
result record with the inputs echoed, and emits CSV tables for
sequence-valued outputs.  Exit codes: 0 success, 2 invalid configuration,
3 a computation failed (the error category is in the record).

    fracext deriv --fn sine --s 0.3 --t 0 --side left --normalized
    fracext kernel-check --s 0.5 --x 1
    fracext sweep --config sweep.json
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .errors import ComputationFailed, ConfigInvalid, FracExtError
from .quadrature import (
    DEFAULT_SPEC,
    GeneralOrder,
    Order,
    QuadratureSpec,
    Side,
    limit_small_s,
    marchaud,
    marchaud_general,
)
from . import functions
from .extension import (
    ExtensionQuery,
    LimitSchedule,
    backward_extend,
    compose_check,
    extend,
    flux_limit,
    trace_limit,
)
from .harnack import gamma_estimate, solve_stationary
from .pde import (
    a2_constant,
    make_grid,
    reflect,
    solve_degenerate_heat,
    space_time_bump,
    time_bump,
    weak_flux_limit,
    weak_residual,
)
from .special import bessel_k, kernel_mass, laplace_psi_closed, laplace_psi_numeric

COMMANDS = (
    "deriv",
    "kernel-check",
    "bessel",
    "extend",
    "trace",
    "flux",
    "compose",
    "pde-solve",
    "weak-check",
    "a2",
    "stationary",
    "harnack",
    "limits",
    "sweep",
)


@dataclass(frozen=True)
class RunConfig:
    """One validated batch invocation."""

    command: str
    params: dict
    output_path: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigInvalid(f"unknown command {self.command!r}")


@dataclass
class RunOutput:
    result: Any
    error_bound: float | None = None
    warnings: list[str] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list[tuple]]] = field(default_factory=dict)
    flat: dict[str, float] = field(default_factory=dict)


def _need(params: dict, key: str, cast=float):
    if key not in params:
        raise ConfigInvalid(f"missing required parameter {key!r}")
    try:
        return cast(params[key])
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"parameter {key!r}: {exc}") from None


def _opt(params: dict, key: str, default, cast=float):
    if key not in params or params[key] is None:
        return default
    try:
        return cast(params[key])
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"parameter {key!r}: {exc}") from None


def _function(params: dict, key_fn: str = "fn", key_params: str = "fn_params"):
    name = params.get(key_fn)
    if not name:
        raise ConfigInvalid(f"missing required parameter {key_fn!r}")
    return functions.resolve(str(name), params.get(key_params) or {})


def _spec(params: dict) -> QuadratureSpec:
    try:
        return QuadratureSpec(
            split_delta=_opt(params, "split_delta", DEFAULT_SPEC.split_delta),
            tail_cutoff=_opt(params, "tail_cutoff", DEFAULT_SPEC.tail_cutoff),
            abs_tol=_opt(params, "abs_tol", DEFAULT_SPEC.abs_tol),
            rel_tol=_opt(params, "rel_tol", DEFAULT_SPEC.rel_tol),
            max_subdivisions=_opt(params, "max_subdivisions", DEFAULT_SPEC.max_subdivisions, int),
        )
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None


def _order(params: dict, key: str = "s") -> Order:
    s = _need(params, key)
    try:
        return Order(s)
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None


def _side(params: dict) -> Side:
    raw = str(params.get("side", "left")).lower()
    if raw not in ("left", "right"):
        raise ConfigInvalid("side must be 'left' or 'right'")
    return Side.LEFT if raw == "left" else Side.RIGHT


def _schedule(params: dict) -> LimitSchedule:
    try:
        return LimitSchedule.geometric(
            start=_opt(params, "x_start", 0.5),
            ratio=_opt(params, "x_ratio", 0.5),
            count=_opt(params, "x_count", 8, int),
            extrapolation=str(params.get("extrapolation", "richardson")),
        )
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None


def _run_deriv(params: dict) -> RunOutput:
    f = _function(params)
    t = _need(params, "t")
    s = _need(params, "s")
    side = _side(params)
    spec = _spec(params)
    if s >= 1.0:
        try:
            order = GeneralOrder(s)
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from None
        res = marchaud_general(f, t, order, side=side, spec=spec)
    else:
        normalized = bool(params.get("normalized", False))
        res = marchaud(f, t, Order(s), side=side, normalized=normalized, spec=spec)
    return RunOutput(
        result={"value": res.value, "tail_bound": res.tail_bound},
        error_bound=res.error_bound,
        warnings=list(res.warnings),
        flat={"value": res.value, "error_bound": res.error_bound},
    )


def _run_kernel_check(params: dict) -> RunOutput:
    s = _order(params)
    x = _need(params, "x")
    mass = kernel_mass(x, s, _spec(params))
    return RunOutput(
        result={"mass": mass, "deviation": abs(mass - 1.0)},
        error_bound=abs(mass - 1.0),
        flat={"mass": mass, "deviation": abs(mass - 1.0)},
    )


def _run_bessel(params: dict) -> RunOutput:
    nu = _need(params, "nu")
    z = _need(params, "z")
    val = bessel_k(nu, z, _spec(params))
    want_laplace = params.get("laplace_s")
    out = {"k": val}
    if want_laplace is not None:
        s = Order(float(want_laplace))
        out["laplace_numeric"] = laplace_psi_numeric(s, z, _spec(params))
        out["laplace_closed"] = laplace_psi_closed(s, z, _spec(params))
    return RunOutput(result=out, flat={k: float(v) for k, v in out.items()})


def _run_extend(params: dict) -> RunOutput:
    f = _function(params)
    s = _order(params)
    x = _need(params, "x")
    t = _need(params, "t")
    spec = _spec(params)
    if bool(params.get("backward", False)):
        val = backward_extend(f, x, t, s, spec)
    else:
        val = extend(ExtensionQuery(x, t, s, f, spec))
    return RunOutput(result={"value": val}, flat={"value": val})


def _run_trace(params: dict) -> RunOutput:
    f = _function(params)
    s = _order(params)
    t = _need(params, "t")
    res = trace_limit(f, t, s, _schedule(params), _spec(params), side=_side(params))
    rows = [(x, v) for x, v in res.table]
    return RunOutput(
        result={"value": res.value, "observed_order": res.observed_order},
        warnings=list(res.warnings),
        tables={"trace": (["x", "trace"], rows)},
        flat={"value": res.value},
    )


def _run_flux(params: dict) -> RunOutput:
    f = _function(params)
    s = _order(params)
    t = _need(params, "t")
    res = flux_limit(f, t, s, _schedule(params), _spec(params), side=_side(params))
    rows = [(x, v) for x, v in res.table]
    return RunOutput(
        result={"raw": res.raw, "corrected": res.corrected,
                "observed_order": res.observed_order},
        tables={"flux": (["x", "flux"], rows)},
        flat={"raw": res.raw, "corrected": res.corrected},
    )


def _run_compose(params: dict) -> RunOutput:
    f = _function(params)
    s = _order(params)
    t = _need(params, "t")
    res = compose_check(
        f, t, s, _spec(params),
        grid_radius=_opt(params, "grid_radius", 400.0),
        grid_step=_opt(params, "grid_step", 0.1),
    )
    return RunOutput(
        result={"value": res.value, "outer_tail_bound": res.outer_tail_bound},
        warnings=list(res.warnings),
        flat={"value": res.value},
    )


def _grid(params: dict, s: Order):
    try:
        return make_grid(
            s,
            x_max=_opt(params, "x_max", 35.0),
            n_x=_opt(params, "n_x", 200, int),
            t0=_opt(params, "t0", 0.0),
            t1=_opt(params, "t1", 1.0),
            n_t=_opt(params, "n_t", 200, int),
            grading=_opt(params, "grading", 2.0),
        )
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None


def _run_pde_solve(params: dict) -> RunOutput:
    f = _function(params)
    s = _order(params)
    grid = _grid(params, s)
    field_ = solve_degenerate_heat(f, grid, _spec(params),
                                   theta=_opt(params, "theta", 0.5))
    rows = []
    w = field_.weight
    for i, xv in enumerate(field_.x):
        wv = float(w(np.array([xv]))[0]) if xv != 0.0 else math.inf
        for j, tv in enumerate(field_.t):
            rows.append((xv, tv, field_.values[i, j], wv))
    return RunOutput(
        result={"min": float(field_.values.min()), "max": float(field_.values.max()),
                "shape": list(field_.values.shape)},
        tables={"field": (["x", "t", "U", "w"], rows)},
        flat={"min": float(field_.values.min()), "max": float(field_.values.max())},
    )


def _run_weak_check(params: dict) -> RunOutput:
    f = _function(params)
    s = _order(params)
    grid = _grid(params, s)
    spec = _spec(params)
    field_ = solve_degenerate_heat(f, grid, spec,
                                   boundary_scale=_opt(params, "boundary_scale", None,
                                                       lambda v: None if v is None else float(v)))
    t0, t1 = grid.t_nodes[0], grid.t_nodes[-1]
    pad = 0.1 * (t1 - t0)
    eta = space_time_bump(_opt(params, "eta_x_half", 0.2 * _opt(params, "x_max", 35.0)),
                          t0 + pad, t1 - pad)
    resid = weak_residual(reflect(field_), eta)
    xs = [float(v) for v in params.get("flux_x", [0.2, 0.1, 0.05, 0.025, 0.0125])]
    flux_seq = weak_flux_limit(field_, time_bump(t0 + pad, t1 - pad), xs)
    return RunOutput(
        result={"weak_residual": resid, "flux_sequence": flux_seq},
        tables={"weak-flux": (["x", "weak_flux"], list(zip(xs, flux_seq)))},
        flat={"weak_residual": resid},
    )


def _run_a2(params: dict) -> RunOutput:
    s = _order(params)
    val = a2_constant(
        s,
        R=_opt(params, "r", 1.0),
        n_intervals=_opt(params, "n", 400, int),
        family=str(params.get("family", "all")),
    )
    return RunOutput(result={"c0": val}, flat={"c0": val})


def _run_stationary(params: dict) -> RunOutput:
    exterior = _function(params, "exterior", "exterior_params")
    s = _order(params)
    j = (_need(params, "j_lo"), _need(params, "j_hi"))
    phi = solve_stationary(
        j, exterior, s,
        n=_opt(params, "n", 2000, int),
        history_factor=_opt(params, "history_factor", 40.0),
        residual_threshold=_opt(params, "residual_threshold", 1e-3),
        spec=_spec(params),
    )
    rows = list(zip(phi.grid_t.tolist(), phi.grid_values.tolist()))
    return RunOutput(
        result={"residual": phi.residual,
                "min": float(phi.grid_values.min()), "max": float(phi.grid_values.max())},
        tables={"stationary": (["t", "phi"], rows)},
        flat={"residual": phi.residual},
    )


def _run_harnack(params: dict) -> RunOutput:
    exterior = _function(params, "exterior", "exterior_params")
    s = _order(params)
    j = (_need(params, "j_lo"), _need(params, "j_hi"))
    phi = solve_stationary(
        j, exterior, s,
        n=_opt(params, "n", 2000, int),
        residual_threshold=_opt(params, "residual_threshold", 1e-3),
        spec=_spec(params),
    )
    length = j[1] - j[0]
    n_grid = _opt(params, "window_grid", 5, int)
    t0s = np.linspace(j[0] + 0.35 * length, j[1] - 0.35 * length, n_grid)
    deltas = np.linspace(0.05 * length, 0.3 * length, n_grid)
    est = gamma_estimate(phi, t0s, deltas, n_samples=_opt(params, "n_samples", 64, int))
    return RunOutput(
        result={"gamma_hat": est.gamma, "residual": phi.residual},
        tables={"harnack": (["t0", "delta", "sup", "inf", "ratio"], list(est.rows))},
        flat={"gamma_hat": est.gamma},
    )


def _run_limits(params: dict) -> RunOutput:
    f = _function(params)
    t = _need(params, "t")
    branch = str(params.get("branch", "small"))
    if "s_values" in params:
        seq = [float(v) for v in params["s_values"]]
    elif branch == "small":
        seq = [0.2, 0.1, 0.05, 0.02]
    elif branch == "large":
        seq = [0.8, 0.9, 0.95, 0.98]
    else:
        raise ConfigInvalid("branch must be 'small' or 'large' (or pass s_values)")
    vals = limit_small_s(f, t, seq, spec=_spec(params))
    target = f.value_at(t) if branch == "small" else (
        f.exact_derivative.value_at(t) if f.exact_derivative is not None else math.nan
    )
    rows = [(s, v, abs(v - target)) for s, v in zip(seq, vals)]
    return RunOutput(
        result={"values": vals, "target": target},
        tables={"limits": (["s", "value", "gap"], rows)},
        flat={"last_gap": rows[-1][2]},
    )


_RUNNERS = {
    "deriv": _run_deriv,
    "kernel-check": _run_kernel_check,
    "bessel": _run_bessel,
    "extend": _run_extend,
    "trace": _run_trace,
    "flux": _run_flux,
    "compose": _run_compose,
    "pde-solve": _run_pde_solve,
    "weak-check": _run_weak_check,
    "a2": _run_a2,
    "stationary": _run_stationary,
    "harnack": _run_harnack,
    "limits": _run_limits,
}


def _run_sweep(params: dict) -> RunOutput:
    inner_command = params.get("run")
    if inner_command not in _RUNNERS:
        raise ConfigInvalid("sweep needs an inner command under the 'run' key")
    sweep = params.get("sweep")
    if not isinstance(sweep, dict) or not sweep:
        raise ConfigInvalid("sweep needs a non-empty 'sweep' mapping of parameter ranges")
    keys = sorted(sweep)
    ranges = []
    for k in keys:
        vals = list(sweep[k])
        if not vals:
            raise ConfigInvalid(f"sweep range for {k!r} is empty")
        ranges.append(sorted(vals))
    base = dict(params.get("params") or {})
    combos = list(itertools.product(*ranges))
    max_workers = int(params.get("parallelism", 0)) or (os.cpu_count() or 1)

    def one(combo):
        p = dict(base)
        p.update(dict(zip(keys, combo)))
        try:
            out = _RUNNERS[inner_command](p)
            return ("ok", out.flat)
        except (FracExtError, ValueError) as exc:
            return (f"error:{type(exc).__name__}", {})

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(one, combos))

    value_cols = sorted({k for _, flat in results for k in flat})
    header = keys + ["status"] + value_cols
    rows = []
    n_failed = 0
    for combo, (status, flat) in zip(combos, results):
        if status != "ok":
            n_failed += 1
        rows.append(tuple(combo) + (status,) + tuple(flat.get(c, math.nan) for c in value_cols))
    return RunOutput(
        result={"rows": len(rows), "failed": n_failed, "command": inner_command},
        tables={"sweep": (header, rows)},
        flat={"rows": float(len(rows)), "failed": float(n_failed)},
    )


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_tables(tables, output_path: str | None, command: str) -> list[str]:
    written = []
    for name, (header, rows) in tables.items():
        if output_path and output_path != "-":
            stem, _ = os.path.splitext(output_path)
            path = f"{stem}.{name}.csv"
        else:
            path = f"fracext-{command}-{name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt_cell(v) for v in row])
        written.append(path)
    return written


def run(config: RunConfig) -> tuple[dict, list[str]]:
    """Execute one config; returns the JSON record and written table paths."""
    runner = _RUNNERS.get(config.command) if config.command != "sweep" else _run_sweep
    if runner is None:
        raise ConfigInvalid(f"unknown command {config.command!r}")
    start = time.perf_counter()
    try:
        out = runner(config.params)
    except ConfigInvalid:
        raise
    except ValueError as exc:
        # inline input validation in the numeric modules
        raise ConfigInvalid(str(exc)) from exc
    except FracExtError as exc:
        raise ComputationFailed(str(exc), category=type(exc).__name__) from exc
    wall_ms = 1000.0 * (time.perf_counter() - start)
    record = {
        "command": config.command,
        "params": config.params,
        "seed": config.seed,
        "result": out.result,
        "error_bound": out.error_bound,
        "warnings": out.warnings,
        "version": __version__,
        "wall_time_ms": wall_ms,
    }
    tables = _write_tables(out.tables, config.output_path, config.command)
    return record, tables


_FLAG_TYPES = {
    "s": float, "t": float, "x": float, "nu": float, "z": float,
    "normalized": None, "backward": None, "side": str, "fn": str,
    "exterior": str, "j_lo": float, "j_hi": float, "n": int,
    "x_start": float, "x_ratio": float, "x_count": int, "extrapolation": str,
    "grid_radius": float, "grid_step": float, "x_max": float, "n_x": int,
    "t0": float, "t1": float, "n_t": int, "grading": float, "theta": float,
    "r": float, "family": str, "branch": str, "history_factor": float,
    "residual_threshold": float, "window_grid": int, "n_samples": int,
    "split_delta": float, "tail_cutoff": float, "abs_tol": float,
    "rel_tol": float, "max_subdivisions": int, "laplace_s": float,
    "parallelism": int, "eta_x_half": float, "boundary_scale": float,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracext",
        description="Fractional derivatives, their parabolic extension, and Harnack experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="JSON file with parameters (flags override)")
        p.add_argument("--output", help="path of the JSON result record ('-' = stdout)")
        p.add_argument("--seed", type=int, default=0)
        for flag, typ in _FLAG_TYPES.items():
            name = "--" + flag.replace("_", "-")
            if typ is None:
                p.add_argument(name, action="store_true", default=None, dest=flag)
            else:
                p.add_argument(name, type=typ, default=None, dest=flag)
        p.add_argument("--fn-params", dest="fn_params", help="JSON object of function parameters")
        p.add_argument("--exterior-params", dest="exterior_params",
                       help="JSON object of exterior-function parameters")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    params: dict = {}
    output_path = None
    seed = 0
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigInvalid("config file must hold a JSON object")
        file_cmd = raw.pop("command", None)
        if file_cmd is not None and file_cmd != args.command:
            raise ConfigInvalid(
                f"config file is for command {file_cmd!r}, invoked as {args.command!r}"
            )
        output_path = raw.pop("output_path", None)
        seed = int(raw.pop("seed", 0))
        params.update(raw)
    for flag in list(_FLAG_TYPES) + ["fn_params", "exterior_params"]:
        val = getattr(args, flag, None)
        if val is not None:
            if flag in ("fn_params", "exterior_params") and isinstance(val, str):
                try:
                    val = json.loads(val)
                except json.JSONDecodeError as exc:
                    raise ConfigInvalid(f"--{flag.replace('_', '-')}: {exc}") from None
            params[flag] = val
    if args.output is not None:
        output_path = args.output
    if args.seed:
        seed = args.seed
    return RunConfig(command=args.command, params=params, output_path=output_path, seed=seed)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        record, tables = run(config)
    except ConfigInvalid as exc:
        print(json.dumps({"error": "ConfigInvalid", "message": str(exc)}, sort_keys=True),
              file=sys.stderr)
        return 2
    except ComputationFailed as exc:
        print(json.dumps({"error": "ComputationFailed", "category": exc.category,
                          "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 3
    text = json.dumps(record, sort_keys=True, indent=2)
    if config.output_path and config.output_path != "-":
        with open(config.output_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    for path in tables:
        print(f"table written: {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
