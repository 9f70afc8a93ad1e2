"""Command-line driver.

Every subcommand prints a JSON report on stdout. Failures print a JSON error
report (with the effective configuration, when there is one) on stderr and
exit with status 1; bad usage exits with status 2.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import diagnostics
from .config import RunConfig, default_config
from .evolution import RedistributionParams, redistribute_system
from .scenarios import SCENARIOS, ScenarioSpec
from .selfsim import RescaleMap, rescale_physical_to_selfsim
from .storage import read_metadata, read_series, read_snapshot, write_snapshot

log = logging.getLogger("alphapatch")


class CliError(Exception):
    def __init__(self, message: str, config: RunConfig | None = None):
        super().__init__(message)
        self.config = config


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _emit(obj, stream=None) -> None:
    stream = sys.stdout if stream is None else stream
    stream.write(json.dumps(obj, indent=2, default=_json_default, allow_nan=True) + "\n")


# --------------------------------------------------------------------------
# configuration from files and flags

def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--alpha", type=float)
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--nu", type=float, help="redistribution resolution")
    p.add_argument("--B", type=float, help="time-step factor")
    p.add_argument("--dt-max", type=float, help="cap on the time step")
    p.add_argument("--steps", type=int, help="maximum number of steps")
    p.add_argument("--t-end", type=float, help="end time (t or tau, by mode)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--resume", help="snapshot to continue from")
    p.add_argument("--workers", type=int, help="worker threads (speed only)")


def _config_from_args(args, mode: str) -> RunConfig:
    if args.config:
        cfg = RunConfig.load(args.config)
        if args.scenario and args.scenario != cfg.scenario.name:
            cfg = replace(cfg, scenario=ScenarioSpec(args.scenario))
    else:
        scenario = args.scenario or ("wedge_repelling" if mode == "selfsimilar" else "two_circles")
        cfg = default_config(scenario)
    if cfg.mode != mode:
        if cfg.scenario.name == "from_file":
            cfg = replace(cfg, mode=mode)
        else:
            raise CliError(f"scenario {cfg.scenario.name} runs in {cfg.mode} variables; "
                           f"use {'run-ss' if cfg.mode == 'selfsimilar' else 'run'}", cfg)
    changes = {}
    if args.alpha is not None:
        changes["alpha"] = args.alpha
    if args.nu is not None:
        changes["redistribution"] = replace(cfg.redistribution, nu=args.nu)
    if args.B is not None:
        changes["B"] = args.B
    if args.dt_max is not None:
        changes["dt_max"] = args.dt_max
    if args.steps is not None or args.t_end is not None:
        stop = cfg.stop
        if args.steps is not None:
            stop = replace(stop, max_steps=args.steps)
        if args.t_end is not None:
            stop = replace(stop, t_end=args.t_end)
        changes["stop"] = stop
    if args.out is not None:
        changes["out"] = args.out
    return replace(cfg, **changes) if changes else cfg


# --------------------------------------------------------------------------
# subcommands

def cmd_init(args) -> dict:
    cfg = default_config(args.scenario or "two_circles")
    if args.alpha is not None:
        cfg = replace(cfg, alpha=args.alpha)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    path = Path(args.config or "config.ini")
    if path.exists() and not args.force:
        raise CliError(f"{path} exists (use --force to overwrite)", cfg)
    cfg.save(path)
    return {"written": str(path), "config_hash": cfg.hash()}


def _run(args, mode: str) -> dict:
    from .runner import execute
    cfg = _config_from_args(args, mode)
    args._config = cfg
    summary = execute(cfg, resume=args.resume, workers=args.workers)
    return {"config_hash": cfg.hash(), **summary.as_dict()}


def cmd_run(args) -> dict:
    return _run(args, "physical")


def cmd_run_ss(args) -> dict:
    return _run(args, "selfsimilar")


def cmd_rescale(args) -> dict:
    system = read_snapshot(args.snapshot)
    if system.mode != "physical":
        raise CliError("rescale expects a physical-mode snapshot")
    rmap = RescaleMap(args.t_star, tuple(args.x_star), 1.0 / system.alpha)
    contours, tau = rescale_physical_to_selfsim(system.contours, system.time, rmap)
    out = replace(system, contours=tuple(contours), mode="selfsimilar", time=tau)
    if args.nu is not None:
        out = redistribute_system(out, RedistributionParams(nu=args.nu))
    meta = read_metadata(args.snapshot)
    path = write_snapshot(args.out, out, step=int(meta.get("step", 0)),
                          extra={"t_star": args.t_star, "x_star": list(args.x_star),
                                 "source": str(args.snapshot), "t_source": system.time})
    return {"written": str(path), "tau": tau, "scale": math.exp(tau / system.alpha)}


def _series_xy(series, model: str):
    ok = np.isfinite(series["min_distance"])
    if model == "collapse":
        return series["t"][ok], series["min_distance"][ok]
    return series["tau"][ok], series["min_distance"][ok]


def cmd_fit(args) -> dict:
    series = read_series(args.series)
    x, d = _series_xy(series, args.model)
    window = tuple(args.window) if args.window else None
    if args.model == "collapse":
        res = diagnostics.fit_collapse_time(x, d, args.alpha, window)
    else:
        if args.last is not None:
            x, d = x[-args.last:], d[-args.last:]
        res = diagnostics.fit_log_slope(x, d, window)
    return {"model": args.model, **asdict(res)}


def cmd_classify(args) -> dict:
    delta = 1.0 / args.alpha
    if args.slope is not None:
        m = args.slope
    else:
        if not args.series:
            raise CliError("classify needs --slope or --series")
        series = read_series(args.series)
        x, d = _series_xy(series, "slope")
        if args.last is not None:
            x, d = x[-args.last:], d[-args.last:]
        m = diagnostics.fit_log_slope(x, d, tuple(args.window) if args.window else None).estimate
    verdict = diagnostics.classify_collapse(m, delta, args.tolerance)
    return {"slope": m, "delta": delta, "classification": verdict.value}


def cmd_verify(args) -> dict:
    from .verify import PAPER_CIRCLE_VY, circle_check, cross_method_check, endpoint_check
    from .kernel import circle_velocity_exact
    checks = circle_check(args.nodes, args.alpha, reference=PAPER_CIRCLE_VY
                          if args.alpha == 0.7 else None)
    if not args.quick:
        checks += [cross_method_check(alpha=args.alpha), endpoint_check()]
    report = {
        "alpha": args.alpha,
        "nodes": args.nodes,
        "closed_form_vy": circle_velocity_exact(args.alpha),
        "checks": [c.as_dict() for c in checks],
        "passed": all(bool(c.passed) for c in checks),
    }
    if not report["passed"]:
        _emit(report)
        raise CliError("verification failed")
    return report


def cmd_backward(args) -> dict:
    from .selfsim import apex_deviation, backward_evolve
    if args.snapshot:
        system = read_snapshot(args.snapshot)
    else:
        from .scenarios import build_scenario
        params = {"gap": args.gap} if args.scenario == "wedge_repelling" else {}
        system = build_scenario(ScenarioSpec(args.scenario, params), args.alpha,
                                redistribution=RedistributionParams(nu=args.nu))
    if system.mode != "selfsimilar":
        raise CliError("backward evolution runs in self-similar variables")
    out = Path(args.out)
    redist = RedistributionParams(nu=args.nu)
    history = [{"step": 0, "tau": system.time, "apex_deviation": apex_deviation(system, args.radius)}]
    write_snapshot(out / "step_000000.csv", system, step=0)

    def on_step(k, s):
        history.append({"step": k, "tau": s.time, "apex_deviation": apex_deviation(s, args.radius),
                        "node_counts": list(s.node_counts)})
        write_snapshot(out / f"step_{k:06d}.csv", s, step=k)

    backward_evolve(system, args.steps, args.dt, redist, callback=on_step)
    return {"out": str(out), "history": history}


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alphapatch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="write a default configuration")
    p.add_argument("--config", help="path to write (default config.ini)")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", help="output directory recorded in the config")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("run", help="evolve in physical variables")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("run-ss", help="evolve in self-similar variables")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run_ss)

    p = sub.add_parser("rescale", help="map a physical snapshot to self-similar variables")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--t-star", type=float, required=True)
    p.add_argument("--x-star", type=float, nargs=2, default=(0.0, 0.0), metavar=("X", "Y"))
    p.add_argument("--nu", type=float, help="redistribute the rescaled contours at this resolution")
    p.add_argument("--out", required=True, help="output snapshot path")
    p.set_defaults(func=cmd_rescale)

    p = sub.add_parser("fit", help="fit a stored distance series")
    p.add_argument("--series", required=True)
    p.add_argument("--model", choices=("collapse", "slope"), default="collapse")
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--last", type=int, help="slope fit on the last N samples")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("classify", help="compare a log-distance slope with delta = 1/alpha")
    p.add_argument("--slope", type=float)
    p.add_argument("--series")
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--last", type=int)
    p.add_argument("--tolerance", type=float, default=0.02)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="circle velocity and kernel cross-checks")
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--nodes", type=int, default=200)
    p.add_argument("--quick", action="store_true", help="circle check only")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("backward", help="backward tau evolution of a self-similar state")
    p.add_argument("--snapshot")
    p.add_argument("--scenario", choices=("wedge", "wedge_repelling"), default="wedge_repelling")
    p.add_argument("--gap", type=float, default=0.05)
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--nu", type=float, default=0.05)
    p.add_argument("--steps", type=int, default=14)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--radius", type=float, default=1.0, help="apex region radius")
    p.add_argument("--out", default="backward")
    p.set_defaults(func=cmd_backward)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args._config = None
    try:
        _emit(args.func(args))
        return 0
    except Exception as exc:  # noqa: BLE001 - every failure becomes a report
        cfg = getattr(exc, "config", None) or args._config
        _emit({
            "error": type(exc).__name__,
            "message": str(exc),
            "command": args.command,
            "argv": list(sys.argv[1:] if argv is None else argv),
            "config": cfg.dumps() if cfg is not None else None,
        }, sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
