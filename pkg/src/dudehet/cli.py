"""Command-line front end: ``dudehet {sweep,validate,search,presets}``.

Exit codes: 0 on success, 1 when ``validate`` finds a failing threshold,
2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager
from pathlib import Path

from .errors import ConfigError, DudehetError
from .experiments import (
    CSV_HEADER, ENGINES, METRICS, PARAMETERS, SEARCH_DEFAULT_RANGE, SEARCH_DEFAULT_STEP, SEARCH_VARIABLES,
    VALIDATION_HEADER, Objective, SweepSpec, format_number, grid_search, parse_grid, run_sweep, validate,
    write_rows,
)
from .model import parse_config_text
from .presets import PRESETS, get_preset
from .simulator.engine import DEFAULT_HALF_WIDTH

DEFAULT_DROPS = 100_000
DEFAULT_TOLERANCE = 0.05


class UsageError(Exception):
    pass


def _add_common(p, drops=True):
    p.add_argument("--config", metavar="PATH", help="scenario file (key = value lines)")
    p.add_argument("--preset", metavar="NAME", help="built-in scenario (see 'dudehet presets')")
    p.add_argument("--variant", metavar="NAME", help="named variant of the preset")
    p.add_argument("--seed", type=int, default=0, help="simulation seed (default 0)")
    if drops:
        p.add_argument("--drops", type=int, default=DEFAULT_DROPS, help=f"Monte Carlo drops (default {DEFAULT_DROPS})")
        p.add_argument("--window", type=float, default=DEFAULT_HALF_WIDTH,
                       help=f"simulation window half-width in km (default {DEFAULT_HALF_WIDTH:g})")
        p.add_argument("--workers", type=int, default=1, help="worker processes for the simulator")
    p.add_argument("--mode", default=None, help="interference integration-limit mode of the analytic engine")
    p.add_argument("--out", metavar="PATH", help="CSV output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dudehet", description="Decoupled-access HetNet coverage experiments.")
    sub = ap.add_subparsers(dest="verb", required=True)

    sw = sub.add_parser("sweep", help="evaluate a metric over a parameter grid")
    _add_common(sw)
    sw.add_argument("--param", choices=PARAMETERS, help="swept parameter")
    sw.add_argument("--grid", help="start:stop:step or a comma list")
    sw.add_argument("--metric", choices=METRICS)
    sw.add_argument("--thresholds", help="SIR thresholds in dB or rate thresholds in bit/s (comma list)")
    sw.add_argument("--engine", choices=ENGINES + ("both",), default="analytic")

    va = sub.add_parser("validate", help="compare analytic and simulated SIR coverage")
    _add_common(va)
    va.add_argument("--thresholds", help="SIR thresholds in dB (default: the preset grid or -10:20:5)")
    va.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    va.add_argument("--engine", choices=ENGINES, default="sim",
                    help="reference engine compared with the analysis (default sim)")

    se = sub.add_parser("search", help="grid search of the analytic objective")
    _add_common(se, drops=False)
    se.add_argument("--variable", choices=SEARCH_VARIABLES, default="bias_db")
    se.add_argument("--grid", help="start:stop:step or a comma list (default: 1 dB or 0.1 steps)")
    se.add_argument("--objective", help="sir_coverage@T (dB), rate_coverage@R (bit/s) or corollaryK@T")

    pr = sub.add_parser("presets", help="list built-in scenarios or print one")
    pr.add_argument("name", nargs="?")
    return ap


def _load(args):
    """Network config and preset (either may come from the other)."""
    preset = get_preset(args.preset) if args.preset else None
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
        try:
            cfg = parse_config_text(text)
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    elif preset is not None:
        overrides = {}
        if args.variant:
            if args.variant not in preset.variants:
                raise UsageError(f"preset {preset.name} has no variant {args.variant!r}")
            overrides = preset.variants[args.variant]
        cfg = preset.config(**overrides)
    else:
        raise UsageError("give --config PATH or --preset NAME")
    return cfg, preset


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _floats(text, what):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"cannot parse {what} {text!r}") from None


def cmd_sweep(args) -> int:
    cfg, preset = _load(args)
    param = args.param or (preset.parameter if preset else None)
    metric = args.metric or (preset.metric if preset and (args.param is None or args.param == preset.parameter)
                             else None)
    if param is None:
        raise UsageError("--param is required without a preset")
    if metric is None:
        metric = {"tau_db": "sir_coverage", "rho": "rate_coverage"}.get(param)
    if metric is None:
        raise UsageError("--metric is required")
    if args.grid is not None:
        grid = parse_grid(args.grid)
    elif preset is not None and param == preset.parameter:
        grid = preset.grid
    else:
        raise UsageError("--grid is required")
    if args.thresholds is not None:
        thresholds = _floats(args.thresholds, "thresholds")
    else:
        thresholds = preset.thresholds if preset else ()
    engines = ENGINES if args.engine == "both" else (args.engine,)
    spec = SweepSpec(param, grid, metric, engines, thresholds, args.out)

    def report(v, engine, exc):
        print(f"warning: {engine} failed at {param} = {format_number(v)}: {exc}", file=sys.stderr)

    rows = run_sweep(cfg, spec, args.drops, args.seed, args.mode, args.window, args.workers, on_error=report)
    with _output(args.out) as fh:
        write_rows(rows, fh)
    return 0


def cmd_validate(args) -> int:
    cfg, preset = _load(args)
    if args.thresholds is not None:
        th = _floats(args.thresholds, "thresholds")
    elif preset is not None and preset.parameter == "tau_db":
        th = preset.grid
    else:
        th = tuple(float(t) for t in range(-10, 21, 5))
    rep = validate(cfg, th, args.drops, args.tolerance, args.seed, args.mode, args.window, args.workers,
                   reference=args.engine)
    with _output(args.out) as fh:
        write_rows([p.cells() for p in rep.points], fh, VALIDATION_HEADER)
    verdict = "PASS" if rep.passed else "FAIL"
    print(f"{verdict}: max |gap| = {rep.max_gap:.6f}, tolerance {rep.tolerance:g} plus CI half-width",
          file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_search(args) -> int:
    cfg, preset = _load(args)
    if args.grid is not None:
        grid = parse_grid(args.grid)
    else:
        lo, hi = SEARCH_DEFAULT_RANGE[args.variable]
        grid = parse_grid(f"{lo}:{hi}:{SEARCH_DEFAULT_STEP[args.variable]}")
    if args.objective is not None:
        obj = Objective.parse(args.objective)
    elif preset is not None and preset.metric == "sir_coverage" and preset.thresholds:
        obj = Objective("sir_coverage", preset.thresholds[0])
    else:
        obj = Objective("sir_coverage", 0.0)
    res = grid_search(cfg, args.variable, grid, obj, args.mode)
    with _output(args.out) as fh:
        write_rows(res.rows(), fh)
    summary = f"best {res.variable} = {format_number(res.best)} ({obj.label} = {res.best_value:.6f})"
    print(summary, file=sys.stdout if args.out else sys.stderr)
    return 0


def cmd_presets(args) -> int:
    if args.name is None:
        width = max(len(n) for n in PRESETS)
        for name, p in PRESETS.items():
            print(f"{name:<{width}}  {p.description}")
        return 0
    p = get_preset(args.name)
    print(f"# {p.name}: {p.description}")
    print(f"# default sweep: {p.parameter} over {', '.join(format_number(g) for g in p.grid)} ({p.metric})")
    if p.thresholds:
        print(f"# thresholds: {', '.join(format_number(t) for t in p.thresholds)}")
    for a in p.assumed:
        print(f"# assumed: {a}")
    for name, ov in p.variants.items():
        print(f"# variant {name}: " + ", ".join(f"{k} = {v}" for k, v in ov.items()))
    sys.stdout.write(p.config_text())
    return 0


# Options whose values may start with '-' (negative dB grids and thresholds).
_VALUE_OPTIONS = ("--grid", "--thresholds", "--objective")


def _join_negative_values(argv):
    """Turn ``--grid -10:20:5`` into ``--grid=-10:20:5`` so argparse keeps the value."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2] not in ("-", ""):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


_COMMANDS = {"sweep": cmd_sweep, "validate": cmd_validate, "search": cmd_search, "presets": cmd_presets}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        return _COMMANDS[args.verb](args)
    except (UsageError, DudehetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


__all__ = ["main", "build_parser", "CSV_HEADER"]
