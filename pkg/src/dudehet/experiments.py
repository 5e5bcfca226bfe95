"""Sweeps, cross-engine validation and grid searches.

These are the operations behind the command-line front end.  They return
plain row objects; ``write_rows`` turns them into the CSV layout

    param_value,engine,metric,value,ci_halfwidth,seed

with probabilities printed to six decimals.  Rows always come out in grid
order, and a grid point whose evaluation fails is emitted with the value
``failed`` instead of stopping the run.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, replace

import numpy as np

from .analytic.association import case_probability, ul_assoc_probability
from .analytic.corollaries import corollary_coverage
from .analytic.coverage import network_sir_coverage
from .analytic.rate import SirCoverageTable, network_rate_coverage
from .errors import ConfigError, ContractError, DomainError, DudehetError
from .model import AssociationCase, NetworkConfig, Tier
from .simulator.engine import DEFAULT_HALF_WIDTH, estimate, wilson

PARAMETERS = ("lambda_ratio", "bias_db", "eta", "tau_db", "rho", "n_m")
METRICS = ("association", "sir_coverage", "rate_coverage")
ENGINES = ("analytic", "sim")
SEARCH_VARIABLES = ("bias_db", "eta")
SEARCH_DEFAULT_STEP = {"bias_db": 1.0, "eta": 0.1}
SEARCH_DEFAULT_RANGE = {"bias_db": (-5.0, 15.0), "eta": (0.0, 1.0)}
CSV_HEADER = ("param_value", "engine", "metric", "value", "ci_halfwidth", "seed")
FAILED = "failed"

# Values closer than this count as equal when picking a search optimum.
TIE_TOL = 1e-12
_CASE_METRICS = (("case1", AssociationCase.MACRO_BOTH), ("case2", AssociationCase.MACRO_DL_FEMTO_UL),
                 ("case3", AssociationCase.FEMTO_BOTH))


def format_number(v: float) -> str:
    """Shortest positional rendering of a grid value (no exponent)."""
    return np.format_float_positional(float(v), trim="-")


def parse_grid(text: str) -> tuple:
    """Parse ``start:stop:step`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if not text:
        raise ConfigError("empty grid")
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            n = int(math.floor((stop - start) / step + 1e-9))
            if n < 0:
                raise ValueError
            return tuple(float(np.round(start + k * step, 10)) for k in range(n + 1))
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r}; use start:stop:step or a comma list") from None


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and which engines to run.

    ``thresholds`` are the SIR thresholds (dB) or rate thresholds (bit/s)
    reported at each grid point when the swept parameter is not itself the
    threshold.
    """

    parameter: str
    grid: tuple
    metric: str
    engines: tuple = ("analytic",)
    thresholds: tuple = ()
    out: str = None

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {self.parameter!r}; use one of {', '.join(PARAMETERS)}")
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}; use one of {', '.join(METRICS)}")
        grid = tuple(float(g) for g in self.grid)
        if not grid:
            raise ConfigError("sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        engines = tuple(self.engines)
        if not engines or any(e not in ENGINES for e in engines):
            raise ConfigError(f"engines must be drawn from {', '.join(ENGINES)}")
        object.__setattr__(self, "engines", engines)
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if self.parameter == "tau_db" and self.metric != "sir_coverage":
            raise ConfigError("a tau_db sweep needs the sir_coverage metric")
        if self.parameter == "rho" and self.metric != "rate_coverage":
            raise ConfigError("a rho sweep needs the rate_coverage metric")
        if self.metric != "association" and self.parameter not in ("tau_db", "rho") and not self.thresholds:
            raise ConfigError(f"{self.metric} at a swept {self.parameter} needs at least one threshold")


@dataclass(frozen=True)
class Row:
    param_value: float
    engine: str
    metric: str
    value: float = None
    ci_halfwidth: float = None
    seed: int = None

    @property
    def failed(self) -> bool:
        return self.value is None

    def cells(self):
        return (
            format_number(self.param_value), self.engine, self.metric,
            FAILED if self.failed else f"{self.value:.6f}",
            "" if self.failed else f"{self.ci_halfwidth:.6f}",
            "" if self.seed is None else str(self.seed),
        )


def write_rows(rows, stream=None, header=CSV_HEADER) -> str:
    """Write rows (``Row`` objects or plain tuples) as CSV; return the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r.cells() if hasattr(r, "cells") else r)
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def apply_parameter(cfg: NetworkConfig, name: str, value: float) -> NetworkConfig:
    """Return ``cfg`` with the swept network parameter set to ``value``.

    ``tau_db`` and ``rho`` are metric thresholds and leave ``cfg`` as is.
    """
    if name == "lambda_ratio":
        if not value > 0:
            raise DomainError("density ratio must be positive")
        return cfg.with_tiers(femto_density=value * cfg.macro.density)
    if name == "bias_db":
        return cfg.with_bias_db(value)
    if name == "eta":
        return replace(cfg, eta=float(value))
    if name == "n_m":
        if not float(value).is_integer():
            raise DomainError("antenna count must be an integer")
        return cfg.with_tiers(macro_antennas=int(value))
    if name in ("tau_db", "rho"):
        return cfg
    raise ConfigError(f"unknown parameter {name!r}")


def _metric_names(spec: SweepSpec):
    if spec.metric == "association":
        return [m for m, _ in _CASE_METRICS] + ["ul_macro"]
    if spec.parameter in ("tau_db", "rho"):
        return [spec.metric]
    unit = "dB" if spec.metric == "sir_coverage" else ""
    return [f"{spec.metric}@{format_number(t)}{unit}" for t in spec.thresholds]


def _analytic_values(cfg, spec, value, mode, tables):
    if spec.metric == "association":
        return [case_probability(c, cfg) for _, c in _CASE_METRICS] + [ul_assoc_probability(Tier.MACRO, cfg)]
    if spec.metric == "sir_coverage":
        taus = [value] if spec.parameter == "tau_db" else spec.thresholds
        return [network_sir_coverage(cfg, 10.0 ** (t / 10.0), mode) for t in taus]
    rhos = [value] if spec.parameter == "rho" else spec.thresholds
    return [network_rate_coverage(cfg, r, "pmf", mode, tables) for r in rhos]


def _sim_values(est, spec, index):
    """(value, half-width) pairs read off an ``Estimate``."""
    if spec.metric == "association":
        n = est.counts.n
        c = est.counts.cases
        counts = [c[0], c[1] + c[3], c[2], est.counts.tier_n[0]]
        return [wilson(int(k), n) for k in counts]
    curve = est.coverage if spec.metric == "sir_coverage" else est.rate
    if index is None:
        return list(zip(curve.values, curve.half_widths))
    return [(curve.values[index], curve.half_widths[index])]


def _sim_estimate(cfg, spec, thresholds, n_drops, seed, window, workers):
    if spec.metric == "rate_coverage":
        return estimate(cfg, (), n_drops, seed, thresholds, window, workers=workers)
    return estimate(cfg, thresholds if spec.metric == "sir_coverage" else (), n_drops, seed,
                    window=window, workers=workers)


def run_sweep(cfg: NetworkConfig, spec: SweepSpec, n_drops: int = 10000, seed: int = 0, mode=None,
              window: float = DEFAULT_HALF_WIDTH, workers: int = 1, on_error=None) -> list:
    """Evaluate ``spec`` on ``cfg``; returns rows in grid order.

    ``on_error(param_value, engine, exc)`` is called for every failed grid
    point (the row is still emitted, marked failed).
    """
    names = _metric_names(spec)
    rows = []

    def fail(v, engine, exc, seed_=None):
        if on_error is not None:
            on_error(v, engine, exc)
        rows.extend(Row(v, engine, m, seed=seed_) for m in names)

    threshold_sweep = spec.parameter in ("tau_db", "rho")
    shared_est = None
    if "sim" in spec.engines and threshold_sweep:
        # One sample set for the whole threshold grid keeps the curve monotone.
        try:
            shared_est = _sim_estimate(cfg, spec, spec.grid, n_drops, seed, window, workers)
        except (DudehetError, ArithmeticError) as exc:
            shared_est = exc

    tables = None
    if spec.metric == "rate_coverage" and spec.parameter == "rho":
        tables = {t: SirCoverageTable(t, cfg, mode) for t in (Tier.MACRO, Tier.FEMTO)}

    for i, v in enumerate(spec.grid):
        try:
            point_cfg = apply_parameter(cfg, spec.parameter, v)
        except DudehetError as exc:
            for e in spec.engines:
                fail(v, e, exc, seed if e == "sim" else None)
            continue
        for engine in spec.engines:
            if engine == "analytic":
                try:
                    vals = _analytic_values(point_cfg, spec, v, mode, tables)
                except (DudehetError, ArithmeticError) as exc:
                    fail(v, engine, exc)
                    continue
                rows.extend(Row(v, engine, m, float(x), 0.0) for m, x in zip(names, vals))
                continue
            try:
                if threshold_sweep:
                    if isinstance(shared_est, Exception):
                        raise shared_est
                    est, idx = shared_est, i
                else:
                    est = _sim_estimate(point_cfg, spec, spec.thresholds, n_drops, seed, window, workers)
                    idx = None
                pairs = _sim_values(est, spec, idx)
            except (DudehetError, ArithmeticError) as exc:
                fail(v, engine, exc, seed)
                continue
            rows.extend(Row(v, engine, m, float(x), float(h), seed) for m, (x, h) in zip(names, pairs))
    return rows


# ---------------------------------------------------------------------------
# Cross-engine validation
# ---------------------------------------------------------------------------

VALIDATION_HEADER = ("tau_db", "analytic", "monte_carlo", "ci_halfwidth", "gap", "pass")


@dataclass(frozen=True)
class ValidationPoint:
    tau_db: float
    analytic: float
    monte_carlo: float
    ci_halfwidth: float
    tolerance: float

    @property
    def gap(self) -> float:
        return abs(self.analytic - self.monte_carlo)

    @property
    def passed(self) -> bool:
        return self.gap <= self.tolerance + self.ci_halfwidth

    def cells(self):
        return (format_number(self.tau_db), f"{self.analytic:.6f}", f"{self.monte_carlo:.6f}",
                f"{self.ci_halfwidth:.6f}", f"{self.gap:.6f}", "pass" if self.passed else "fail")


@dataclass(frozen=True)
class ValidationReport:
    points: tuple
    tolerance: float
    n_drops: int
    seed: int
    reference: str

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.points)

    @property
    def max_gap(self) -> float:
        return max(p.gap for p in self.points)


def validate(cfg: NetworkConfig, thresholds_db, n_drops: int = 10000, tolerance: float = 0.05, seed: int = 0,
             mode=None, window: float = DEFAULT_HALF_WIDTH, workers: int = 1, reference: str = "sim",
             analytic_cfg: NetworkConfig = None) -> ValidationReport:
    """Compare analytic network SIR coverage with a reference engine.

    ``reference="analytic"`` compares the analytic engine with itself.
    ``analytic_cfg`` lets the analytic side run on a different (e.g.
    deliberately perturbed) configuration.
    """
    if not tolerance >= 0:
        raise DomainError("tolerance must be non-negative")
    th = sorted(float(t) for t in thresholds_db)
    if not th:
        raise ConfigError("no thresholds to validate")
    acfg = cfg if analytic_cfg is None else analytic_cfg
    ana = [network_sir_coverage(acfg, 10.0 ** (t / 10.0), mode) for t in th]
    if reference == "analytic":
        ref = [(network_sir_coverage(cfg, 10.0 ** (t / 10.0), mode), 0.0) for t in th]
    elif reference == "sim":
        est = estimate(cfg, th, n_drops, seed, window=window, workers=workers)
        ref = list(zip(est.coverage.values, est.coverage.half_widths))
    else:
        raise ConfigError(f"unknown reference engine {reference!r}")
    pts = tuple(ValidationPoint(t, a, m, h, tolerance) for t, a, (m, h) in zip(th, ana, ref))
    return ValidationReport(pts, tolerance, n_drops, seed, reference)


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------

_OBJECTIVE = re.compile(r"^(sir_coverage|rate_coverage|corollary([1-7]))@([-+0-9.eE]+)(db)?$", re.IGNORECASE)


@dataclass(frozen=True)
class Objective:
    """What a search maximises.

    ``sir_coverage@T`` (T in dB), ``rate_coverage@R`` (R in bit/s) or
    ``corollaryK@T``, the closed-form special case K at T dB, which is
    only defined where that case's hypotheses hold.
    """

    kind: str
    level: float
    corollary: int = None

    @classmethod
    def parse(cls, text: str) -> "Objective":
        m = _OBJECTIVE.match(text.strip().replace(" ", ""))
        if not m:
            raise ConfigError(f"cannot parse objective {text!r}; use sir_coverage@T, rate_coverage@R or corollaryK@T")
        kind = m.group(1).lower()
        cid = int(m.group(2)) if m.group(2) else None
        return cls("corollary" if cid else kind, float(m.group(3)), cid)

    @property
    def label(self) -> str:
        if self.kind == "rate_coverage":
            return f"rate_coverage@{format_number(self.level)}"
        name = f"corollary{self.corollary}" if self.corollary else self.kind
        return f"{name}@{format_number(self.level)}dB"

    def __call__(self, cfg: NetworkConfig, mode=None) -> float:
        if self.kind == "sir_coverage":
            return network_sir_coverage(cfg, 10.0 ** (self.level / 10.0), mode)
        if self.kind == "rate_coverage":
            return network_rate_coverage(cfg, self.level, "pmf", mode)
        return corollary_coverage(self.corollary, cfg, 10.0 ** (self.level / 10.0))


@dataclass(frozen=True)
class SearchResult:
    variable: str
    objective: Objective
    best: float
    best_value: float
    curve: tuple  # ((grid value, objective or None), ...)

    def rows(self):
        return [Row(v, "analytic", self.objective.label, y, None if y is None else 0.0) for v, y in self.curve]


def grid_search(cfg: NetworkConfig, variable: str, grid, objective, mode=None) -> SearchResult:
    """Argmax of ``objective`` over ``grid``.

    Points where the objective cannot be evaluated (for instance outside a
    special case's hypotheses) are skipped.  Ties, up to ``TIE_TOL``, go to
    the smaller grid value.
    """
    if variable not in SEARCH_VARIABLES:
        raise ConfigError(f"search variable must be one of {', '.join(SEARCH_VARIABLES)}")
    obj = objective if isinstance(objective, Objective) else Objective.parse(objective)
    grid = tuple(float(g) for g in grid)
    if not grid:
        raise ConfigError("search grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("search grid must be strictly increasing")
    curve, best, best_val = [], None, -np.inf
    for v in grid:
        try:
            y = float(obj(apply_parameter(cfg, variable, v), mode))
        except (DudehetError, ArithmeticError):
            curve.append((v, None))
            continue
        curve.append((v, y))
        if y > best_val + TIE_TOL:
            best, best_val = v, y
    if best is None:
        raise ContractError(f"{obj.label} could not be evaluated at any grid point")
    return SearchResult(variable, obj, best, best_val, tuple(curve))


__all__ = [
    "PARAMETERS", "METRICS", "ENGINES", "CSV_HEADER", "SweepSpec", "Row", "run_sweep", "write_rows",
    "apply_parameter", "parse_grid", "format_number", "ValidationPoint", "ValidationReport", "validate",
    "VALIDATION_HEADER", "Objective", "SearchResult", "grid_search",
]
