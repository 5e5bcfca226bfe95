"""Built-in scenario presets for the figure reproductions.

Every preset is a flat config mapping (the same keys as a config file)
plus a default sweep: the swept parameter, its grid and the metrics to
report.  Values that the figure captions leave out are filled with
declared defaults and listed in ``assumed``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import NetworkConfig, config_from_mapping, format_config

# Fixed in the results section for every figure.
_COMMON = {"p_m_dbm": 43.0, "p_f_dbm": 20.0, "p0_dbm_hz": -100.0, "w_hz": 10e6, "lambda_u": 3000.0}
_TAU_GRID = tuple(float(t) for t in range(-10, 21, 5))


@dataclass(frozen=True)
class Preset:
    """A named scenario with its default sweep.

    ``metric`` is one of ``association``, ``sir_coverage`` or
    ``rate_coverage``.  ``thresholds`` are SIR thresholds in dB (or rate
    thresholds in bit/s) reported at every grid point when the swept
    parameter is not itself the threshold.
    """

    name: str
    description: str
    values: dict
    parameter: str
    grid: tuple
    metric: str
    thresholds: tuple = ()
    assumed: tuple = ()
    variants: dict = field(default_factory=dict)

    def config(self, **overrides) -> NetworkConfig:
        v = dict(_COMMON)
        v.update(self.values)
        v.update(overrides)
        return config_from_mapping(v)

    def config_text(self) -> str:
        return format_config(self.config())


def _p(name, description, values, parameter, grid, metric, thresholds=(), assumed=(), variants=None):
    return Preset(name, description, dict(values), parameter, tuple(float(g) for g in grid), metric,
                  tuple(float(t) for t in thresholds), tuple(assumed), dict(variants or {}))


_fig4_ab = {"lambda_m": 3.0, "lambda_f": 10.0, "n_m": 4, "n_f": 2, "alpha_m": 3.0, "alpha_f": 3.0, "bias_db": 0.0}
_fig4_cd = {"lambda_m": 1.0, "lambda_f": 4.0, "n_m": 1, "n_f": 1, "alpha_m": 3.0, "alpha_f": 3.0, "bias_db": 10.0}
_fig10 = {"lambda_m": 2.0, "lambda_f": 10.0, "n_m": 20, "n_f": 2, "alpha_m": 3.0, "alpha_f": 3.0}

PRESETS = {p.name: p for p in (
    _p("fig2", "UL association probabilities against the density ratio, no bias",
       {"lambda_m": 1.0, "lambda_f": 5.0, "n_m": 5, "n_f": 1, "alpha_m": 4.0, "alpha_f": 4.0, "bias_db": 0.0},
       "lambda_ratio", range(1, 11), "association",
       assumed=("lambda_m = 1 (probabilities depend only on the ratio)",)),
    _p("fig3", "UL association probabilities against the density ratio, bias B = 5",
       {"lambda_m": 1.0, "lambda_f": 5.0, "n_m": 5, "n_f": 1, "alpha_m": 4.0, "alpha_f": 4.0,
        "bias_db": float(10 * np.log10(5.0))},
       "lambda_ratio", range(1, 11), "association",
       assumed=("lambda_m = 1 (probabilities depend only on the ratio)",)),
    _p("fig4a", "SIR coverage, simulation against analysis, full power control",
       dict(_fig4_ab, eta=1.0), "tau_db", _TAU_GRID, "sir_coverage",
       assumed=("eta = 1 for panel (a)", "bias_db = 0")),
    _p("fig4b", "SIR coverage, simulation against analysis, no power control",
       dict(_fig4_ab, eta=0.0), "tau_db", _TAU_GRID, "sir_coverage",
       assumed=("eta = 0 for panel (b)", "bias_db = 0")),
    _p("fig4c", "SIR coverage, single antennas with a 10 dB femto bias, full power control",
       dict(_fig4_cd, eta=1.0), "tau_db", _TAU_GRID, "sir_coverage",
       assumed=("eta = 1 for panel (c)", "alpha = 3")),
    _p("fig4d", "SIR coverage, single antennas with a 10 dB femto bias, no power control",
       dict(_fig4_cd, eta=0.0), "tau_db", _TAU_GRID, "sir_coverage",
       assumed=("eta = 0 for panel (d)", "alpha = 3")),
    _p("fig5", "Effect of the power-control fraction on SIR coverage",
       {"lambda_m": 2.0, "lambda_f": 12.0, "n_m": 12, "n_f": 4, "alpha_m": 3.0, "alpha_f": 3.0, "bias_db": 0.0},
       "eta", np.round(np.arange(0.0, 1.01, 0.1), 1), "sir_coverage", thresholds=(-10.0, 0.0, 10.0),
       assumed=("lambda_u = 3000", "thresholds -10, 0, 10 dB"),
       variants={"no-dude": {"mode": "no-dude"}}),
    _p("fig8", "Rate coverage for N_M = 20 without bias (variants: N_M = 1, 16 dB bias)",
       {"lambda_m": 3.0, "lambda_f": 18.0, "n_m": 20, "n_f": 1, "alpha_m": 3.0, "alpha_f": 3.0,
        "bias_db": 0.0, "eta": 1.0},
       "rho", (1e3, 2e3, 5e3, 1e4, 2e4, 5e4, 1e5, 2e5, 5e5, 1e6), "rate_coverage",
       assumed=("n_f = 1", "biased variant uses 16 dB"),
       variants={"nm1": {"n_m": 1}, "biased": {"bias_db": 16.0}}),
    _p("fig10a", "SIR coverage against bias, no power control",
       dict(_fig10, eta=0.0), "bias_db", range(-5, 16), "sir_coverage", thresholds=(0.0,),
       assumed=("SIR threshold 0 dB",)),
    _p("fig10b", "SIR coverage against bias, full power control",
       dict(_fig10, eta=1.0), "bias_db", range(-5, 16), "sir_coverage", thresholds=(0.0,),
       assumed=("SIR threshold 0 dB",)),
)}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


__all__ = ["Preset", "PRESETS", "get_preset"]
