"""Tier and network SIR coverage.

With MRC the signal gain is Gamma(N_K, 1), so

    P(SIR > tau | X) = sum_{n<N_K} (-s)^n / n! * d^n/ds^n L_I(s),  s = tau X^(a_K (1 - eta)),

and d^n L_I / ds^n comes from the derivatives of the exponent through Faa
di Bruno.  Every term is non-negative: s^k f^(k) has sign (-1)^k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, NumericalError
from ..model import NetworkConfig, Tier
from ..numerics import QuadratureSpec, faa_di_bruno_exp, integrate
from .association import serving_distance_pdf, ul_assoc_probability
from .laplace import LaplaceExponent, LimitMode, laplace_exponent

OUTER_QUAD = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-12, max_subdivisions=400)
OUTER_CUTOFF = 1e-12
_BOUND_TOL = 1e-7


@dataclass(frozen=True)
class CoverageCurve:
    """Coverage probabilities over a threshold grid.

    ``thresholds_db`` are SIR thresholds in dB (or rate thresholds in bit/s
    when ``kind == "rate"``).  ``half_widths`` are 95% CI half-widths (zero
    for analytic curves).
    """

    thresholds_db: tuple
    values: tuple
    source: str
    half_widths: tuple = field(default=None)
    kind: str = "sir"

    def __post_init__(self):
        hw = self.half_widths if self.half_widths is not None else (0.0,) * len(self.values)
        object.__setattr__(self, "half_widths", tuple(float(h) for h in hw))
        object.__setattr__(self, "thresholds_db", tuple(float(t) for t in self.thresholds_db))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(self.thresholds_db) or len(self.half_widths) != len(self.values):
            raise DomainError("thresholds, values and half-widths must have equal length")
        if self.source not in ("analytic", "monte-carlo"):
            raise DomainError(f"unknown source {self.source!r}")
        if any(not (0.0 <= v <= 1.0) for v in self.values):
            raise DomainError("coverage values must lie in [0, 1]")
        if list(self.thresholds_db) != sorted(self.thresholds_db):
            raise DomainError("thresholds must be sorted")

    @property
    def thresholds_linear(self):
        return tuple(10.0 ** (t / 10.0) for t in self.thresholds_db)

    def is_monotone(self, tol: float = 0.0) -> bool:
        return all(b <= a + tol for a, b in zip(self.values, self.values[1:]))


def _mixture_terms(scaled: np.ndarray, n_terms: int) -> np.ndarray:
    """sum_{n<N} (-1)^n/n! * s^n L^(n)(s), given scaled exponent derivatives."""
    total = np.zeros(scaled.shape[1])
    for n in range(n_terms):
        total += (-1.0) ** n / math.factorial(n) * faa_di_bruno_exp(n, list(scaled[: n + 1]))
    if np.any(total < -1e-12):
        raise NumericalError("negative conditional coverage: derivative sum lost its sign pattern")
    return total


def conditional_coverage(le: LaplaceExponent, tau: float, n_terms: int) -> np.ndarray:
    """P(SIR > tau | X = le.x) for each serving distance in ``le.x``."""
    x = np.atleast_1d(np.asarray(le.x, dtype=float))
    s = tau * x ** (le.alpha_k * (1.0 - le.eta))
    return _mixture_terms(le.scaled_derivs(s, n_terms - 1), n_terms)


def _clamp(p: float, what: str) -> float:
    if p < -_BOUND_TOL or p > 1.0 + _BOUND_TOL:
        raise NumericalError(f"{what} = {p} outside [0, 1] beyond tolerance")
    return min(max(p, 0.0), 1.0)


def sir_coverage(tier, cfg: NetworkConfig, tau: float, mode=None) -> float:
    """P(SIR > tau) for a typical UE served in the UL by ``tier``.

    ``tau`` is linear.  ``mode`` selects the interferer integration limits
    (see ``LimitMode``).
    """
    tier = Tier.parse(tier)
    if not (tau > 0 and math.isfinite(tau)):
        raise DomainError("threshold must be positive and finite")
    n_terms = cfg.tier(tier).antennas
    pdf = serving_distance_pdf(tier, cfg)
    probe = laplace_exponent(tier, cfg, 1.0, mode)
    if probe.x_independent:
        # f does not depend on X and s = tau: the X-average is the pdf mass, 1.
        return _clamp(float(conditional_coverage(probe, tau, n_terms)[0]), "coverage")

    x_max = pdf.cutoff(OUTER_CUTOFF)

    def integrand(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        if np.any(pos):
            le = laplace_exponent(tier, cfg, x[pos], probe.mode)
            out[pos] = pdf(x[pos]) * conditional_coverage(le, tau, n_terms)
        return out

    val, _ = integrate(integrand, 0.0, x_max, OUTER_QUAD)
    return _clamp(val, "coverage")


def network_sir_coverage(cfg: NetworkConfig, tau: float, mode=None) -> float:
    """A_M C_M + A_F C_F."""
    total = 0.0
    for t in (Tier.MACRO, Tier.FEMTO):
        total += ul_assoc_probability(t, cfg) * sir_coverage(t, cfg, tau, mode)
    return _clamp(total, "network coverage")


def coverage_curve(cfg: NetworkConfig, thresholds_db, tier=None, mode=None) -> CoverageCurve:
    """Analytic coverage over a dB grid (network-level when ``tier`` is None)."""
    th = sorted(float(t) for t in thresholds_db)
    vals = []
    for t in th:
        tau = 10.0 ** (t / 10.0)
        vals.append(network_sir_coverage(cfg, tau, mode) if tier is None else sir_coverage(tier, cfg, tau, mode))
    return CoverageCurve(tuple(th), tuple(vals), "analytic")


__all__ = [
    "CoverageCurve", "LimitMode", "sir_coverage", "network_sir_coverage",
    "conditional_coverage", "coverage_curve",
]
