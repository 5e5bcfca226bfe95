"""Load distribution and rate coverage.

The number of UEs sharing the tagged BS is modelled as

    P(Omega = n) = 3.5^3.5 / (n-1)! * Gamma(n+3.5)/Gamma(3.5) * c^(n-1) (3.5+c)^-(n+3.5),  n >= 1,

with c = lambda_U A_K / lambda_K, i.e. 1 + NegBin(r = 4.5, p = 3.5/(3.5+c)).
The rate of the typical UE is (W / Omega) log2(1 + SIR), so

    R_K(rho) = sum_n P(Omega = n) C_K(2^(rho n / W) - 1)        (pmf mode)
    R_K(rho) = C_K(2^(rho Omega_bar / W) - 1)                   (mean mode)

with the mean-load approximation Omega_bar = 1 + 1.28 c.  The pmf mode
evaluates C_K at up to thousands of thresholds, so it reads them from a
monotone (PCHIP) interpolant of log C_K on a dB grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaln

from ..errors import DomainError
from ..model import NetworkConfig, Tier
from .association import ul_assoc_probability
from .coverage import CoverageCurve, sir_coverage

TAIL_MASS = 1e-8
MEAN_LOAD_SLOPE = 1.28
_SHAPE = 3.5

# SIR-coverage interpolation grid (dB).
TABLE_STEP_DB = 1.0
TABLE_FLOOR_DB = -60.0
TABLE_NEGLIGIBLE = 1e-12


@dataclass(frozen=True)
class LoadModel:
    """Load of a tier-K BS seen by its typical UE.

    ``pmf[i]`` is P(Omega = i + 1) for i < n_max; the omitted tail has mass
    below ``TAIL_MASS``.  ``mean`` is the 1 + 1.28 c approximation and
    ``pmf_mean`` the exact mean of the PMF, 1 + (4.5/3.5) c.
    """

    tier: Tier
    users_per_bs: float  # c = lambda_U A_K / lambda_K
    mean: float
    pmf_mean: float
    n_max: int
    pmf: np.ndarray

    @property
    def mean_gap(self) -> float:
        """How far the 1.28 approximation sits from the PMF mean."""
        return self.mean - self.pmf_mean


def _log_pmf(n, c):
    n = np.asarray(n, dtype=float)
    out = (_SHAPE * math.log(_SHAPE) - gammaln(n) + gammaln(n + _SHAPE) - gammaln(_SHAPE)
           - (n + _SHAPE) * math.log(_SHAPE + c))
    if c > 0:
        out = out + (n - 1.0) * math.log(c)
    else:
        out = np.where(n == 1.0, out, -np.inf)
    return out


def load_pmf_values(c: float) -> np.ndarray:
    """P(Omega = 1..n_max) for users-per-BS ratio ``c``, truncated at tail mass < TAIL_MASS."""
    if not (c >= 0 and math.isfinite(c)):
        raise DomainError("users per BS must be finite and non-negative")
    size = max(64, int(4 * (1 + 1.3 * c)))
    while True:
        p = np.exp(_log_pmf(np.arange(1, size + 1), c))
        cum = np.cumsum(p)
        idx = np.nonzero(1.0 - cum < TAIL_MASS)[0]
        if idx.size and idx[0] < size - 1:
            return p[: idx[0] + 1]
        size *= 2


def load_pmf(tier, cfg: NetworkConfig) -> LoadModel:
    """Load PMF of ``tier`` for ``cfg`` (uses the UL association probability)."""
    tier = Tier.parse(tier)
    c = cfg.ue_density * ul_assoc_probability(tier, cfg) / cfg.tier(tier).density
    p = load_pmf_values(c)
    return LoadModel(tier, c, 1.0 + MEAN_LOAD_SLOPE * c, 1.0 + (_SHAPE + 1.0) / _SHAPE * c, p.size, p)


class SirCoverageTable:
    """PCHIP interpolant of log C_K over a dB grid, grown on demand.

    Below ``TABLE_FLOOR_DB`` the floor value is used (C_K is within a hair
    of 1 there).  Above the grid, once C_K has dropped below
    ``TABLE_NEGLIGIBLE``, zero is returned.
    """

    def __init__(self, tier, cfg: NetworkConfig, mode=None, step_db: float = TABLE_STEP_DB):
        self.tier = Tier.parse(tier)
        self.cfg = cfg
        self.mode = mode
        self.step = float(step_db)
        self._db = []
        self._val = []
        self._fit = None

    def _eval(self, db):
        return sir_coverage(self.tier, self.cfg, 10.0 ** (db / 10.0), self.mode)

    def _cover(self, lo_db, hi_db):
        lo_db = max(TABLE_FLOOR_DB, self.step * math.floor(lo_db / self.step))
        hi_db = max(lo_db + self.step, hi_db)
        if not self._db:
            self._db = [lo_db]
            self._val = [self._eval(lo_db)]
        while self._db[0] > lo_db:
            d = self._db[0] - self.step
            self._db.insert(0, d)
            self._val.insert(0, self._eval(d))
        while self._db[-1] < hi_db and self._val[-1] > TABLE_NEGLIGIBLE:
            d = self._db[-1] + self.step
            self._db.append(d)
            self._val.append(self._eval(d))
        while len(self._db) < 2:
            d = self._db[-1] + self.step
            self._db.append(d)
            self._val.append(self._eval(d))
        pos = np.maximum(np.asarray(self._val), 1e-300)
        self._fit = PchipInterpolator(np.asarray(self._db), np.log(pos))

    def __call__(self, tau):
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        db = 10.0 * np.log10(tau)
        self._cover(float(db.min()), float(db.max()))
        top = self._db[-1]
        out = np.exp(self._fit(np.clip(db, self._db[0], top)))
        out[db > top] = 0.0 if self._val[-1] <= TABLE_NEGLIGIBLE else out[db > top]
        return np.clip(out, 0.0, 1.0)


def _check_rate(rho, cfg):
    if not (rho > 0 and math.isfinite(rho)):
        raise DomainError("rate threshold must be positive and finite")
    if not cfg.bandwidth > 0:
        raise DomainError("bandwidth must be positive")


def rate_coverage(tier, cfg: NetworkConfig, rho: float, load_mode: str = "pmf", mode=None, table=None) -> float:
    """P(W/Omega log2(1+SIR) > rho) for a UE served in the UL by ``tier``.

    ``table`` may pass a shared SirCoverageTable to reuse C_K evaluations
    across many thresholds (pmf mode only).
    """
    tier = Tier.parse(tier)
    _check_rate(rho, cfg)
    lm = load_pmf(tier, cfg)
    if load_mode == "mean":
        tau = 2.0 ** (rho * lm.mean / cfg.bandwidth) - 1.0
        return sir_coverage(tier, cfg, tau, mode) if math.isfinite(tau) else 0.0
    if load_mode != "pmf":
        raise DomainError(f"unknown load mode {load_mode!r}; use 'pmf' or 'mean'")
    table = table if table is not None else SirCoverageTable(tier, cfg, mode)
    n = np.arange(1, lm.n_max + 1)
    expo = rho * n / cfg.bandwidth
    finite = expo < 1000.0  # 2^1000 - 1: coverage is zero long before
    cov = np.zeros(n.size)
    if np.any(finite):
        cov[finite] = table(np.expm1(expo[finite] * math.log(2.0)))
    return float(min(max(np.dot(lm.pmf, cov), 0.0), 1.0))


def network_rate_coverage(cfg: NetworkConfig, rho: float, load_mode: str = "pmf", mode=None, tables=None) -> float:
    """A_M R_M + A_F R_F."""
    tables = tables or {}
    total = 0.0
    for t in (Tier.MACRO, Tier.FEMTO):
        total += ul_assoc_probability(t, cfg) * rate_coverage(t, cfg, rho, load_mode, mode, tables.get(t))
    return min(max(total, 0.0), 1.0)


def rate_curve(cfg: NetworkConfig, rhos, load_mode: str = "pmf", mode=None) -> CoverageCurve:
    """Network rate coverage over rate thresholds (bit/s), sharing one table per tier."""
    rhos = sorted(float(r) for r in rhos)
    tables = {t: SirCoverageTable(t, cfg, mode) for t in (Tier.MACRO, Tier.FEMTO)} if load_mode == "pmf" else None
    vals = [network_rate_coverage(cfg, r, load_mode, mode, tables) for r in rhos]
    return CoverageCurve(tuple(rhos), tuple(vals), "analytic", kind="rate")


__all__ = [
    "LoadModel", "load_pmf", "load_pmf_values", "rate_coverage", "network_rate_coverage",
    "rate_curve", "SirCoverageTable",
]
