"""Association probabilities and the serving-distance density.

All three case probabilities and the tier probabilities reduce to one
integral shape

    I(lam_s, lam_o, w, a_s, a_o) = 2 pi lam_s * int_0^inf x exp(-pi (lam_o w^(2/a_o) x^(2 a_s/a_o) + lam_s x^2)) dx

which is the probability that the nearest serving-tier BS, weighted by
``1/w`` relative to the other tier, wins the comparison.  With a common
path-loss exponent it collapses to lam_s / (lam_s + w^(2/a) lam_o).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from ..model import AssociationCase, NetworkConfig, Tier, resolve_law
from ..numerics import QuadratureSpec, integrate

ASSOC_QUAD = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-15, max_subdivisions=500)


def association_integral(lam_s, lam_o, weight, a_s, a_o, form="auto"):
    """P(serving tier wins) for a weight ratio ``weight`` = other/serving.

    ``form`` is ``"closed"`` (needs a_s == a_o), ``"integral"`` or
    ``"auto"`` (closed when exponents match).
    """
    if form == "auto":
        form = "closed" if a_s == a_o else "integral"
    if form == "closed":
        if a_s != a_o:
            raise ValueError("closed form needs equal path-loss exponents")
        return lam_s / (lam_s + weight ** (2.0 / a_s) * lam_o)
    c = lam_o * weight ** (2.0 / a_o)
    beta = 2.0 * a_s / a_o

    def f(x):
        return 2.0 * math.pi * lam_s * x * np.exp(-math.pi * (c * x ** beta + lam_s * x * x))

    # Integrate on a finite range that holds all but ~1e-16 of the mass; the
    # integrand is dominated by exp(-pi lam_s x^2).
    upper = math.sqrt(40.0 / (math.pi * lam_s))
    val, _ = integrate(f, 0.0, upper, ASSOC_QUAD)
    return val


def case_probability(case, cfg: NetworkConfig) -> float:
    """Probability of each association case.

    In the standard branch (B_F/B_M >= P_F/P_M) the three values are the
    macro-both, decoupled (macro DL / femto UL) and femto-both
    probabilities.  In the opposite branch the roles of P and B swap and the
    middle value is the probability of the other mixed state, femto DL /
    macro UL.  In both branches the three values sum to one.
    """
    case = AssociationCase(case)
    law = resolve_law(cfg)
    lm, lf = cfg.macro.density, cfg.femto.density
    am, af = cfg.macro.alpha, cfg.femto.alpha
    if case is AssociationCase.MACRO_BOTH:
        p = association_integral(lm, lf, law.upsilon_1, am, af)
    elif case is AssociationCase.FEMTO_BOTH:
        p = association_integral(lf, lm, law.upsilon_2p, af, am)
    else:
        p = (association_integral(lf, lm, law.upsilon_1p, af, am)
             - association_integral(lf, lm, law.upsilon_2p, af, am))
    return float(min(max(p, 0.0), 1.0)) if -1e-12 < p < 1 + 1e-12 else float(p)


def case_probabilities(cfg: NetworkConfig) -> dict:
    return {c: case_probability(c, cfg) for c in AssociationCase}


def tier_assoc_probability(tier, cfg: NetworkConfig, form="auto") -> float:
    """Probability that the typical UE's serving BS is in ``tier``.

    Uses the branch-dependent weight ratio from ``resolve_law``.  Under
    ``form="auto"`` the closed form is used when both tiers share alpha.
    """
    tier = Tier.parse(tier)
    law = resolve_law(cfg)
    w = law.upsilon if tier is Tier.MACRO else 1.0 / law.upsilon
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    return float(association_integral(k.density, j.density, w, k.alpha, j.alpha, form))


def ul_assoc_probability(tier, cfg: NetworkConfig) -> float:
    """Probability that the UL rule (max N*B*x^-alpha) picks ``tier``.

    This equals ``tier_assoc_probability`` whenever B_F/B_M >= P_F/P_M.  The
    serving-distance density, the coverage mixture and the load model use
    this UL version in every branch.
    """
    tier = Tier.parse(tier)
    law = resolve_law(cfg)
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    return float(association_integral(k.density, j.density, law.zeta[tier], k.alpha, j.alpha))


@dataclass(frozen=True)
class ServingDistance:
    """Density of the UL serving distance given the serving tier.

    pdf(x) = (2 pi lam_k / A_k) x exp(-pi (lam_k x^2 + lam_j zeta^(2/a_j) x^(2 a_k/a_j)))
    """

    lam_k: float
    lam_j: float
    zeta: float
    alpha_k: float
    alpha_j: float
    norm: float

    @property
    def _c(self):
        return self.lam_j * self.zeta ** (2.0 / self.alpha_j)

    @property
    def _beta(self):
        return 2.0 * self.alpha_k / self.alpha_j

    def log_kernel(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(x) - math.pi * (self.lam_k * x * x + self._c * x ** self._beta)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = (2.0 * math.pi * self.lam_k / self.norm) * x * np.exp(
            -math.pi * (self.lam_k * x * x + self._c * x ** self._beta))
        return float(out) if out.ndim == 0 else out

    def mode(self) -> float:
        """Location of the density peak."""
        c, beta, lam = self._c, self._beta, self.lam_k

        def g(x):
            return 1.0 / x - math.pi * (2.0 * lam * x + c * beta * x ** (beta - 1.0))

        hi = 1.0 / math.sqrt(lam)
        while g(hi) > 0:
            hi *= 2.0
        lo = hi
        while g(lo) < 0:
            lo /= 2.0
        return brentq(g, lo, hi, xtol=1e-15, rtol=1e-14)

    def cutoff(self, rel: float = 1e-12) -> float:
        """Distance beyond the peak where the kernel drops to ``rel`` x peak."""
        return _cutoff(self, rel)

    def moment(self, p: float) -> float:
        """E[X^p] under this density."""
        hi = self.cutoff(1e-16)
        val, _ = integrate(lambda x: x ** p * self(x), 0.0, hi, ASSOC_QUAD)
        return val


@lru_cache(maxsize=256)
def _cutoff_cached(lam_k, lam_j, zeta, a_k, a_j, norm, rel):
    sd = ServingDistance(lam_k, lam_j, zeta, a_k, a_j, norm)
    x0 = sd.mode()
    target = float(sd.log_kernel(x0)) + math.log(rel)
    hi = 2.0 * x0
    while sd.log_kernel(hi) > target:
        hi *= 2.0
    return brentq(lambda x: float(sd.log_kernel(x)) - target, x0, hi, xtol=1e-14, rtol=1e-13)


def _cutoff(sd: ServingDistance, rel: float) -> float:
    return _cutoff_cached(sd.lam_k, sd.lam_j, sd.zeta, sd.alpha_k, sd.alpha_j, sd.norm, rel)


def serving_distance_pdf(tier, cfg: NetworkConfig) -> ServingDistance:
    """Serving-distance density for a UE served in the UL by ``tier``."""
    tier = Tier.parse(tier)
    law = resolve_law(cfg)
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    norm = ul_assoc_probability(tier, cfg)
    return ServingDistance(k.density, j.density, law.zeta[tier], k.alpha, j.alpha, norm)
