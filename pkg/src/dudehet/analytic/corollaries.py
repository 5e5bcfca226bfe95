"""Special-case coverage formulas.

Each special case is evaluated from its own simplified expression, not by
calling the general evaluator, so the two act as cross-checks of each
other.  The derivatives in the Laplace variable come from one identity.
With F(z) = 2F1(1, b; b+1; z), b = 1 - 2/a, and

    E_j(z) = z^j d^j/dz^j F(-z) = (-1)^j j! b/(b+j) z^j 2F1(1+j, b+j; b+1+j; -z),

every exponent here is a sum of terms A * s * F(-kappa s), whose scaled
derivatives are

    s^k d^k/ds^k [s F(-kappa s)] = s (E_k(kappa s) + k E_{k-1}(kappa s)).

Outer and inner integrals use scipy's QUADPACK, independent of the
package's own quadrature.

Hypotheses are checked with the effective UL weights, so in no-DUDe mode
the powers stand in for the biases.  Identifiers 1..7 follow the order in
which the special cases are usually listed: eta = 0; eta = 1; equal
N*B and alpha; fully symmetric tiers; eta = 0 with equal N*B; eta = 0
with single antennas; eta = 0 with single antennas and no bias.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate as spi

from ..errors import ContractError, DomainError
from ..model import NetworkConfig, Tier, resolve_law
from ..numerics import faa_di_bruno_coefficients, faa_di_bruno_exp, hyp2f1_scaled
from .association import ul_assoc_probability
from .laplace import LimitMode

# Interferer integration limits under which the general evaluator reduces
# to each special case.
COROLLARY_MODE = {
    1: LimitMode.EXCLUSION,
    2: LimitMode.DISPLAYED,
    3: LimitMode.DISPLAYED,
    4: LimitMode.DISPLAYED,
    5: LimitMode.EXCLUSION,
    6: LimitMode.EXCLUSION,
    7: LimitMode.EXCLUSION,
}

_REL = 1e-11
_ABS = 1e-14
_TOL = 1e-12


def _e_terms(n, alpha, z):
    """[E_0(z), ..., E_n(z)] for the kernel F(-z) with exponent alpha."""
    b = 1.0 - 2.0 / alpha
    z = np.asarray(z, dtype=float)
    out = []
    for j in range(n + 1):
        coef = (-1.0) ** j * math.factorial(j) * b / (b + j)
        out.append(coef * hyp2f1_scaled(1.0 + j, b + j, b + 1.0 + j, -z, j))
    return out


def _linear_kernel_derivs(n, alpha, amp, kappa, s):
    """Scaled derivatives s^k d^k/ds^k of amp * s * F(-kappa s), k = 0..n."""
    e = _e_terms(n, alpha, kappa * s)
    return [amp * s * (e[k] + (k * e[k - 1] if k else 0.0)) for k in range(n + 1)]


def _coverage_sum(derivs, n_terms):
    """sum_{n<N} (-1)^n/n! s^n L^(n)(s) from scaled exponent derivatives."""
    return sum((-1.0) ** n / math.factorial(n) * faa_di_bruno_exp(n, derivs[: n + 1]) for n in range(n_terms))


def _require(ok, cid, what):
    if not ok:
        raise ContractError(f"special case {cid} needs {what}")


def _close(a, b):
    return abs(a - b) <= _TOL * max(1.0, abs(a), abs(b))


def _check(cid, cfg, tier):
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    law = resolve_law(cfg)
    eq_alpha = k.alpha == j.alpha
    eq_weight = _close(law.zeta[tier], 1.0)
    if cid == 1:
        _require(cfg.eta == 0.0, cid, "eta = 0")
    elif cid == 2:
        _require(cfg.eta == 1.0, cid, "eta = 1")
    elif cid == 3:
        _require(eq_alpha, cid, "alpha_K = alpha_J")
        _require(eq_weight, cid, "B_K N_K = B_J N_J")
    elif cid == 4:
        _require(eq_alpha, cid, "alpha_K = alpha_J")
        _require(k.antennas == j.antennas, cid, "N_K = N_J")
        _require(_close(law.ul_weight[tier] / k.antennas, law.ul_weight[tier.other] / j.antennas), cid, "B_K = B_J")
        _require(_close(k.density, j.density), cid, "lambda_K = lambda_J")
    elif cid == 5:
        _require(cfg.eta == 0.0, cid, "eta = 0")
        _require(eq_alpha, cid, "alpha_K = alpha_J")
        _require(eq_weight, cid, "B_K N_K = B_J N_J")
    elif cid == 6:
        _require(cfg.eta == 0.0, cid, "eta = 0")
        _require(k.antennas == 1, cid, "N_K = 1")
        _require(eq_alpha, cid, "alpha_K = alpha_J")
    elif cid == 7:
        _require(cfg.eta == 0.0, cid, "eta = 0")
        _require(k.antennas == 1 and j.antennas == 1, cid, "N_K = N_J = 1")
        _require(eq_weight, cid, "B_K = B_J")
        _require(eq_alpha, cid, "alpha_K = alpha_J")
    else:
        raise DomainError(f"special case id must be 1..7, got {cid}")


def _pdf(tier, cfg):
    """Serving-distance density as a plain closure (scipy-friendly)."""
    law = resolve_law(cfg)
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    c = j.density * law.zeta[tier] ** (2.0 / j.alpha)
    beta = 2.0 * k.alpha / j.alpha
    norm = 2.0 * math.pi * k.density / ul_assoc_probability(tier, cfg)
    return lambda x: norm * x * math.exp(-math.pi * (k.density * x * x + c * x ** beta))


def _quad(f, a=0.0, b=np.inf):
    val, _ = spi.quad(f, a, b, epsabs=_ABS, epsrel=_REL, limit=400)
    return val


def _cor1(cfg, tier, tau):
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    ak, aj = k.alpha, j.alpha
    zeta = resolve_law(cfg).zeta[tier]
    n = k.antennas
    pdf = _pdf(tier, cfg)

    def integrand(x):
        s = x ** ak
        amp_k = -2.0 * math.pi * k.density * s ** (2.0 / ak) / (ak - 2.0)
        amp_j = (-2.0 * math.pi * j.density * zeta ** ((2.0 - ak) / aj)
                 * s ** ((2.0 + aj - ak) / aj) / (ak - 2.0))
        kap_j = s ** (1.0 - ak / aj) / zeta ** (ak / aj)
        dk = _linear_kernel_derivs(n - 1, ak, amp_k, 1.0, tau)
        dj = _linear_kernel_derivs(n - 1, ak, amp_j, kap_j, tau)
        return pdf(x) * _coverage_sum([a + b for a, b in zip(dk, dj)], n)

    return _quad(integrand)


def _moment(pdf, p):
    return _quad(lambda y: y ** p * pdf(y))


def _cor2(cfg, tier, tau):
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    ak, aj = k.alpha, j.alpha
    zeta = resolve_law(cfg).zeta[tier]
    m_k = _moment(_pdf(tier, cfg), 2.0)
    m_j = _moment(_pdf(tier.other, cfg), 2.0 * aj / ak)
    c = -2.0 * math.pi / (ak - 2.0)
    dk = _linear_kernel_derivs(k.antennas - 1, ak, c * k.density * m_k, 1.0, tau)
    dj = _linear_kernel_derivs(k.antennas - 1, ak, c * j.density * zeta ** (1.0 - 2.0 / ak) * m_j, zeta, tau)
    return _coverage_sum([a + b for a, b in zip(dk, dj)], k.antennas)


def _inner_rule(y_max, panels=48, order=24):
    """Composite Gauss-Legendre nodes on (0, y_max), panels graded towards 0."""
    edges = np.concatenate(([0.0], y_max * np.geomspace(1e-6, 1.0, panels)))
    t, wt = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * t[None, :] + 0.5 * (a + b)
    return nodes.ravel(), (0.5 * (b - a) * wt[None, :]).ravel()


def _single_tier(cfg, tier, tau, lam_serving, lam_total, n_terms, alpha):
    """Common shape of the equal-weight cases: one PPP of density lam_total."""
    eta = cfg.eta
    w_exp = alpha * (1.0 - eta)
    pdf_y = lambda y: 2.0 * math.pi * lam_total * y * np.exp(-math.pi * lam_total * y * y)  # noqa: E731
    y_max = math.sqrt(40.0 / (math.pi * lam_total))
    c = -2.0 * math.pi * lam_total / (alpha - 2.0)

    nodes, weights = _inner_rule(y_max)
    pdf_w = weights * pdf_y(nodes) * nodes * nodes
    w = nodes ** (-w_exp)

    def exponent_derivs(s):
        e = _e_terms(n_terms - 1, alpha, s * w)
        return [c * np.dot(pdf_w, s * w * (e[q] + (q * e[q - 1] if q else 0.0))) for q in range(n_terms)]

    if eta == 1.0:
        # s = tau for every X, so the X-integral is the outer weight's
        # mass lam_serving / lam_total.
        return lam_serving / lam_total * _coverage_sum(exponent_derivs(tau), n_terms)

    def outer(x):
        s = tau * x ** w_exp
        return (2.0 * math.pi * lam_serving * x * math.exp(-math.pi * lam_total * x * x)
                * _coverage_sum(exponent_derivs(s), n_terms))

    x_max = math.sqrt(40.0 / (math.pi * lam_total))
    return _quad(outer, 0.0, x_max)


def _cor3(cfg, tier, tau):
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    lam = k.density + j.density
    return _single_tier(cfg, tier, tau, k.density, lam, k.antennas, k.alpha) / ul_assoc_probability(tier, cfg)


def _cor4(cfg, tier, tau):
    k = cfg.tier(tier)
    # A = 1/2 and lambda_total = 2 lambda.
    return 2.0 * _single_tier(cfg, tier, tau, k.density, 2.0 * k.density, k.antennas, k.alpha)


def _cor5(cfg, tier, tau):
    """Closed form: the X-integral of X^(2k+1) exp(-beta X^2) is k!/(2 beta^(k+1))."""
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    alpha, n_terms = k.alpha, k.antennas
    lam = k.density + j.density
    # Scaled derivatives are X^2 * d_q.
    d = _linear_kernel_derivs(n_terms - 1, alpha, -2.0 * math.pi * lam / (alpha - 2.0), 1.0, tau)
    beta = math.pi * lam - d[0]
    total = 1.0 / beta  # n = 0 term: k = 0
    for n in range(1, n_terms):
        acc = 0.0
        for coef, b in faa_di_bruno_coefficients(n):
            parts = sum(b)
            term = coef * math.factorial(parts) / beta ** (parts + 1)
            for q, bq in enumerate(b, start=1):
                if bq:
                    term *= d[q] ** bq
            acc += term
        total += (-1.0) ** n / math.factorial(n) * acc
    return math.pi * k.density * total / ul_assoc_probability(tier, cfg)


def _cor6(cfg, tier, tau):
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    alpha = k.alpha
    zeta = resolve_law(cfg).zeta[tier]
    f = _e_terms(0, alpha, np.array([tau, tau / zeta]))[0]
    g = k.density * f[0] + j.density * zeta ** (2.0 / alpha - 1.0) * f[1]
    den = k.density + j.density * zeta ** (2.0 / alpha) + 2.0 * tau / (alpha - 2.0) * g
    return k.density / (ul_assoc_probability(tier, cfg) * den)


def _cor7(cfg, tier, tau):
    alpha = cfg.tier(tier).alpha
    f = float(_e_terms(0, alpha, tau)[0])
    return 1.0 / (1.0 + 2.0 * tau / (alpha - 2.0) * f)


_EVAL = {1: _cor1, 2: _cor2, 3: _cor3, 4: _cor4, 5: _cor5, 6: _cor6, 7: _cor7}


def corollary_coverage(cid: int, cfg: NetworkConfig, tau: float, tier="macro") -> float:
    """Coverage of ``tier`` at linear threshold ``tau`` from special case ``cid``.

    Raises ContractError naming the first hypothesis ``cfg`` violates.
    Case 4 returns the common value of tier and network coverage.
    """
    tier = Tier.parse(tier)
    if cid not in _EVAL:
        raise DomainError(f"special case id must be 1..7, got {cid}")
    if not (tau > 0 and math.isfinite(tau)):
        raise DomainError("threshold must be positive and finite")
    _check(cid, cfg, tier)
    return float(_EVAL[cid](cfg, tier, float(tau)))


__all__ = ["COROLLARY_MODE", "corollary_coverage"]
