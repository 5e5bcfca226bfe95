"""Independent reference implementations shared by the test modules.

Everything here is built from scipy QUADPACK and plain numpy, without the
package's own quadrature or hypergeometric code.
"""
import math

import numpy as np
import scipy.integrate as spi

from dudehet.analytic import LimitMode
from dudehet.model import Tier, resolve_law


def serving_pdf_oracle(cfg, tier):
    """Serving-distance density of a UL tier-``tier`` UE, normalised by quadrature."""
    law = resolve_law(cfg)
    k, j = cfg.tier(tier), cfg.tier(tier.other)
    c = j.density * law.zeta[tier] ** (2 / j.alpha)
    beta = 2 * k.alpha / j.alpha
    raw = lambda y: 2 * math.pi * k.density * y * math.exp(-math.pi * (k.density * y * y + c * y ** beta))
    mass, _ = spi.quad(raw, 0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=400)
    return lambda y: raw(y) / mass


def laplace_exponent_oracle(cfg, tier, x, s, mode):
    """Laplace exponent f(s) = log E exp(-s I) by nested QUADPACK integrals.

    Only the DISPLAYED and TRUNCATED interferer limits are implemented.
    """
    tier = Tier.parse(tier)
    law = resolve_law(cfg)
    a = cfg.tier(tier).alpha
    zeta = law.zeta[tier]
    total = 0.0
    for t in (tier, tier.other):
        lam, a_t = cfg.tier(t).density, cfg.tier(t).alpha
        pdf = serving_pdf_oracle(cfg, t)
        a_j = cfg.tier(tier.other).alpha

        def u0(y):
            if t is tier:
                own, excl = y, x
            else:
                own, excl = (y ** a_t / zeta) ** (1 / a), (zeta * x ** a) ** (1 / a_j)
            return own if mode is LimitMode.DISPLAYED else max(own, excl)

        def inner(y):
            q = s * y ** (a_t * cfg.eta)
            val, _ = spi.quad(lambda u: q * u ** -a / (1 + q * u ** -a) * u, u0(y), np.inf,
                              epsabs=1e-15, epsrel=1e-12, limit=200)
            return pdf(y) * val

        bps = None
        if mode is LimitMode.TRUNCATED:
            bps = [x] if t is tier else [zeta ** ((a_j + a) / a_j ** 2) * x ** (a * a / a_j ** 2)]
        val, _ = spi.quad(inner, 0, 6.0 / math.sqrt(lam), epsabs=1e-14, epsrel=1e-11, limit=300, points=bps)
        total += lam * val
    return -2 * math.pi * total


def fd_weights(n, p):
    """Central finite-difference weights for the n-th derivative on 2p+1 points."""
    offs = np.arange(-p, p + 1, dtype=float)
    A = np.vander(offs, increasing=True).T
    rhs = np.zeros(2 * p + 1)
    rhs[n] = math.factorial(n)
    return offs, np.linalg.solve(A, rhs)
