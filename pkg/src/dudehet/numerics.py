"""Special functions, adaptive quadrature and Faa di Bruno differentiation.

Everything here is pure numpy/scipy and reentrant.  The analytic engine
uses three building blocks:

* ``hyp2f1`` / ``hyp2f1_scaled`` -- Gauss hypergeometric function for real
  non-positive arguments.  Uses the Pfaff transformation or the 1/(1-z)
  connection formula, depending on |z|.
* ``integrate`` / ``integrate_batch`` -- adaptive Gauss-Kronrod (7/15)
  quadrature.  ``integrate_batch`` runs many independent integrals in
  lock-step so that integrand evaluations stay vectorised.
* ``partitions`` / ``faa_di_bruno_exp`` -- n-th derivative of exp(f) from
  the derivatives of f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.special
from numba import njit

from .errors import ContractError, DomainError, HypergeometricError, IntegrationError

__all__ = [
    "QuadratureSpec",
    "Partition",
    "N_MAX",
    "hyp2f1",
    "hyp2f1_scaled",
    "integrate",
    "integrate_batch",
    "partitions",
    "faa_di_bruno_exp",
    "faa_di_bruno_coefficients",
]

# ---------------------------------------------------------------------------
# Gauss hypergeometric function
# ---------------------------------------------------------------------------

_EPS = 2.0 ** -54
# |z| above which the connection formula replaces the Pfaff transform.  At
# z = -2 the Pfaff argument is 2/3 and the connection argument is 1/3, so
# both series need well under 150 terms.
_CONNECTION_THRESHOLD = 2.0


def _is_nonpositive_int(x):
    return x <= 0 and float(x).is_integer()


def _log_gamma_ratio(num, den):
    """log|prod Gamma(num)/prod Gamma(den)| and its sign.

    Returns ``(None, 0)`` when a denominator argument sits on a pole, so the
    ratio is exactly zero.  Numerator arguments must not be poles.
    """
    logv, sign = 0.0, 1
    for x in den:
        if _is_nonpositive_int(x):
            return None, 0
        logv -= math.lgamma(x)
        if x < 0 and math.floor(x) % 2 == 1:
            sign = -sign
    for x in num:
        logv += math.lgamma(x)
        if x < 0 and math.floor(x) % 2 == 1:
            sign = -sign
    return logv, sign


@njit(cache=True)
def _series_kernel(a, b, c, xs, max_terms, eps):
    n_mono = max(abs(a), abs(b), abs(c)) + 1.0
    tot = np.ones(xs.size)
    conv = np.zeros(xs.size, dtype=np.bool_)
    for i in range(xs.size):
        x = xs[i]
        s = 1.0
        t = 1.0
        for n in range(max_terms):
            ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0))
            t *= ratio * x
            s += t
            if ratio == 0.0 or t == 0.0:
                conv[i] = True
                break
            # Beyond n_mono the term ratio is monotone in n, so the tail is
            # bounded by a geometric series with ratio max(r_next, 1) * |x|.
            if n + 1 > n_mono:
                r_next = max(abs((a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2.0))), 1.0)
                r = min(r_next * abs(x), 0.999999)
                if abs(t) * r / (1.0 - r) <= eps * abs(s):
                    conv[i] = True
                    break
        tot[i] = s
    return tot, conv


def _series(a, b, c, x, max_terms):
    """Sum of the Gauss series at 0 <= |x| < 1, vectorised over ``x``.

    Returns ``(sum, converged_mask)``.
    """
    x = np.asarray(x, dtype=float)
    tot, conv = _series_kernel(float(a), float(b), float(c), np.ascontiguousarray(x.ravel()), int(max_terms), _EPS)
    return tot.reshape(x.shape), conv.reshape(x.shape)


def _rgamma_psi(x):
    """(1/Gamma(x), psi(x)/Gamma(x)), continuous at the poles x = -n."""
    if _is_nonpositive_int(x):
        n = int(-x)
        return 0.0, (-1.0) ** (n + 1) * math.factorial(n)
    r = float(scipy.special.rgamma(x))
    return r, float(scipy.special.digamma(x)) * r


def _log_connection(a, m, c, z, p, max_terms):
    """(-z)^p 2F1(a, a+m; c; z) for z < -1 and integer m >= 0.

    Large-|z| expansion with logarithmic terms (the limit of the connection
    formula as b - a tends to an integer).  With u = -z:

        2F1 / Gamma(c) = u^-a / Gamma(a+m) sum_{k<m} (a)_k (m-k-1)! / (k! Gamma(c-a-k)) z^-k
                       + u^-a / Gamma(a) sum_k (a+m)_k / (k! (k+m)!) (-1)^k z^-(k+m)
                           * [ln u + psi(1+m+k) + psi(1+k) - psi(a+m+k) - psi(c-a-m-k)] / Gamma(c-a-m-k)
    """
    u = -np.asarray(z, dtype=float)
    logu = np.log(u)
    total = np.zeros_like(u)
    poch = 1.0  # (a)_k
    for k in range(m):
        rg, _ = _rgamma_psi(c - a - k)
        total += (poch * math.factorial(m - k - 1) / math.factorial(k) * rg
                  * float(scipy.special.rgamma(a + m)) * (-1.0 / u) ** k)
        poch *= a + k
    inv_ga = float(scipy.special.rgamma(a))
    sgn_m = (-1.0) ** m
    poch = 1.0  # (a+m)_k
    log_fact = math.lgamma(m + 1.0)  # log(k! (k+m)!)
    for k in range(max_terms):
        rg, rpsi = _rgamma_psi(c - a - m - k)
        psis = float(scipy.special.digamma(1.0 + m + k) + scipy.special.digamma(1.0 + k)
                     - scipy.special.digamma(a + m + k))
        # (-1)^k z^-(k+m) = (-1)^m u^-(k+m)
        term = sgn_m * poch * math.exp(-log_fact) * inv_ga * ((logu + psis) * rg - rpsi) * np.exp(-(k + m) * logu)
        total += term
        if k > m + abs(a) + abs(c) + 2 and np.all(np.abs(term) <= _EPS * np.abs(total)):
            break
        poch *= a + m + k
        log_fact += math.log(k + 1.0) + math.log(k + m + 1.0)
    else:
        raise HypergeometricError(a, a + m, c, float(np.min(z)), "logarithmic connection series did not converge")
    scale = float(scipy.special.gammasgn(c)) * np.exp(math.lgamma(c) + (p - a) * logu)
    return scale * total


def _hyp2f1_log_pieces(a, b, c, z, p, max_terms):
    """(-z)^p 2F1(a,b;c;z) for z <= 0 (p = 0 means no scaling).

    Returns the value array.  ``p`` lets callers fold a large power of |z|
    into the prefactors, which keeps products like |z|^k 2F1 finite where
    the two factors would separately over/underflow.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    with np.errstate(divide="ignore"):
        logmz = np.log(-z) if p else np.zeros_like(z)

    zero = z == 0.0
    mid = (~zero) & (z >= -_CONNECTION_THRESHOLD)
    far = z < -_CONNECTION_THRESHOLD

    if np.any(zero):
        out[zero] = 1.0 if p == 0 else 0.0

    if np.any(mid):
        zm = z[mid]
        w = zm / (zm - 1.0)
        s, ok = _series(a, c - b, c, w, max_terms)
        if not np.all(ok):
            bad = zm[~ok][0]
            raise HypergeometricError(a, b, c, float(bad), "Pfaff series did not converge")
        out[mid] = s * np.exp(p * logmz[mid] - a * np.log1p(-zm))

    if np.any(far):
        zf = z[far]
        if _is_nonpositive_int(a) or _is_nonpositive_int(b):
            # A polynomial: Pfaff on the non-positive integer parameter terminates.
            n_par, o_par = (a, b) if _is_nonpositive_int(a) else (b, a)
            w = zf / (zf - 1.0)
            s, _ = _series(n_par, c - o_par, c, w, max_terms)
            out[far] = s * np.exp(p * logmz[far] - n_par * np.log1p(-zf))
            return out
        if float(b - a).is_integer():
            # The connection coefficients have poles; use the logarithmic form.
            lo, hi = (a, b) if b >= a else (b, a)
            out[far] = _log_connection(lo, int(round(hi - lo)), c, zf, p, max_terms)
            return out
        l1, s1 = _log_gamma_ratio((c, b - a), (b, c - a))
        l2, s2 = _log_gamma_ratio((c, a - b), (a, c - b))
        v = 1.0 / (1.0 - zf)
        log1mz = np.log1p(-zf)
        val = np.zeros_like(zf)
        if s1:
            t1, ok1 = _series(a, c - b, a - b + 1.0, v, max_terms)
            if not np.all(ok1):
                raise HypergeometricError(a, b, c, float(zf[~ok1][0]), "connection series did not converge")
            val += s1 * t1 * np.exp(l1 + p * logmz[far] - a * log1mz)
        if s2:
            t2, ok2 = _series(b, c - a, b - a + 1.0, v, max_terms)
            if not np.all(ok2):
                raise HypergeometricError(a, b, c, float(zf[~ok2][0]), "connection series did not converge")
            val += s2 * t2 * np.exp(l2 + p * logmz[far] - b * log1mz)
        out[far] = val
    return out


def _check_params(a, b, c, z):
    if _is_nonpositive_int(c):
        raise DomainError(f"2F1 undefined for c = {c} (non-positive integer)")
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z > 0):
        raise DomainError("hyp2f1 is implemented for finite z <= 0 only")
    return z


def hyp2f1(a: float, b: float, c: float, z, max_terms: int = 5000):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z <= 0.

    ``z`` may be a scalar or an array; ``a, b, c`` are scalars.

    Strategy (all series have positive argument below one):

    * -2 <= z < 0: Pfaff transform to w = z/(z-1) in (0, 2/3].  The direct
      series is not used on the negative axis because it cancels badly for
      large a, b.
    * z < -2: the 1/(1-z) connection formula (two series with argument
      1/(1-z) < 1/3).  When b - a is an integer its coefficients are
      singular and the logarithmic limit of the formula (a series in 1/z)
      is summed instead.  Polynomial cases (a or b a non-positive
      integer) use the terminating Pfaff series.

    Raises ``HypergeometricError`` when a series fails to converge.
    """
    z = _check_params(a, b, c, z)
    out = _hyp2f1_log_pieces(float(a), float(b), float(c), z, 0, max_terms)
    return float(out) if out.ndim == 0 else out


def hyp2f1_scaled(a: float, b: float, c: float, z, p: float, max_terms: int = 5000):
    """(-z)^p * 2F1(a, b; c; z) for z <= 0, evaluated without overflow.

    For large |z|, 2F1 decays like |z|^-min(a,b).  The power is merged into
    the connection-formula prefactors in log space, so e.g. |z|^k 2F1(k+1,
    ...) stays finite even at |z| = 1e40.
    """
    z = _check_params(a, b, c, z)
    out = _hyp2f1_log_pieces(float(a), float(b), float(c), z, float(p), max_terms)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
# 15 nodes on [-1, 1] and matching Kronrod / Gauss weights.
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[9, 11, 13]] = _WG[2::-1]

_TRANSFORMS = ("rational", "exponential")


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy targets for ``integrate``.

    ``transform`` picks the change of variables for [a, inf):
    ``"rational"`` uses x = a + t/(1-t) and ``"exponential"`` uses
    x = a - log(1-t).  Both map t in [0, 1).
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 2000
    transform: str = "rational"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")
        if self.transform not in _TRANSFORMS:
            raise DomainError(f"unknown transform {self.transform!r}; choose from {_TRANSFORMS}")


DEFAULT_QUAD = QuadratureSpec()


def _map_nodes(lo, hi, inf_mask, base, transform):
    """Physical nodes and Jacobian-weighted scale for panels [lo, hi].

    ``lo, hi`` are in the integration variable (t for infinite panels).
    Returns (x, jac) of shape (npanels, 15).
    """
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = mid[:, None] + half[:, None] * _NODES[None, :]
    jac = np.broadcast_to(half[:, None], t.shape).copy()
    x = t.copy()
    if np.any(inf_mask):
        ti = t[inf_mask]
        b = base[inf_mask][:, None]
        if transform == "rational":
            x[inf_mask] = b + ti / (1.0 - ti)
            jac[inf_mask] *= 1.0 / (1.0 - ti) ** 2
        else:
            x[inf_mask] = b - np.log1p(-ti)
            jac[inf_mask] *= 1.0 / (1.0 - ti)
    return x, jac


def integrate_batch(
    f: Callable,
    lower,
    upper,
    spec: QuadratureSpec = DEFAULT_QUAD,
    breakpoints=None,
    raise_on_failure: bool = True,
):
    """Run ``m`` independent adaptive integrals in lock-step.

    Parameters
    ----------
    f : callable ``f(x, owner)``
        ``x`` is a flat array of nodes and ``owner`` the index (0..m-1) of
        the integral each node belongs to.  Returns an array of shape
        ``(len(x),)`` or ``(r, len(x))`` for an r-component integrand.
    lower, upper : array_like, shape (m,)
        Finite lower limits; upper limits may be ``inf``.
    breakpoints : array_like, shape (m, p), optional
        Interior points where the integrand is not smooth.  NaN entries and
        points outside (lower, upper) are ignored.  Only used on finite
        intervals.

    Returns
    -------
    values, errors : arrays of shape (m,) or (r, m)
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), lower.shape).copy()
    m = lower.size
    if np.any(~np.isfinite(lower)):
        raise DomainError("lower limits must be finite")
    if np.any(upper < lower):
        raise DomainError("upper limit below lower limit")
    inf_owner = np.isinf(upper)

    # Initial panels: one per owner (t in [0,1) for infinite owners), split at
    # breakpoints where given.
    lo_list, hi_list, own_list = [], [], []
    bps = None
    if breakpoints is not None:
        bps = np.asarray(breakpoints, dtype=float).reshape(m, -1)
    for i in range(m):
        if inf_owner[i]:
            edges = [0.0, 1.0]
        else:
            edges = [lower[i], upper[i]]
            if bps is not None:
                inner = [p for p in bps[i] if np.isfinite(p) and lower[i] < p < upper[i]]
                edges = [lower[i]] + sorted(inner) + [upper[i]]
        for k in range(len(edges) - 1):
            lo_list.append(edges[k])
            hi_list.append(edges[k + 1])
            own_list.append(i)
    p_lo = np.array(lo_list)
    p_hi = np.array(hi_list)
    p_own = np.array(own_list, dtype=np.intp)
    owner_width = np.where(inf_owner, 1.0, upper - lower)
    owner_width = np.where(owner_width > 0, owner_width, 1.0)

    def evaluate(lo, hi, own):
        x, jac = _map_nodes(lo, hi, inf_owner[own], lower[own], spec.transform)
        npan = lo.size
        if npan == 0:
            return np.zeros((ncomp, 0)), np.zeros((ncomp, 0))
        vals = np.asarray(f(x.ravel(), np.repeat(own, 15)), dtype=float)
        vals = vals.reshape(-1, npan, 15) * jac[None]
        if not np.all(np.isfinite(vals)):
            raise IntegrationError("integrand returned non-finite values", np.nan, np.inf)
        k = vals @ _KW
        g = vals @ _GW
        return k, np.abs(k - g)

    # Probe the number of components with the first evaluation.
    ncomp = 1
    x0, _ = _map_nodes(p_lo[:1], p_hi[:1], inf_owner[p_own[:1]], lower[p_own[:1]], spec.transform)
    probe = np.asarray(f(x0.ravel(), np.repeat(p_own[:1], 15)), dtype=float)
    scalar_out = probe.ndim == 1
    ncomp = 1 if scalar_out else probe.shape[0]

    p_val, p_err = evaluate(p_lo, p_hi, p_own)
    n_sub = np.zeros(m, dtype=np.intp)
    done = np.zeros(m, dtype=bool)
    while True:
        tot = np.zeros((ncomp, m))
        err = np.zeros((ncomp, m))
        for c in range(ncomp):
            tot[c] = np.bincount(p_own, weights=p_val[c], minlength=m)
            err[c] = np.bincount(p_own, weights=p_err[c], minlength=m)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(tot))
        done = np.all(err <= tol, axis=0)
        over = ~done & (n_sub >= spec.max_subdivisions)
        if np.all(done | over):
            break
        # Split every panel of an unfinished owner whose error exceeds its
        # width share of the tolerance; always split the worst panel.
        share = (p_hi - p_lo) / owner_width[p_own]
        excess = np.any(p_err > tol[:, p_own] * share[None, :], axis=0)
        live = ~(done | over)[p_own]
        worst = np.zeros(p_lo.size, dtype=bool)
        score = np.max(p_err / tol[:, p_own], axis=0)
        order = np.lexsort((-score, p_own))
        first = np.ones(order.size, dtype=bool)
        first[1:] = p_own[order][1:] != p_own[order][:-1]
        worst[order[first]] = True
        split = live & (excess | worst)
        idx = np.nonzero(split)[0]
        keep = np.nonzero(~split)[0]
        mid = 0.5 * (p_lo[idx] + p_hi[idx])
        n_lo = np.concatenate([p_lo[idx], mid])
        n_hi = np.concatenate([mid, p_hi[idx]])
        n_own = np.concatenate([p_own[idx], p_own[idx]])
        n_val, n_err = evaluate(n_lo, n_hi, n_own)
        n_sub += np.bincount(p_own[idx], minlength=m)
        p_lo = np.concatenate([p_lo[keep], n_lo])
        p_hi = np.concatenate([p_hi[keep], n_hi])
        p_own = np.concatenate([p_own[keep], n_own])
        p_val = np.concatenate([p_val[:, keep], n_val], axis=1)
        p_err = np.concatenate([p_err[:, keep], n_err], axis=1)

    if raise_on_failure and not np.all(done):
        bad = int(np.nonzero(~done)[0][0])
        est = tot[:, bad] if not scalar_out else tot[0, bad]
        er = err[:, bad] if not scalar_out else err[0, bad]
        raise IntegrationError(
            f"tolerance not met after {spec.max_subdivisions} subdivisions (integral {bad})", est, er
        )
    if scalar_out:
        return tot[0], err[0]
    return tot, err


def integrate(f: Callable, a: float, b: float = np.inf, spec: QuadratureSpec = DEFAULT_QUAD, points=None):
    """Adaptive Gauss-Kronrod integral of a vectorised ``f`` over [a, b].

    ``b`` may be ``inf``; see ``QuadratureSpec.transform``.  ``f`` maps an
    array of nodes to an array of values (or to shape (r, n) for a vector
    integrand).  Returns ``(value, error_estimate)``.

    The error estimate is the raw |K15 - G7| difference summed over panels.
    That is pessimistic for smooth integrands, which is intentional.
    """
    bp = None if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    val, err = integrate_batch(lambda x, own: f(x), [a], [b], spec, breakpoints=bp)
    if val.ndim == 1:
        return float(val[0]), float(err[0])
    return val[:, 0], err[:, 0]


# ---------------------------------------------------------------------------
# Partitions and Faa di Bruno
# ---------------------------------------------------------------------------

N_MAX = 32  # largest derivative order supported (p(32) = 8349 partitions)


@dataclass(frozen=True)
class Partition:
    """Multiplicities (b_1, ..., b_n) with sum_j j*b_j = n."""

    multiplicities: tuple
    order: int = field(init=False)
    parts: int = field(init=False)

    def __post_init__(self):
        b = tuple(int(v) for v in self.multiplicities)
        if any(v < 0 for v in b):
            raise DomainError("multiplicities must be non-negative")
        object.__setattr__(self, "multiplicities", b)
        object.__setattr__(self, "order", len(b))
        object.__setattr__(self, "parts", sum(b))
        if sum((j + 1) * v for j, v in enumerate(b)) != len(b):
            raise DomainError(f"{b} is not a partition of {len(b)}")

    def __iter__(self):
        return iter(self.multiplicities)

    def __eq__(self, other):
        if isinstance(other, tuple):
            return self.multiplicities == other
        if isinstance(other, Partition):
            return self.multiplicities == other.multiplicities
        return NotImplemented

    def __hash__(self):
        return hash(self.multiplicities)


def _gen_partitions(remaining, largest):
    """Yield dicts {part_size: count} of partitions of ``remaining``."""
    if remaining == 0:
        yield {}
        return
    for size in range(min(remaining, largest), 0, -1):
        for count in range(remaining // size, 0, -1):
            rest = remaining - size * count
            for tail in _gen_partitions(rest, size - 1):
                d = dict(tail)
                d[size] = count
                yield d


@lru_cache(maxsize=None)
def _partitions_cached(n):
    out = []
    for d in _gen_partitions(n, n):
        out.append(tuple(d.get(j, 0) for j in range(1, n + 1)))
    # Sort on (b_n, ..., b_1), smallest first: (n,0,..,0) leads and the
    # single-block partition (0,..,0,1) closes the list.
    out.sort(key=lambda b: b[::-1])
    return tuple(Partition(b) for b in out)


def partitions(n: int) -> list:
    """All solutions of b_1 + 2 b_2 + ... + n b_n = n, in a fixed order.

    Ordering is lexicographic in the reversed tuple (b_n, ..., b_1), so for
    n = 4 the list is (4,0,0,0), (2,1,0,0), (0,2,0,0), (1,0,1,0), (0,0,0,1).
    """
    if not isinstance(n, (int, np.integer)) or n < 1 or n > N_MAX:
        raise DomainError(f"partition order must be in 1..{N_MAX}, got {n}")
    return list(_partitions_cached(int(n)))


@lru_cache(maxsize=None)
def faa_di_bruno_coefficients(n: int):
    """[(coef, multiplicities)] with coef = n!/prod(b_j! (j!)^b_j).

    Exact integer arithmetic up to n = 12, log-gamma above.
    """
    out = []
    for part in partitions(n):
        b = part.multiplicities
        if n <= 12:
            den = 1
            for j, bj in enumerate(b, start=1):
                den *= math.factorial(bj) * math.factorial(j) ** bj
            coef = float(math.factorial(n) // den)
        else:
            lg = math.lgamma(n + 1.0)
            for j, bj in enumerate(b, start=1):
                lg -= math.lgamma(bj + 1.0) + bj * math.lgamma(j + 1.0)
            coef = math.exp(lg)
        out.append((coef, b))
    return tuple(out)


def _bell_sum(n, derivs):
    """sum over partitions of coef * prod f^(j)^b_j (no exp factor)."""
    if n == 0:
        return np.ones_like(np.asarray(derivs[0], dtype=float))
    powers = {}
    total = 0.0
    for coef, b in faa_di_bruno_coefficients(n):
        term = coef
        for j, bj in enumerate(b, start=1):
            if bj:
                key = (j, bj)
                if key not in powers:
                    powers[key] = derivs[j] ** bj
                term = term * powers[key]
        total = total + term
    return total


def faa_di_bruno_exp(n: int, f_derivs: Sequence):
    """n-th derivative of exp(f(s)) given [f(s), f'(s), ..., f^(n)(s)].

    Entries may be numpy arrays (broadcast elementwise).  The formula is
    homogeneous: if f^(j) is replaced by s^j f^(j) the result is
    s^n d^n/ds^n exp(f), which the coverage code uses to avoid overflow.
    """
    if n < 0 or len(f_derivs) != n + 1:
        raise ContractError(f"need {n + 1} derivative values for order {n}, got {len(f_derivs)}")
    if n > N_MAX:
        raise DomainError(f"order {n} exceeds N_MAX = {N_MAX}")
    derivs = [np.asarray(v, dtype=float) for v in f_derivs]
    if not np.all(np.isfinite(derivs[0])):
        raise ContractError("f(s) must be finite")
    val = np.exp(derivs[0]) * _bell_sum(n, derivs)
    return float(val) if np.ndim(val) == 0 else val
