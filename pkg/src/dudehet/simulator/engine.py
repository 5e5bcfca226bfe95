"""Monte Carlo engine: PPP drops, UL association, scheduling and SIR.

Each drop is one snapshot of the network in the square window
[-L, L]^2 with the typical UE at the origin.

* BSs of both tiers are independent PPPs.  A tier that comes out empty is
  redrawn and the retry is recorded.
* Every UE associates in the UL to the BS maximising N B x^-alpha.  Each BS
  schedules one of its UEs uniformly at random; a BS with no UE stays silent.
  The typical UE is the scheduled UE of its own (tagged) BS.
* The tagged BS sees SIR = G X^(a_K (eta-1)) / sum_b g_b y_b^(a_b eta) D_b^-a_K,
  with G ~ Gamma(N_K, 1) (MRC) and g_b ~ Exp(1).  Optionally these are
  drawn from explicit complex Gaussian channel vectors instead.

Scheduled UEs are drawn without materialising all UEs.  A first, thinned
UE layer picks a UE for almost every cell.  For the few cells it misses,
the remaining UE density is sampled inside a disk known to contain the cell.
A uniform point of a cell is the same whichever independent layer supplies
it, so the result has exactly the law of uniform scheduling over the full
UE process.

Randomness is counter-based: drop ``d`` of seed ``s`` draws from a Philox
stream keyed by ``SeedSequence([s, d])``.  Results therefore do not depend
on the order in which drops run, or on how they are split across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from ..analytic.coverage import CoverageCurve
from ..errors import DomainError
from ..model import FEMTO_DL_MACRO_UL, AssociationCase, NetworkConfig, Tier, classify_codes, resolve_law
from . import kernels

DEFAULT_HALF_WIDTH = 10.0  # km; a 20 x 20 km window
FADING_MODES = ("distribution", "vector")
# First-layer UE density as a multiple of the total BS density.
LAYER_FACTOR = 6.0
_MAX_RETRIES = 100


def _stream(seed: int, drop: int, sub: int = 0) -> np.random.Generator:
    key = [int(seed), int(drop)] if sub == 0 else [int(seed), int(drop), int(sub)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


@dataclass(frozen=True)
class Realization:
    """BS and UE point sets of one drop.

    ``ue`` holds the complete UE process when ``ue_density == cfg.ue_density``
    and a thinned first layer of density ``ue_density`` otherwise.
    """

    half_width: float
    macro: np.ndarray
    femto: np.ndarray
    ue: np.ndarray
    ue_density: float
    seed: int
    drop: int
    retries: int = 0

    @property
    def stream(self):
        return (self.seed, self.drop)


@dataclass(frozen=True)
class DropResult:
    """Tagged-link outcome of one drop.

    ``case`` is an AssociationCase, or the integer 3 for the femto-DL /
    macro-UL state (possible only when B_F/B_M < P_F/P_M).
    """

    case: object
    tier: Tier
    serving_distance: float
    sir: float
    load: int
    rate: float


def realize(cfg: NetworkConfig, window: float = DEFAULT_HALF_WIDTH, seed: int = 0, drop: int = 0,
            full_ues: bool = False) -> Realization:
    """Draw BS (and UE) positions for one drop.

    ``window`` is the half-width L of the square [-L, L]^2 in km.  With
    ``full_ues`` the whole UE process is drawn; otherwise only the thinned
    first layer used by the fast scheduler.
    """
    if not (window > 0):
        raise DomainError("window half-width must be positive")
    rng = _stream(seed, drop)
    area = (2.0 * window) ** 2
    retries = 0
    pts = []
    for lam in (cfg.macro.density, cfg.femto.density):
        n = rng.poisson(lam * area)
        while n == 0:
            retries += 1
            if retries > _MAX_RETRIES:
                raise DomainError("window too small: a BS tier keeps coming out empty")
            n = rng.poisson(lam * area)
        pts.append(rng.uniform(-window, window, size=(n, 2)))
    lam1 = cfg.ue_density if full_ues else min(cfg.ue_density, LAYER_FACTOR * (cfg.macro.density + cfg.femto.density))
    nu = rng.poisson(lam1 * area)
    ue = rng.uniform(-window, window, size=(nu, 2))
    return Realization(window, pts[0], pts[1], ue, lam1, int(seed), int(drop), retries)


def _fading(rng, n_ant, n_bs, mode):
    if mode == "distribution":
        return rng.gamma(n_ant, 1.0), rng.standard_exponential(n_bs)
    if mode == "vector":
        h0 = (rng.standard_normal(n_ant) + 1j * rng.standard_normal(n_ant)) / math.sqrt(2.0)
        hb = (rng.standard_normal((n_bs, n_ant)) + 1j * rng.standard_normal((n_bs, n_ant))) / math.sqrt(2.0)
        norm = np.linalg.norm(h0)
        w = h0 / norm  # MRC combiner
        return float(norm ** 2), np.abs(hb @ np.conj(w)) ** 2
    raise DomainError(f"unknown fading mode {mode!r}; use one of {FADING_MODES}")


def run_drop(r: Realization, cfg: NetworkConfig, fading: str = "distribution") -> DropResult:
    """Associate, schedule and compute the tagged-link SIR, load and rate."""
    law = resolve_law(cfg)
    rng = _stream(r.seed, r.drop, 1)
    mx, my = np.ascontiguousarray(r.macro[:, 0]), np.ascontiguousarray(r.macro[:, 1])
    fx, fy = np.ascontiguousarray(r.femto[:, 0]), np.ascontiguousarray(r.femto[:, 1])
    im, dm = kernels.nearest_to_origin(mx, my)
    jf, df = kernels.nearest_to_origin(fx, fy)
    code = int(classify_codes(dm, df, law))
    lw_m = math.log(law.ul_weight[Tier.MACRO])
    lw_f = math.log(law.ul_weight[Tier.FEMTO])
    a_m, a_f = cfg.macro.alpha, cfg.femto.alpha
    ul_macro = lw_m - a_m * math.log(dm) >= lw_f - a_f * math.log(df)
    tier = Tier.MACRO if ul_macro else Tier.FEMTO
    tag, x_serv = (im, dm) if ul_macro else (mx.size + jf, df)
    n_bs = mx.size + fx.size
    sig, gains = _fading(rng, cfg.tier(tier).antennas, n_bs, fading)
    layered = r.ue_density < cfg.ue_density
    lam_rest = cfg.ue_density - r.ue_density
    ux, uy = np.ascontiguousarray(r.ue[:, 0]), np.ascontiguousarray(r.ue[:, 1])
    sir, load = kernels.simulate_drop(
        mx, my, fx, fy, ux, uy, layered, lam_rest, int(rng.integers(2 ** 32)), lw_m, lw_f, a_m, a_f,
        cfg.eta, r.half_width, tag, x_serv, sig, gains)
    rate = cfg.bandwidth / load * math.log2(1.0 + sir)
    case = code if code == FEMTO_DL_MACRO_UL else AssociationCase(code)
    return DropResult(case, tier, float(x_serv), float(sir), int(load), float(rate))


def simulate(cfg: NetworkConfig, n_drops: int, seed: int = 0, window: float = DEFAULT_HALF_WIDTH,
             fading: str = "distribution", first_drop: int = 0, full_ues: bool = False) -> dict:
    """Per-drop arrays for drops first_drop .. first_drop + n_drops - 1.

    ``full_ues`` draws every UE explicitly instead of the layered sampler
    (slow; used to cross-check it).
    """
    if n_drops < 1:
        raise DomainError("n_drops must be >= 1")
    out = {k: np.empty(n_drops) for k in ("sir", "rate", "x")}
    out["load"] = np.empty(n_drops, dtype=np.int64)
    out["case"] = np.empty(n_drops, dtype=np.int64)
    out["tier"] = np.empty(n_drops, dtype=np.int64)
    for i in range(n_drops):
        d = first_drop + i
        res = run_drop(realize(cfg, window, seed, d, full_ues), cfg, fading)
        out["sir"][i] = res.sir
        out["rate"][i] = res.rate
        out["x"][i] = res.serving_distance
        out["load"][i] = res.load
        out["case"][i] = int(res.case)
        out["tier"][i] = 0 if res.tier is Tier.MACRO else 1
    return out


@dataclass
class _Counts:
    """Additive sufficient statistics of a block of drops."""

    n: int
    sir_hits: np.ndarray      # (n_thresholds,)
    tier_n: np.ndarray        # (2,)
    tier_hits: np.ndarray     # (2, n_thresholds)
    rate_hits: np.ndarray     # (n_rates,)
    cases: np.ndarray         # (4,)

    def __add__(self, o):
        return _Counts(self.n + o.n, self.sir_hits + o.sir_hits, self.tier_n + o.tier_n,
                       self.tier_hits + o.tier_hits, self.rate_hits + o.rate_hits, self.cases + o.cases)


def _count_block(args):
    cfg, taus, rhos, n, seed, window, fading, first = args
    d = simulate(cfg, n, seed, window, fading, first)
    sir_hits = np.array([(d["sir"] > t).sum() for t in taus], dtype=np.int64)
    tier_n = np.array([(d["tier"] == k).sum() for k in (0, 1)], dtype=np.int64)
    tier_hits = np.array([[((d["tier"] == k) & (d["sir"] > t)).sum() for t in taus] for k in (0, 1)],
                         dtype=np.int64).reshape(2, len(taus))
    rate_hits = np.array([(d["rate"] > p).sum() for p in rhos], dtype=np.int64)
    cases = np.bincount(d["case"], minlength=4).astype(np.int64)
    return _Counts(n, sir_hits, tier_n, tier_hits, rate_hits, cases)


def wilson(k: int, n: int):
    """(estimate, 95% Wilson half-width)."""
    if n == 0:
        return float("nan"), float("nan")
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=0.95, method="wilson")
    return k / n, 0.5 * (ci.high - ci.low)


@dataclass(frozen=True)
class Estimate:
    coverage: CoverageCurve
    tier_coverage: dict
    case_frequencies: dict
    rate: CoverageCurve = None
    n_drops: int = 0
    seed: int = 0
    counts: object = field(default=None, repr=False)


def _curve(th, hits, n, kind="sir"):
    vals, hws = zip(*(wilson(k, n) for k in hits)) if len(th) else ((), ())
    vals = tuple(0.0 if not np.isfinite(v) else v for v in vals)
    hws = tuple(0.0 if not np.isfinite(h) else h for h in hws)
    return CoverageCurve(tuple(th), vals, "monte-carlo", hws, kind)


def estimate(cfg: NetworkConfig, thresholds_db, n_drops: int, seed: int = 0, rate_thresholds=(),
             window: float = DEFAULT_HALF_WIDTH, fading: str = "distribution", workers: int = 1,
             block: int = 2000) -> Estimate:
    """Empirical SIR/rate coverage and association frequencies with Wilson CIs.

    Drops are split into fixed blocks; the counts are summed, so the result
    is bit-identical for any ``workers`` value.
    """
    if n_drops < 1:
        raise DomainError("n_drops must be >= 1")
    th = sorted(float(t) for t in thresholds_db)
    taus = [10.0 ** (t / 10.0) for t in th]
    rhos = sorted(float(p) for p in rate_thresholds)
    jobs = [(cfg, taus, rhos, min(block, n_drops - s), seed, window, fading, s)
            for s in range(0, n_drops, block)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_count_block, jobs))
    else:
        parts = [_count_block(j) for j in jobs]
    tot = parts[0]
    for p in parts[1:]:
        tot = tot + p
    cov = _curve(th, tot.sir_hits, tot.n)
    tier_cov = {t: _curve(th, tot.tier_hits[k], int(tot.tier_n[k])) for k, t in enumerate((Tier.MACRO, Tier.FEMTO))}
    freqs = {AssociationCase(c): tot.cases[c] / tot.n for c in range(3)}
    freqs[FEMTO_DL_MACRO_UL] = tot.cases[3] / tot.n
    rate = _curve(rhos, tot.rate_hits, tot.n, "rate") if rhos else None
    return Estimate(cov, tier_cov, freqs, rate, n_drops, seed, tot)
