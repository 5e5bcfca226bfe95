"""Monte Carlo engine: point processes, scheduling, SIR and reproducibility."""
import math

import numpy as np
import pytest
import scipy.integrate as spi
import scipy.stats as sst

from dudehet.analytic import serving_distance_pdf
from dudehet.errors import DomainError
from dudehet.model import AssociationCase, Tier, config_from_mapping
from dudehet.simulator import Realization, estimate, realize, run_drop, simulate, wilson

SMALL = dict(lambda_m=1.0, lambda_f=4.0, n_m=2, n_f=1, alpha_m=4.0, alpha_f=4.0, eta=0.5, lambda_u=200.0)


def small_cfg(**kw):
    return config_from_mapping(dict(SMALL, **kw))


def _philox(*key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


# -- point processes --------------------------------------------------------

def test_bs_counts_are_poisson():
    cfg = small_cfg()
    L = 2.0
    counts = np.array([[r.macro.shape[0], r.femto.shape[0]]
                       for r in (realize(cfg, L, seed=1, drop=d) for d in range(600))])
    area = (2 * L) ** 2
    for k, lam in enumerate((1.0, 4.0)):
        mu = lam * area
        assert abs(counts[:, k].mean() - mu) < 4 * math.sqrt(mu / counts.shape[0])
        assert counts[:, k].var(ddof=1) == pytest.approx(mu, rel=0.2)


def test_bs_points_are_uniform_in_window():
    cfg = small_cfg()
    r = realize(cfg, 5.0, seed=2, drop=0)
    for pts in (r.macro, r.femto):
        assert np.all(np.abs(pts) <= 5.0)
        assert sst.kstest(pts[:, 0], sst.uniform(-5.0, 10.0).cdf).pvalue > 1e-3


def test_nearest_bs_distance_is_rayleigh():
    # pi lam d^2 ~ Exp(1) for the nearest point of a planar PPP.
    cfg = small_cfg()
    d = []
    for drop in range(2000):
        r = realize(cfg, 3.0, seed=3, drop=drop)
        d.append(np.min(np.hypot(r.macro[:, 0], r.macro[:, 1])))
    assert sst.kstest(math.pi * 1.0 * np.square(d), "expon").pvalue > 1e-3


def test_window_must_be_positive():
    with pytest.raises(DomainError):
        realize(small_cfg(), 0.0)


# -- one hand-built drop ------------------------------------------------------

def test_two_bs_drop_matches_hand_computed_sir():
    cfg = small_cfg()
    # Macro BS at (2, 0) serves the typical UE (and one more UE at (-1, 0));
    # femto BS at (5, 0) serves the UE at (6.5, 0).
    r = Realization(10.0, np.array([[2.0, 0.0]]), np.array([[5.0, 0.0]]),
                    np.array([[6.5, 0.0], [-1.0, 0.0]]), cfg.ue_density, seed=9, drop=4)
    res = run_drop(r, cfg)
    rng = _philox(9, 4, 1)
    g_sig = rng.gamma(2, 1.0)
    g_int = rng.standard_exponential(2)
    a, eta = 4.0, 0.5
    expected = g_sig * 2.0 ** (a * (eta - 1)) / (g_int[1] * 1.5 ** (a * eta) * 4.5 ** -a)
    assert res.tier is Tier.MACRO
    assert res.case is AssociationCase.MACRO_BOTH
    assert res.serving_distance == pytest.approx(2.0)
    assert res.load == 2
    assert res.sir == pytest.approx(expected, rel=1e-12)
    assert res.rate == pytest.approx(cfg.bandwidth / 2 * math.log2(1 + expected), rel=1e-12)


def test_lonely_tagged_bs_sees_no_interference():
    cfg = small_cfg()
    r = Realization(10.0, np.array([[1.0, 0.0]]), np.array([[8.0, 8.0]]), np.zeros((0, 2)), cfg.ue_density, 0, 0)
    res = run_drop(r, cfg)
    assert math.isinf(res.sir) and res.load == 1


# -- sampler equivalences -----------------------------------------------------

def test_layered_scheduler_matches_full_ue_population():
    cfg = small_cfg()
    fast = simulate(cfg, 1500, seed=5, window=2.0)
    full = simulate(cfg, 1500, seed=6, window=2.0, full_ues=True)
    assert sst.ks_2samp(np.log(fast["sir"]), np.log(full["sir"])).pvalue > 1e-3
    assert sst.ks_2samp(fast["load"], full["load"]).pvalue > 1e-3
    assert fast["load"].mean() == pytest.approx(full["load"].mean(), rel=0.1)


def test_vector_channels_match_gamma_exponential_fading():
    cfg = small_cfg(n_m=4)
    d1 = simulate(cfg, 2000, seed=7, window=2.0, fading="distribution")
    d2 = simulate(cfg, 2000, seed=8, window=2.0, fading="vector")
    assert sst.ks_2samp(np.log(d1["sir"]), np.log(d2["sir"])).pvalue > 1e-3


def test_unknown_fading_mode():
    with pytest.raises(DomainError):
        simulate(small_cfg(), 1, fading="rician")


def test_serving_distance_follows_analytic_density():
    cfg = small_cfg()
    d = simulate(cfg, 3000, seed=10, window=2.5)
    for k, tier in enumerate(Tier):
        x = np.sort(d["x"][d["tier"] == k])
        pdf = serving_distance_pdf(tier, cfg)
        cdf = lambda v: spi.quad(pdf, 0.0, v, epsabs=1e-12)[0]
        assert sst.kstest(x, np.vectorize(cdf)).pvalue > 1e-3


def test_coupled_access_never_splits_links():
    cfg = small_cfg(mode="no-dude", bias_db=6.0)
    d = simulate(cfg, 1500, seed=11, window=2.0)
    assert not np.any(d["case"] == int(AssociationCase.MACRO_DL_FEMTO_UL))
    assert not np.any(d["case"] == 3)


# -- reproducibility ------------------------------------------------------------

def test_same_seed_same_drops():
    cfg = small_cfg()
    a = simulate(cfg, 40, seed=12, window=2.0)
    b = simulate(cfg, 40, seed=12, window=2.0)
    for k in a:
        assert np.array_equal(a[k], b[k])
    c = simulate(cfg, 40, seed=13, window=2.0)
    assert not np.array_equal(a["sir"], c["sir"])


def test_drops_do_not_depend_on_batching():
    cfg = small_cfg()
    whole = simulate(cfg, 30, seed=14, window=2.0)
    head = simulate(cfg, 12, seed=14, window=2.0)
    tail = simulate(cfg, 18, seed=14, window=2.0, first_drop=12)
    for k in whole:
        assert np.array_equal(whole[k], np.concatenate([head[k], tail[k]]))


def test_estimate_is_identical_for_any_worker_count():
    cfg = small_cfg()
    e1 = estimate(cfg, [-5.0, 0.0, 5.0], 600, seed=15, window=2.0, workers=1, block=150)
    e2 = estimate(cfg, [-5.0, 0.0, 5.0], 600, seed=15, window=2.0, workers=2, block=150)
    assert e1.coverage == e2.coverage
    assert np.array_equal(e1.counts.sir_hits, e2.counts.sir_hits)
    assert e1.case_frequencies == e2.case_frequencies


def test_estimate_rejects_zero_drops():
    with pytest.raises(DomainError):
        estimate(small_cfg(), [0.0], 0)


# -- statistics ---------------------------------------------------------------

def test_wilson_interval():
    z = sst.norm.ppf(0.975)
    k, n = 37, 120
    p = k / n
    half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    est, hw = wilson(k, n)
    assert est == pytest.approx(p)
    assert hw == pytest.approx(half, rel=1e-9)


def test_coverage_stable_when_window_doubles():
    cfg = small_cfg(eta=0.0)
    e1 = estimate(cfg, [0.0, 10.0], 3000, seed=16, window=2.5)
    e2 = estimate(cfg, [0.0, 10.0], 3000, seed=17, window=5.0)
    for v1, h1, v2, h2 in zip(e1.coverage.values, e1.coverage.half_widths, e2.coverage.values, e2.coverage.half_widths):
        assert abs(v1 - v2) <= math.hypot(h1, h2) + 0.01
