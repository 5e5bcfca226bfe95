"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines as they are
produced; they are also repeated in the session summary.
"""
import math
import os
import time

import numpy as np
import pytest

from conftest import record
from dudehet.analytic import (
    COROLLARY_MODE, DEFAULT_MODE, case_probabilities, case_probability, corollary_coverage, coverage_curve,
    laplace_exponent, load_pmf_values, network_sir_coverage, rate_curve, serving_distance_pdf, sir_coverage,
    tier_assoc_probability,
)
from dudehet.experiments import grid_search, validate
from dudehet.model import AssociationCase, Tier, config_from_mapping, resolve_law
from dudehet.numerics import faa_di_bruno_exp
from dudehet.presets import get_preset
from dudehet.simulator import simulate
from oracles import fd_weights, laplace_exponent_oracle

import scipy.integrate as spi

TAUS_DB = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)


def db(x):
    return 10.0 ** (x / 10.0)


def test_criterion_1_association_closed_form():
    t0 = time.perf_counter()
    base = dict(lambda_m=1.0, lambda_f=5.0, n_f=1, alpha_m=4.0, alpha_f=4.0, bias_db=0.0)
    a_m = tier_assoc_probability("macro", config_from_mapping(dict(base, n_m=25)))
    case1 = case_probability(AssociationCase.MACRO_BOTH, config_from_mapping(dict(base, n_m=5)))
    elapsed = time.perf_counter() - t0
    ok = abs(a_m - 0.5) <= 1e-6 and abs(case1 - 0.30) <= 0.01 and elapsed < 1.0
    record(1, ok, f"A_M(N_M=25) = {a_m:.9f}, Case1(N_M=5) = {case1:.6f}, {elapsed:.3f} s")
    assert ok


def test_criterion_2_partition_of_unity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst, branches = 0.0, set()
    for i in range(100):
        reversed_branch = i % 4 == 0
        am = float(rng.uniform(2.5, 5.0))
        af = am if rng.random() < 0.5 else float(rng.uniform(2.5, 5.0))
        cfg = config_from_mapping(dict(
            lambda_m=float(rng.uniform(0.1, 5)), lambda_f=float(rng.uniform(0.1, 40)), n_m=int(rng.integers(1, 33)),
            n_f=int(rng.integers(1, 9)), alpha_m=am, alpha_f=af, eta=float(rng.uniform(0, 1)),
            bias_db=float(rng.uniform(-45, -25) if reversed_branch else rng.uniform(-15, 20))))
        branches.add(resolve_law(cfg).standard_branch)
        worst = max(worst, abs(sum(case_probabilities(cfg).values()) - 1.0))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and branches == {True, False} and elapsed < 30.0
    record(2, ok, f"max |sum - 1| = {worst:.2e} over 100 configs, both branches: {branches == {True, False}}, "
                  f"{elapsed:.1f} s")
    assert ok


def test_criterion_3_single_antenna_anchor():
    base = dict(lambda_m=1.0, lambda_f=3.0, p_m_dbm=30.0, p_f_dbm=30.0, n_m=1, n_f=1, alpha_m=4.0, alpha_f=4.0)
    cfg = config_from_mapping(base)
    dense = config_from_mapping(dict(base, lambda_m=10.0, lambda_f=30.0))
    oracle = 1.0 / (1.0 + 1.0 * math.atan(1.0))  # sqrt(tau) arctan(sqrt(tau)) at tau = 1
    mode = COROLLARY_MODE[7]
    c = sir_coverage("macro", cfg, 1.0, mode)
    c_dense = sir_coverage("macro", dense, 1.0, mode)
    c_closed = corollary_coverage(7, cfg, 1.0)
    ok = abs(c - 0.560099) <= 1e-6 and abs(c - oracle) <= 1e-6 and abs(c_closed - oracle) <= 1e-6
    ok = ok and abs(c_dense - c) <= 1e-6
    record(3, ok, f"coverage {c:.9f} (oracle {oracle:.9f}), x10 density {c_dense:.9f}")
    assert ok


LATTICE = {
    1: dict(n_m=3, n_f=2, alpha_m=3.5, alpha_f=4.0, bias_db=3.0, eta=0.0),
    2: dict(n_m=4, n_f=2, alpha_m=3.0, alpha_f=3.0, bias_db=0.0, eta=1.0),
    3: dict(n_m=2, n_f=1, alpha_m=3.5, alpha_f=3.5, bias_db=10 * math.log10(2.0), eta=0.5),
    4: dict(lambda_f=1.0, p_f_dbm=43.0, n_m=2, n_f=2, alpha_m=3.5, alpha_f=3.5, eta=0.5),
    5: dict(n_m=4, n_f=2, alpha_m=3.5, alpha_f=3.5, bias_db=10 * math.log10(2.0), eta=0.0),
    6: dict(n_m=1, n_f=3, alpha_m=3.5, alpha_f=3.5, bias_db=2.0, eta=0.0),
    7: dict(n_m=1, n_f=1, alpha_m=3.5, alpha_f=3.5, eta=0.0),
}


def test_criterion_4_specialization_lattice():
    worst, count = 0.0, 0
    for cid, kw in LATTICE.items():
        cfg = config_from_mapping(dict(dict(lambda_m=1.0, lambda_f=4.0), **kw))
        tiers = ("macro",) if cid == 6 else ("macro", "femto")
        for tier in tiers:
            for t in (-5.0, 0.0, 5.0, 10.0):
                general = sir_coverage(tier, cfg, db(t), COROLLARY_MODE[cid])
                worst = max(worst, abs(general - corollary_coverage(cid, cfg, db(t), tier)))
                count += 1
    ok = worst <= 1e-6
    record(4, ok, f"max |general - special case| = {worst:.2e} over {count} (case, tier, tau) points")
    assert ok


def test_criterion_5_faa_di_bruno_derivatives():
    cfg = get_preset("fig4a").config()
    x = 0.2
    le = laplace_exponent("macro", cfg, x, DEFAULT_MODE)
    worst = 0.0
    for s in (0.3, 1.0, 3.0):
        f = le.derivs(s, 4)[:, 0]
        h = 0.08 * s
        offs, _ = fd_weights(0, 5)
        laplace = np.exp([laplace_exponent_oracle(cfg, "macro", x, s + o * h, DEFAULT_MODE) for o in offs])
        for n in range(1, 5):
            _, w = fd_weights(n, 5)
            fd = float(np.dot(w, laplace)) / h ** n
            got = float(faa_di_bruno_exp(n, list(f[: n + 1])))
            worst = max(worst, abs(got - fd) / abs(fd))
    ok = worst <= 1e-3
    record(5, ok, f"max relative error of d^n L_I/ds^n (n <= 4, s in 0.3, 1, 3) = {worst:.2e}")
    assert ok


def test_criterion_6_cross_engine_agreement():
    workers = os.cpu_count() or 1
    lines, ok = [], True
    for name in ("fig4a", "fig4b", "fig4c", "fig4d"):
        rep = validate(get_preset(name).config(), TAUS_DB, n_drops=100_000, tolerance=0.05, seed=6, window=5.0,
                       workers=workers)
        worst = max(rep.points, key=lambda p: p.gap - p.ci_halfwidth)
        lines.append(f"{name} {'ok' if rep.passed else 'FAIL'} max gap {rep.max_gap:.4f} "
                     f"(at {worst.tau_db:g} dB, CI {worst.ci_halfwidth:.4f})")
        ok = ok and rep.passed
    record(6, ok, "; ".join(lines))
    assert ok


def test_criterion_7_optimal_bias():
    found = {}
    for name in ("fig10a", "fig10b"):
        p = get_preset(name)
        res = grid_search(p.config(), "bias_db", p.grid, f"sir_coverage@{p.thresholds[0]:g}")
        found[name] = res.best
    ok = found["fig10a"] == 0.0 and found["fig10b"] == 5.0
    record(7, ok, f"argmax bias: fig10a {found['fig10a']:g} dB (expected 0), "
                  f"fig10b {found['fig10b']:g} dB (expected 5), SIR threshold 0 dB")
    assert ok


def test_criterion_8_rate_trends():
    p = get_preset("fig8")
    curves = {v: rate_curve(p.config(**p.variants.get(v, {})), p.grid) for v in ("base", "nm1", "biased")}
    mid = len(p.grid) // 2
    rho = p.grid[mid]
    r20, r1, r20b = (curves[v].values[mid] for v in ("base", "nm1", "biased"))
    fewer_antennas_better = r20 < r1
    bias_helps = r20b > r20
    monotone = all(c.is_monotone() for c in curves.values())
    ok = fewer_antennas_better and bias_helps and monotone
    record(8, ok, f"at rho = {rho:g}: R(N_M=20) = {r20:.4f} vs R(N_M=1) = {r1:.4f} "
                  f"[{'ok' if fewer_antennas_better else 'FAIL'}], R(N_M=20, 16 dB) = {r20b:.4f} "
                  f"[{'ok' if bias_helps else 'FAIL'}], monotone in rho [{'ok' if monotone else 'FAIL'}]")
    assert ok


def _fig5_trends():
    p = get_preset("fig5")
    cov = {eta: [network_sir_coverage(p.config(eta=eta), db(t)) for t in p.thresholds] for eta in (0.0, 0.5, 1.0)}
    centre = cov[0.0][-1] > cov[0.5][-1] > cov[1.0][-1]
    interior = any(cov[0.5][i] > max(cov[0.0][i], cov[1.0][i]) for i in range(len(p.thresholds)))
    return centre and interior, f"fig5 eta trends {'ok' if centre and interior else 'FAIL'}"


def _fig2_fig3_trends():
    ratios = get_preset("fig2").grid
    c1 = [case_probability(AssociationCase.MACRO_BOTH, get_preset("fig2").config(lambda_f=r)) for r in ratios]
    c2 = [case_probability(AssociationCase.MACRO_DL_FEMTO_UL, get_preset("fig2").config(lambda_f=r)) for r in ratios]
    c2b = [case_probability(AssociationCase.MACRO_DL_FEMTO_UL, get_preset("fig3").config(lambda_f=r)) for r in ratios]
    ok = all(np.diff(c1) < 0) and all(b > a for a, b in zip(c2, c2b))
    return ok, f"fig2/fig3 association trends {'ok' if ok else 'FAIL'}"


def test_criterion_9_property_suite():
    checks = []
    # Coverage monotone in tau and inside [0, 1] on the four tau-sweep presets.
    mono = True
    for name in ("fig4a", "fig4b", "fig4c", "fig4d"):
        for tier in (None, "macro", "femto"):
            c = coverage_curve(get_preset(name).config(), TAUS_DB, tier)
            mono = mono and c.is_monotone(1e-12) and all(0.0 <= v <= 1.0 for v in c.values)
    checks.append((mono, "coverage monotone and bounded"))
    # Association probabilities inside [0, 1].
    bounds = all(0.0 <= v <= 1.0 for r in get_preset("fig2").grid
                 for v in case_probabilities(get_preset("fig2").config(lambda_f=r)).values())
    checks.append((bounds, "probability bounds"))
    # Load PMF and serving-distance density normalisation.
    pmf_ok = all(abs(load_pmf_values(c).sum() - 1.0) < 1e-8 for c in (0.0, 0.5, 7.0, 120.0, 2000.0))
    checks.append((pmf_ok, "load PMF normalised"))
    pdf_ok = True
    for name in ("fig4a", "fig4c", "fig10b"):
        for t in Tier:
            pdf = serving_distance_pdf(t, get_preset(name).config())
            pdf_ok = pdf_ok and abs(spi.quad(pdf, 0, np.inf, epsabs=1e-13, limit=400)[0] - 1.0) < 1e-8
    checks.append((pdf_ok, "serving-distance density normalised"))
    # Coupled access: no split links, analytically or in simulation.
    coupled = get_preset("fig5").config(mode="no-dude")
    sim = simulate(coupled, 300, seed=9, window=2.0)
    no_split = case_probability(AssociationCase.MACRO_DL_FEMTO_UL, coupled) == 0.0 and not np.any(sim["case"] == 1)
    checks.append((no_split, "No-DUDe has no Case2"))
    cfg = get_preset("fig4a").config()
    a, b = simulate(cfg, 50, seed=99, window=2.0), simulate(cfg, 50, seed=99, window=2.0)
    checks.append((all(np.array_equal(a[k], b[k]) for k in a), "drops deterministic in (seed, drop)"))
    checks.append(_fig2_fig3_trends())
    checks.append(_fig5_trends())
    ok = all(c for c, _ in checks)
    record(9, ok, "; ".join(f"{label} [{'ok' if c else 'FAIL'}]" if not label.endswith(("ok", "FAIL")) else label
                            for c, label in checks))
    assert ok
