"""Special-case coverage formulas against the general evaluator and each other."""
import math

import pytest

from dudehet.analytic import COROLLARY_MODE, corollary_coverage, sir_coverage
from dudehet.errors import ContractError, DomainError
from dudehet.model import config_from_mapping

BASE = dict(lambda_m=1.0, lambda_f=4.0, p_m_dbm=43.0, p_f_dbm=20.0, alpha_m=3.5, alpha_f=3.5)

# One configuration satisfying the hypotheses of each special case.
CASE_CONFIGS = {
    1: dict(BASE, n_m=3, n_f=2, alpha_m=3.5, alpha_f=4.0, bias_db=3.0, eta=0.0),
    2: dict(BASE, n_m=4, n_f=2, alpha_m=3.0, alpha_f=3.0, eta=1.0),
    3: dict(BASE, n_m=2, n_f=1, bias_db=10 * math.log10(2.0), eta=0.5),
    4: dict(BASE, lambda_f=1.0, p_f_dbm=43.0, n_m=2, n_f=2, eta=0.5),
    5: dict(BASE, n_m=4, n_f=2, bias_db=10 * math.log10(2.0), eta=0.0),
    6: dict(BASE, n_m=1, n_f=3, bias_db=2.0, eta=0.0),
    7: dict(BASE, n_m=1, n_f=1, eta=0.0),
}
TAUS_DB = (-5.0, 0.0, 5.0, 10.0)


def _cfg(cid, **kw):
    return config_from_mapping(dict(CASE_CONFIGS[cid], **kw))


@pytest.mark.parametrize("tau_db", TAUS_DB)
@pytest.mark.parametrize("tier", ["macro", "femto"])
@pytest.mark.parametrize("cid", sorted(CASE_CONFIGS))
def test_special_case_matches_general_evaluator(cid, tier, tau_db):
    if cid in (6, 7) and tier == "femto" and CASE_CONFIGS[cid]["n_f"] != 1:
        pytest.skip("needs a single-antenna serving tier")
    cfg = _cfg(cid)
    tau = 10 ** (tau_db / 10)
    general = sir_coverage(tier, cfg, tau, COROLLARY_MODE[cid])
    assert corollary_coverage(cid, cfg, tau, tier) == pytest.approx(general, abs=1e-7)


@pytest.mark.parametrize("tau_db", TAUS_DB)
def test_equal_weight_closed_form_matches_eta_zero_integral(tau_db):
    cfg, tau = _cfg(5), 10 ** (tau_db / 10)
    for tier in ("macro", "femto"):
        assert corollary_coverage(5, cfg, tau, tier) == pytest.approx(corollary_coverage(1, cfg, tau, tier), abs=1e-9)


@pytest.mark.parametrize("tau_db", TAUS_DB)
def test_single_antenna_cases_agree(tau_db):
    tau = 10 ** (tau_db / 10)
    cfg6 = _cfg(6)
    assert corollary_coverage(6, cfg6, tau) == pytest.approx(corollary_coverage(1, cfg6, tau), abs=1e-9)
    cfg7 = _cfg(7)
    c7 = corollary_coverage(7, cfg7, tau)
    assert c7 == pytest.approx(corollary_coverage(6, cfg7, tau), abs=1e-9)
    assert c7 == pytest.approx(corollary_coverage(1, cfg7, tau), abs=1e-9)


def test_symmetric_case_is_equal_weight_case():
    cfg = _cfg(4)
    for tau in (0.5, 2.0):
        assert corollary_coverage(4, cfg, tau) == pytest.approx(corollary_coverage(3, cfg, tau), abs=1e-9)


def test_single_antenna_unbiased_anchor():
    cfg = config_from_mapping(dict(BASE, n_m=1, n_f=1, alpha_m=4.0, alpha_f=4.0))
    assert corollary_coverage(7, cfg, 1.0) == pytest.approx(0.560099, abs=1e-6)


def test_unbiased_single_antenna_coverage_ignores_densities():
    a = corollary_coverage(7, _cfg(7), 3.0)
    b = corollary_coverage(7, _cfg(7, lambda_m=7.0, lambda_f=0.3), 3.0)
    assert a == pytest.approx(b, abs=1e-14)


@pytest.mark.parametrize("cid,kw,needs", [
    (1, dict(eta=0.5), "eta = 0"),
    (2, dict(eta=0.0), "eta = 1"),
    (3, dict(bias_db=0.0), "B_K N_K = B_J N_J"),
    (3, dict(alpha_f=4.0), "alpha_K = alpha_J"),
    (4, dict(lambda_f=2.0), "lambda_K = lambda_J"),
    (4, dict(n_f=1), "N_K = N_J"),
    (6, dict(n_m=2), "N_K = 1"),
    (7, dict(bias_db=3.0), "B_K = B_J"),
])
def test_violated_hypotheses_raise(cid, kw, needs):
    with pytest.raises(ContractError, match=needs.replace("=", r"\=")):
        corollary_coverage(cid, _cfg(cid, **kw), 1.0)


def test_bad_arguments():
    with pytest.raises(DomainError):
        corollary_coverage(8, _cfg(7), 1.0)
    with pytest.raises(DomainError):
        corollary_coverage(7, _cfg(7), 0.0)
