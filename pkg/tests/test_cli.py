"""Command-line verbs and the experiment layer behind them."""
import csv
import io
import math
import subprocess
import sys

import pytest

from dudehet import experiments
from dudehet.cli import main
from dudehet.errors import ConfigError, ContractError
from dudehet.experiments import Objective, SweepSpec, grid_search, parse_grid, validate
from dudehet.model import config_from_mapping, parse_config_text
from dudehet.presets import PRESETS, get_preset

SISO = """\
lambda_m = 1
lambda_f = 3
p_m_dbm = 30
p_f_dbm = 30
n_m = 1
n_f = 1
alpha_m = 4
alpha_f = 4
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.fixture
def siso_file(tmp_path):
    p = tmp_path / "siso.cfg"
    p.write_text(SISO)
    return p


# -- grids --------------------------------------------------------------------

def test_grid_parsing():
    assert parse_grid("-10:20:5") == (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    assert parse_grid("0:1:0.1")[-1] == pytest.approx(1.0)
    assert len(parse_grid("0:1:0.1")) == 11
    assert parse_grid("1e3, 1e4,1e5") == (1e3, 1e4, 1e5)
    for bad in ("", "3:1:1", "0:1:0", "1:2", "a,b"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec("tau_db", (), "sir_coverage", ("analytic",))
    with pytest.raises(ConfigError):
        SweepSpec("tau_db", (1.0, 0.0), "sir_coverage", ("analytic",))
    with pytest.raises(ConfigError):
        SweepSpec("speed", (1.0,), "sir_coverage", ("analytic",))


# -- presets --------------------------------------------------------------------

def test_every_figure_preset_ships():
    for name in ("fig2", "fig3", "fig4a", "fig4b", "fig4c", "fig4d", "fig5", "fig8", "fig10a", "fig10b"):
        assert name in PRESETS


def test_presets_listing_and_config_round_trip(capsys):
    code, out, _ = run(capsys, "presets")
    assert code == 0 and "fig4a" in out
    code, out, _ = run(capsys, "presets", "fig4c")
    assert code == 0
    assert parse_config_text(out) == get_preset("fig4c").config()


def test_unknown_preset(capsys):
    code, _, err = run(capsys, "presets", "fig99")
    assert code == 2 and err.startswith("error:")


# -- sweep ----------------------------------------------------------------------

def test_association_sweep_of_fig2(capsys):
    code, out, _ = run(capsys, "sweep", "--preset", "fig2")
    assert code == 0
    rows = read_csv(out)
    assert rows[0] == list(experiments.CSV_HEADER)
    case1 = {float(r[0]): float(r[3]) for r in rows[1:] if r[2] == "case1"}
    assert case1[5.0] == pytest.approx(0.309017, abs=1e-6)
    assert all(len(r[3].split(".")[1]) == 6 for r in rows[1:])


def test_threshold_sweep_reproduces_closed_form(capsys, siso_file):
    code, out, _ = run(capsys, "sweep", "--config", str(siso_file), "--param", "tau_db", "--grid", "-10:10:5",
                       "--mode", "exclusion")
    assert code == 0
    for row in read_csv(out)[1:]:
        tau = 10 ** (float(row[0]) / 10)
        expected = 1 / (1 + math.sqrt(tau) * math.atan(math.sqrt(tau)))
        assert float(row[3]) == pytest.approx(expected, abs=1e-6)


def test_simulated_sweep_is_byte_identical(tmp_path, siso_file):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        subprocess.run([sys.executable, "-m", "dudehet", "sweep", "--config", str(siso_file), "--param", "tau_db",
                        "--grid", "-5:5:5", "--engine", "both", "--drops", "300", "--window", "2", "--seed", "42",
                        "--out", str(out)], check=True)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rows = read_csv(outs[0].decode())
    assert {r[1] for r in rows[1:]} == {"analytic", "sim"}
    assert all(r[5] == "42" for r in rows[1:] if r[1] == "sim")


def test_invalid_grid_point_gives_failed_row(capsys, siso_file):
    code, out, err = run(capsys, "sweep", "--config", str(siso_file), "--param", "n_m", "--grid", "1,1.5,2",
                         "--metric", "sir_coverage", "--thresholds", "0")
    assert code == 0
    rows = read_csv(out)[1:]
    assert [r[0] for r in rows] == ["1", "1.5", "2"]
    assert rows[1][3] == "failed" and rows[0][3] != "failed"
    assert "warning" in err


def test_empty_grid_is_rejected(capsys, siso_file):
    code, _, err = run(capsys, "sweep", "--config", str(siso_file), "--param", "tau_db", "--grid", "")
    assert code == 2 and "error:" in err


def test_config_error_names_file_and_line(capsys, tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("lambda_m = 1\nlambda_f = x\n")
    code, _, err = run(capsys, "sweep", "--config", str(p), "--param", "tau_db", "--grid", "0")
    assert code == 2
    assert "bad.cfg" in err and "line 2" in err


def test_missing_source_is_a_usage_error(capsys):
    code, _, err = run(capsys, "sweep", "--param", "tau_db", "--grid", "0")
    assert code == 2 and "--config" in err


# -- validate -------------------------------------------------------------------

def test_analysis_against_itself_has_zero_gap(capsys, siso_file):
    code, out, err = run(capsys, "validate", "--config", str(siso_file), "--engine", "analytic",
                         "--thresholds", "-5,0,5")
    assert code == 0 and "PASS" in err
    for row in read_csv(out)[1:]:
        assert float(row[4]) == 0.0 and row[5] == "pass"


def test_corrupted_zeta_is_caught():
    # The rate-figure scenario is the one where coverage reacts strongly to
    # zeta; on the tau-sweep scenarios doubling it moves coverage by < 0.035.
    cfg = get_preset("fig8").config()
    # Doubles the femto/macro UL weight ratio, i.e. zeta of the macro tier.
    corrupted = cfg.with_bias_db(cfg.bias_db + 10 * math.log10(2.0))
    th = (-5.0, 0.0, 5.0, 10.0)
    good = validate(cfg, th, n_drops=4000, window=3.0, seed=1)
    bad = validate(cfg, th, n_drops=4000, window=3.0, seed=1, analytic_cfg=corrupted)
    assert good.passed
    assert not bad.passed
    assert sum(not p.passed for p in bad.points) >= 1
    against_analysis = validate(cfg, th, reference="analytic", analytic_cfg=corrupted)
    assert not against_analysis.passed


# -- search ---------------------------------------------------------------------

def test_search_returns_grid_argmax(capsys, tmp_path):
    out = tmp_path / "curve.csv"
    code, stdout, _ = run(capsys, "search", "--preset", "fig10a", "--grid", "-2:2:1", "--out", str(out))
    assert code == 0
    rows = read_csv(out.read_text())[1:]
    values = {float(r[0]): float(r[3]) for r in rows}
    best = max(values, key=lambda k: (values[k], -k))
    assert f"best bias_db = {best:g}" in stdout


def test_search_single_point_grid():
    cfg = config_from_mapping(dict(lambda_m=1, lambda_f=3, n_m=1, n_f=1, alpha_m=4, alpha_f=4))
    res = grid_search(cfg, "bias_db", (0.0,), "corollary7@0")
    assert res.best == 0.0
    assert res.best_value == pytest.approx(1 / (1 + math.pi / 4), abs=1e-9)


def test_search_skips_points_outside_hypotheses():
    cfg = config_from_mapping(dict(lambda_m=1, lambda_f=3, n_m=1, n_f=1, alpha_m=4, alpha_f=4))
    res = grid_search(cfg, "bias_db", (-3.0, 0.0, 3.0), "corollary7@0")
    assert res.best == 0.0
    assert [y is None for _, y in res.curve] == [True, False, True]
    with pytest.raises(ContractError):
        grid_search(cfg, "bias_db", (-3.0, 3.0), "corollary7@0")


def test_search_ties_go_to_smaller_value(monkeypatch):
    monkeypatch.setattr(Objective, "__call__", lambda self, cfg, mode=None: 0.5)
    cfg = get_preset("fig10a").config()
    assert grid_search(cfg, "bias_db", (-1.0, 0.0, 1.0), "sir_coverage@0").best == -1.0


def test_objective_parsing():
    assert Objective.parse("sir_coverage@-3") == Objective("sir_coverage", -3.0)
    assert Objective.parse("rate_coverage@2e4").level == 2e4
    assert Objective.parse("corollary5@1").corollary == 5
    with pytest.raises(ConfigError):
        Objective.parse("throughput@3")
