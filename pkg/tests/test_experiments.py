import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import chebfit.experiments as ex
from chebfit.config import ConfigError, parse_config
from chebfit.experiments import (ExperimentConfig, LambdaGridSpec, run_containment, run_lasso_compare,
                                 run_ols_vs_cheb, run_rate_curve, summarize)
from chebfit.lp import LpStatus, SolverFailure
from chebfit.output import (RECORD_COLUMNS, ExperimentRecord, axis_values, emit_csv, emit_svg_scatter, emit_table,
                            line_fit, read_records)


def _rate_cfg(**kw):
    base = dict(experiment="rate", n_grid=(30, 60), p_grid=(4, 6), reps=3, seed=11)
    base.update(kw)
    return ExperimentConfig(**base)


def test_rate_curve_small_grid():
    res = run_rate_curve(_rate_cfg())
    assert len(res.records) == 2 * 2 * 3
    assert {r.estimator_tag for r in res.records} == {"linf"}
    assert all(r.min_slack >= -1e-9 and r.a_hat <= 2.0 + 1e-12 for r in res.records)
    assert res.fits["rate"]["x_axis"] == "p/n"
    assert not res.failures


def test_more_data_lowers_error():
    res = run_rate_curve(_rate_cfg(n_grid=(30, 110), p_grid=(4,), reps=100))
    m = {r["n"]: r["mean_l2_error"] for r in res.summary}
    assert m[110] < m[30]


def test_summary_is_a_fold_of_records():
    res = run_rate_curve(_rate_cfg())
    for row in res.summary:
        rs = [r for r in res.records if (r.n, r.p, r.s, r.estimator_tag) ==
              (row["n"], row["p"], row["s"], row["estimator_tag"])]
        assert row["reps"] == len(rs)
        assert row["mean_l2_error"] == pytest.approx(np.mean([r.l2_error for r in rs]), rel=1e-15)
        assert row["mean_l1_error"] == pytest.approx(np.mean([r.l1_error for r in rs]), rel=1e-15)
    assert summarize(list(reversed(res.records))) == res.summary


def test_rate_curve_rejects_odd_p_and_bad_design():
    with pytest.raises(ValueError):
        run_rate_curve(_rate_cfg(p_grid=(3,)))
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="rate", design="cauchy")


def test_deterministic_records(tmp_path):
    cfg = _rate_cfg(reps=1)
    a = emit_csv(run_rate_curve(cfg).records, tmp_path / "a.csv").read_bytes()
    b = emit_csv(run_rate_curve(cfg).records, tmp_path / "b.csv").read_bytes()
    assert a == b
    c = emit_csv(run_rate_curve(dataclasses.replace(cfg, seed=12)).records, tmp_path / "c.csv").read_bytes()
    assert a != c


def test_parallel_matches_sequential(tmp_path):
    cfg = _rate_cfg(reps=2)
    a = emit_csv(run_rate_curve(cfg, jobs=1).records, tmp_path / "a.csv").read_bytes()
    b = emit_csv(run_rate_curve(cfg, jobs=3).records, tmp_path / "b.csv").read_bytes()
    assert a == b


def test_failed_cell_is_dropped_not_the_run(monkeypatch):
    real = ex.fit_chebyshev_lp

    def flaky(ds):
        if ds.n == 60:
            raise SolverFailure(LpStatus.ITERATION_LIMIT)
        return real(ds)

    monkeypatch.setattr(ex, "fit_chebyshev_lp", flaky)
    res = run_rate_curve(_rate_cfg(p_grid=(4,)))
    assert {r.n for r in res.records} == {30}
    assert len(res.failures) == 1 and "SolverFailure" in res.failures[0]


def test_cell_budget_aborts():
    res = run_rate_curve(_rate_cfg(cell_budget_s=0.0))
    assert not res.records and len(res.failures) == 4


def test_ols_vs_cheb_slopes_and_repeatability():
    cfg = ExperimentConfig(experiment="ols-vs-cheb", p_grid=(4,), n_grid=(50, 100, 200, 400), reps=30, seed=5)
    r1, r2 = run_ols_vs_cheb(cfg), run_ols_vs_cheb(cfg)
    assert r1.fits == r2.fits
    assert r1.fits["linf"]["slope"] < -0.8 and -0.7 < r1.fits["ols"]["slope"] < -0.3
    assert all(math.isnan(r.min_slack) for r in r1.records if r.estimator_tag == "ols")


def test_lasso_compare_oracle_selection():
    cfg = ExperimentConfig(experiment="lasso-compare", a=5.0, n_grid=(60,), s_grid=(2,), p_offset=40, reps=2,
                           seed=3, lasso_grid_count=30)
    res = run_lasso_compare(cfg)
    assert {r.estimator_tag for r in res.records} == {"cheb-lasso", "lasso"}
    p = 42
    lams = cfg.lambda_grid.values(60, p)
    for r in res.records:
        assert r.p == p and r.s == 2
        if r.estimator_tag == "cheb-lasso":
            assert np.isclose(lams, r.lambda_used, rtol=1e-12).any()
    with pytest.raises(ValueError):
        run_lasso_compare(dataclasses.replace(cfg, design="rademacher"))


def test_lambda_grid_spec():
    v = LambdaGridSpec().values(600, 1004)
    base = math.sqrt(math.log(1004) / 600 ** 0.4)
    np.testing.assert_allclose(v, np.linspace(0.1, 2.0, 6) * base, rtol=1e-14)


def test_containment_rows():
    cfg = ExperimentConfig(experiment="containment", design="gaussian", p_grid=(2,), m_grid=(50, 400), trials=40,
                           seed=1)
    rows = run_containment(cfg)
    assert [r["m"] for r in rows] == [50, 400]
    assert rows[0]["bound"] == 1.0 and rows[1]["bound"] < 0.02
    assert all(r["exact"] for r in rows)
    assert rows[1]["empirical_failure"] <= rows[1]["bound"] + 3 * rows[1]["std_error"] + 1e-12


# -- output --------------------------------------------------------------------------------

records_st = st.lists(st.builds(
    ExperimentRecord, st.integers(1, 1000), st.integers(1, 50), st.integers(0, 10), st.integers(0, 99),
    st.sampled_from(["linf", "ols", "lasso"]), st.floats(0, 1e6), st.floats(0, 1e6),
    st.floats(-1e6, 1e6), st.one_of(st.just(math.nan), st.floats(0, 10)), st.floats(-1, 10)), min_size=1, max_size=20)


@given(records_st)
def test_csv_round_trip(tmp_path_factory, recs):
    path = tmp_path_factory.mktemp("csv") / "r.csv"
    emit_csv(recs, path)
    back = read_records(path)
    for a, b in zip(sorted(recs, key=ExperimentRecord.sort_key), back):
        for c in RECORD_COLUMNS:
            x, y = getattr(a, c), getattr(b, c)
            assert (x == y) or (isinstance(x, float) and math.isnan(x) and math.isnan(y))


def test_csv_header_and_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "x.csv")
    with pytest.raises(ValueError):
        emit_table([], tmp_path / "x.csv")
    with pytest.raises(OSError, match="missing"):
        emit_csv([ExperimentRecord(1, 1, 0, 0, "linf", 0.0, 0.0, 0.0, math.nan, 0.0)], tmp_path / "missing" / "x.csv")
    emit_csv([ExperimentRecord(1, 1, 0, 0, "linf", 0.1, 0.1, 0.0, math.nan, 0.0)], tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == ",".join(RECORD_COLUMNS)
    with pytest.raises(ValueError):
        ExperimentRecord(1, 1, 0, 0, "linf", -1.0, 0.0, 0.0, math.nan, 0.0)


def test_svg_one_circle_per_row(tmp_path):
    rows = [{"n": n, "p": p, "mean_l2_error": p / n} for n in (30, 60, 90) for p in (4, 8)]
    svg = emit_svg_scatter(rows, "p/n", tmp_path / "f.svg").read_text()
    assert svg.count("<circle") == len(rows)
    assert "R^2 = 1.0000" in svg
    again = emit_svg_scatter(rows, "p/n", tmp_path / "g.svg").read_text()
    assert svg == again
    with pytest.raises(ValueError):
        emit_svg_scatter([], "p/n", tmp_path / "h.svg")
    with pytest.raises(ValueError):
        axis_values("n^2", [1], [1])


def test_line_fit_matches_polyfit(rng):
    x = rng.random(20)
    y = 3 * x - 1 + 0.1 * rng.standard_normal(20)
    lf = line_fit(x, y)
    slope, icpt = np.polyfit(x, y, 1)
    assert lf.slope == pytest.approx(slope, rel=1e-10) and lf.intercept == pytest.approx(icpt, rel=1e-10)
    assert lf.r2 == pytest.approx(np.corrcoef(x, y)[0, 1] ** 2, rel=1e-10)


# -- config -----------------------------------------------------------------------------------

def test_parse_config_full():
    cfg = parse_config("""
[experiment]
kind = lasso-compare
design = gaussian
a = 5
n_grid = 600, 800
s_grid = 4,10
reps = 7
seed = 42
cell_budget_s = 120
[lambda_grid]
count = 4
[lasso]
grid_count = 50
[output]
dir = results
""")
    assert cfg.experiment == "lasso-compare" and cfg.n_grid == (600, 800) and cfg.s_grid == (4, 10)
    assert cfg.reps == 7 and cfg.seed == 42 and cfg.cell_budget_s == 120.0
    assert cfg.lambda_grid.count == 4 and cfg.lambda_grid.low_mult == 0.1 and cfg.lasso_grid_count == 50
    assert str(cfg.output_dir) == "results"


@pytest.mark.parametrize("text", [
    "[experiment]\nkind = rate\nreps = 0\n",
    "[experiment]\nkind = nope\n",
    "[experiment]\nkind = rate\nrepz = 3\n",
    "[experiment]\nkind = rate\n[plot]\nx = 1\n",
    "[experiment]\ndesign = gaussian\n",
    "[experiment]\nkind = rate\nn_grid = 10, ten\n",
    "not an ini file",
])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_parse_config_inline_comments():
    cfg = parse_config("[experiment]\nkind = rate   ; which runner\nreps = 2 # two\n[containment]\ndirections =\n")
    assert cfg.experiment == "rate" and cfg.reps == 2 and cfg.directions is None
