import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from agnostic.data import Dataset
from agnostic.harness import (EmptySelection, HarnessConfig, InfeasibleLevel, IntervalReport,
                              SingularDesign, StageError, TooFewRows, median_risk_interval,
                              projected_params, risk_inflation, risk_interval, run_harness)
from agnostic.selectors import SelectedModel, SelectorSpec

from conftest import make_data


def model_for(p, coefs=None, intercept=0.0, null=0.0):
    beta = np.zeros(p)
    coefs = coefs or {}
    for j, b in coefs.items():
        beta[j] = b
    return SelectedModel(tuple(coefs), beta, intercept, "fixed", [f"x{j}" for j in range(p)],
                         null_intercept=null)


# ------------------------------------------------------------------ risk


def test_risk_hand_values():
    d2 = make_data(np.zeros(4), [1.0, 2.0, 3.0, 4.0])
    rep = risk_interval(d2, model_for(1), 0.05)
    # s = sqrt(5/3); half width = 1.959964 * s / 2
    assert rep.risk.estimate == 2.5
    assert rep.risk.lower == pytest.approx(1.2349, abs=1e-4)
    assert rep.risk.upper == pytest.approx(3.7651, abs=1e-4)
    assert rep.risk.width == pytest.approx(2 * 1.959963984540054 * np.sqrt(5 / 3) / 2, rel=1e-12)


def test_risk_perfect_predictor():
    x = np.arange(6.0)
    rep = risk_interval(make_data(x, 3 * x + 1), model_for(1, {0: 3.0}, 1.0), 0.05)
    assert (rep.risk.estimate, rep.risk.lower, rep.risk.upper) == (0.0, 0.0, 0.0)


def test_risk_estimate_is_mean_of_deltas():
    rng = np.random.default_rng(0)
    d2 = make_data(rng.standard_normal((50, 3)), rng.standard_normal(50))
    m = model_for(3, {0: 0.5, 2: -1.0}, 0.2, null=0.1)
    rep = risk_interval(d2, m, 0.1)
    np.testing.assert_allclose(rep.deltas, np.abs(d2.y - d2.x @ m.beta_hat - 0.2), atol=1e-15)
    assert rep.risk.estimate == rep.deltas.mean()
    assert np.all(rep.deltas >= 0)
    from agnostic.stats import z_two_sided
    assert rep.risk.width == pytest.approx(
        2 * z_two_sided(0.1) * rep.deltas.std(ddof=1) / np.sqrt(50), rel=1e-14)
    assert rep.null_risk.estimate == pytest.approx(np.abs(d2.y - 0.1).mean(), rel=1e-14)
    sq = risk_interval(d2, m, 0.1, scale="squared")
    np.testing.assert_allclose(sq.deltas, rep.deltas ** 2)


# ---------------------------------------------------------------- median


def test_median_interval_feasibility():
    m = model_for(1)
    with pytest.raises(InfeasibleLevel):
        median_risk_interval(make_data(np.zeros(5), np.arange(5.0)), m, 0.05)
    rep = median_risk_interval(make_data(np.zeros(6), [3.0, -1, 4, 1, -5, 9]), m, 0.05)
    assert (rep.lower, rep.upper) == (1.0, 9.0)  # ranks (1, 6) of |y|
    assert rep.method == "order_statistic"


def test_median_interval_constant():
    rep = median_risk_interval(make_data(np.zeros(20), np.full(20, 2.5)), model_for(1), 0.05)
    assert (rep.estimate, rep.lower, rep.upper) == (2.5, 2.5, 2.5)


def test_median_interval_coverage():
    rng = np.random.default_rng(1)
    m2, reps, alpha = 15, 10_000, 0.1
    true_median = np.log(2.0)  # median of Exp(1)
    hits = 0
    for _ in range(reps):
        d2 = make_data(np.zeros(m2), rng.exponential(size=m2))
        hits += median_risk_interval(d2, model_for(1), alpha).contains(true_median)
    from agnostic.stats import median_ci_ranks
    cov = median_ci_ranks(m2, alpha)[2]
    se = np.sqrt(cov * (1 - cov) / reps)
    assert hits / reps >= 1 - alpha - 3 * se
    assert abs(hits / reps - cov) <= 3 * se


# ------------------------------------------------------------- inflation


def test_inflation_zero_coefficient():
    rng = np.random.default_rng(2)
    d2 = make_data(rng.standard_normal((30, 2)), rng.standard_normal(30))
    m = SelectedModel((0, 1), [0.0, 1.0], 0.0, "x", ["a", "b"])
    rep = risk_inflation(d2, m, 0.05)
    assert np.all(rep.e_values[0] == 0.0)
    assert (rep.per_variable[0].lower, rep.per_variable[0].upper) == (0.0, 0.0)
    assert set(rep.per_variable) == {0, 1}


def test_inflation_exact_fit_positive():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(40)
    rep = risk_inflation(make_data(x, 2 * x), model_for(1, {0: 2.0}), 0.05)
    assert np.all(rep.e_values[0] >= 0)
    assert rep.per_variable[0].estimate > 0


def test_inflation_empty_selection():
    with pytest.raises(EmptySelection):
        risk_inflation(make_data(np.zeros(5), np.ones(5)), model_for(1), 0.05)


def test_bonferroni_widens():
    rng = np.random.default_rng(4)
    d2 = make_data(rng.standard_normal((60, 3)), rng.standard_normal(60))
    m = model_for(3, {0: 0.3, 1: -0.2, 2: 0.5})
    a, b = risk_inflation(d2, m, 0.05, True), risk_inflation(d2, m, 0.05, False)
    pa, pb = projected_params(d2, m, 0.05, True), projected_params(d2, m, 0.05, False)
    for j in m.subset:
        assert a.per_variable[j].lower <= b.per_variable[j].lower
        assert a.per_variable[j].upper >= b.per_variable[j].upper
        assert a.per_variable[j].correction == "bonferroni(3)"
    for u, v in zip(pa.intervals, pb.intervals):
        assert u.lower <= v.lower and u.upper >= v.upper


@given(a1=st.floats(0.01, 0.5), a2=st.floats(0.01, 0.5))
def test_nested_levels(a1, a2):
    small, big = sorted((a1, a2))
    rng = np.random.default_rng(5)
    d2 = make_data(rng.standard_normal((40, 2)), rng.standard_normal(40))
    m = model_for(2, {0: 0.5, 1: 0.1})
    pairs = [
        (risk_interval(d2, m, small).risk, risk_interval(d2, m, big).risk),
        (risk_inflation(d2, m, small).per_variable[0], risk_inflation(d2, m, big).per_variable[0]),
        (projected_params(d2, m, small).intervals[1], projected_params(d2, m, big).intervals[1]),
        (median_risk_interval(d2, m, small), median_risk_interval(d2, m, big)),
    ]
    for wide, narrow in pairs:
        assert wide.lower <= narrow.lower and wide.upper >= narrow.upper


# ------------------------------------------------------------- projected


def test_projected_exact_line():
    x = np.linspace(-1, 1, 20)
    rep = projected_params(make_data(x, 2 * x), model_for(1, {0: 1.0}), 0.05)
    assert rep.beta_star_hat[1] == pytest.approx(2.0, abs=1e-12)
    assert rep.intervals[1].width <= 1e-12


def test_projected_empty_subset_is_mean():
    y = np.array([1.0, 2.0, 4.0, 9.0])
    rep = projected_params(make_data(np.zeros(4), y), model_for(1), 0.05)
    assert rep.beta_star_hat[0] == pytest.approx(y.mean(), rel=1e-14)
    assert rep.labels == ("(Intercept)",)


def test_projected_matches_normal_equations_and_sandwich():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((80, 4))
    y = x[:, 0] - x[:, 2] ** 2 + rng.standard_normal(80) * (1 + np.abs(x[:, 1]))
    d2 = make_data(x, y)
    m = model_for(4, {0: 1.0, 2: 1.0, 3: 1.0})
    rep = projected_params(d2, m, 0.05)
    a = np.column_stack([np.ones(80), x[:, [0, 2, 3]]])
    direct = np.linalg.solve(a.T @ a, a.T @ y)
    np.testing.assert_allclose(rep.beta_star_hat, direct, rtol=1e-9)
    e = y - a @ direct
    bread = np.linalg.inv(a.T @ a)
    hc0 = bread @ (a.T * e ** 2) @ a @ bread
    np.testing.assert_allclose(rep.covariance, hc0, rtol=1e-9)
    assert np.allclose(rep.covariance, rep.covariance.T)
    assert np.linalg.eigvalsh(rep.covariance).min() >= -1e-8
    cl = projected_params(d2, m, 0.05, covariance="classical")
    np.testing.assert_allclose(cl.covariance, bread * (e @ e) / (80 - 4), rtol=1e-9)


def test_projected_errors():
    with pytest.raises(TooFewRows):
        projected_params(make_data(np.ones((3, 2)), [1, 2, 3]), model_for(2, {0: 1, 1: 1}))
    x = np.ones((10, 2))
    x[:, 0] = np.arange(10)
    x[:, 1] = 2 * np.arange(10)
    with pytest.raises(SingularDesign):
        projected_params(make_data(x, np.arange(10.0)), model_for(2, {0: 1, 1: 1}))


def test_projected_coverage_monte_carlo():
    rng = np.random.default_rng(7)
    reps, hits = 1000, 0
    for _ in range(reps):
        x = rng.standard_normal(10_000)
        d2 = make_data(x, x + rng.standard_normal(10_000))
        hits += projected_params(d2, model_for(1, {0: 1.0}), 0.05).intervals[1].contains(1.0)
    assert abs(hits / reps - 0.95) <= 3 * np.sqrt(0.95 * 0.05 / reps)


def test_interval_report_invariants():
    with pytest.raises(ValueError):
        IntervalReport("a", 1.0, 2.0, 3.0, 0.95)
    with pytest.raises(ValueError):
        IntervalReport("a", 1.0, 0.0, 3.0, 1.0)


# --------------------------------------------------------------- pipeline


def test_pipeline_noise_gives_null_only_reports():
    rng = np.random.default_rng(8)
    data = make_data(rng.standard_normal((200, 5)), rng.standard_normal(200))
    for seed in range(20):
        res = run_harness(data, SelectorSpec(), 0.05, seed)
        if res.model.subset == ():
            break
    else:
        pytest.fail("no empty selection in 20 seeds")
    assert res.inflation is None
    assert res.projected.labels == ("(Intercept)",)
    # selected and null predictor coincide
    np.testing.assert_allclose(res.risk.deltas, res.risk.null_deltas)


def test_pipeline_wine(wine):
    res = run_harness(wine, SelectorSpec(), 0.05, 0)
    names = set(res.model.selected_names)
    assert {"Alcohol", "Volatile_Acidity", "Sulphates"} <= names
    assert res.risk.risk.upper < res.risk.null_risk.lower
    infl = {wine.names[j]: r.estimate for j, r in res.inflation.per_variable.items()}
    assert max(infl, key=infl.get) == "Alcohol"


def test_pipeline_deterministic(wine):
    a = run_harness(wine, SelectorSpec(), 0.05, 11)
    b = run_harness(wine, SelectorSpec(), 0.05, 11)
    assert a.model.subset == b.model.subset
    np.testing.assert_array_equal(a.risk.deltas, b.risk.deltas)
    np.testing.assert_array_equal(a.projected.covariance, b.projected.covariance)
    assert a.risk.risk == b.risk.risk
    split, model, risk, inflation, projected = a
    assert model is a.model


def test_pipeline_refit_variant(wine):
    res = run_harness(wine, SelectorSpec(), config=HarnessConfig(coefficients="d2"))
    # refitting on the second half reproduces the projected estimate
    np.testing.assert_allclose(res.model.beta_hat[list(res.model.subset)],
                               res.projected.beta_star_hat[1:], rtol=1e-8)


def test_pipeline_stage_tags():
    tiny = make_data(np.ones((3, 1)), [1, 2, 3])
    with pytest.raises(StageError) as e:
        run_harness(tiny)
    assert e.value.stage == "split"
