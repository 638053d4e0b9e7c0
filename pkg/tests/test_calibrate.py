import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synchrony.calibrate import (
    PARAM_NAMES,
    CalibrationConfig,
    Layout,
    ObservedSeries,
    abc_fit,
    accept_mask,
    count_events,
    distance,
    kde_density,
    load_series,
    mcmc_summarize,
    simulate_counts,
    write_overlay_csv,
    write_summary_json,
)
from synchrony.drivers import ActivationSchedule, CycleDriver
from synchrony.errors import ChainStuck, DegenerateBandwidth, DegenerateBeliefs, NegativeCount, ParseError, \
    TooFewAccepted
from synchrony.netgen import NetworkSpec, make_small_world

THETA_HAT = (0.569, 0.739, 0.52, 0.934, 0.532, 0.476, 0.452, 0.525)


@pytest.fixture(scope="module")
def layout():
    g = make_small_world(NetworkSpec(20, 4, 0.3, seed=1))
    sched = ActivationSchedule.periodic(10, 2, 60, [0])
    return Layout(g, CycleDriver.periodic(10, peak_at=2), sched, active_fraction=0.6)


def small_config(**kw):
    base = dict(n_draws=300, tolerance_quantile=0.25, month_len=10, event_pro_threshold=0.5, mcmc_steps=3000,
                mcmc_burn=1000, seed=3)
    base.update(kw)
    return CalibrationConfig(**base)


def test_load_two_months(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("2019-01,3\n2019-02,0")
    s = load_series(p)
    assert s.months == ("2019-01", "2019-02")
    assert s.counts.tolist() == [3, 0]
    with pytest.raises(ParseError):
        s.validate()


def test_load_header_and_errors(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("month,count\n2019-01,1\n")
    assert len(load_series(p)) == 1
    p.write_text("2019-01,-1")
    with pytest.raises(NegativeCount):
        load_series(p)
    p.write_text("")
    with pytest.raises(ParseError):
        load_series(p)
    p.write_text("2019-01,1\n2019-02,x\n")
    with pytest.raises(ParseError, match=":2:"):
        load_series(p)


def test_series_invariants():
    with pytest.raises(NegativeCount):
        ObservedSeries(("a",), [-2])
    with pytest.raises(ParseError):
        ObservedSeries(("a", "b"), [1])


@pytest.mark.parametrize("kw", [dict(tolerance_quantile=0), dict(tolerance_quantile=1.5), dict(n_draws=0),
                                dict(kde_bandwidth="tophat"), dict(kde_bandwidth=-1.0),
                                dict(priors={"alpha": (0, 1)}), dict(mcmc_burn=50, mcmc_steps=50)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        CalibrationConfig(**kw)


def test_prior_bounds_checked():
    pri = dict(CalibrationConfig().priors)
    pri["alpha"] = (0.0, 1.0)
    with pytest.raises(ValueError):
        CalibrationConfig(priors=pri)
    pri = dict(CalibrationConfig().priors)
    pri["x"] = (0.2, 1.3)
    with pytest.raises(ValueError):
        CalibrationConfig(priors=pri)


def test_count_events():
    pro = [0, 0.6, 0.7, 0, 0.8, 0, 0, 0, 0, 0, 0.9, 0.9]
    assert count_events(pro, 5, 3, 0.5).tolist() == [2, 0, 1]
    assert count_events(np.zeros(10), 5, 2, 0.1).tolist() == [0, 0]


def test_silent_theta(layout):
    cfg = small_config()
    # tiny act probability and heavy resistance keep the forward model quiet apart from forced seeds
    silent = (0.05, 1.0, 0.1, 0.9, 0.0, 0.0, 1.0, 1.0)
    assert simulate_counts(silent, cfg, layout, 6).tolist() == [0] * 6


def test_point_estimate_fluctuates(layout):
    counts = simulate_counts(THETA_HAT, small_config(), layout, 6)
    assert counts.sum() > 0


def test_simulate_counts_deterministic(layout):
    cfg = small_config()
    a = simulate_counts(THETA_HAT, cfg, layout, 6, seed=11)
    b = simulate_counts(THETA_HAT, cfg, layout, 6, seed=11)
    assert np.array_equal(a, b)
    with pytest.raises(DegenerateBeliefs):
        simulate_counts((0.5, 0.5, 0.4, 0.4, 0, 1, 0, 1), cfg, layout, 6)


@given(st.lists(st.integers(0, 20), min_size=6, max_size=6),
       st.lists(st.integers(0, 20), min_size=6, max_size=6),
       st.lists(st.integers(0, 20), min_size=6, max_size=6))
def test_distance_is_metric(a, b, c):
    assert distance(a, b) >= 0
    assert distance(a, a) == 0
    assert (distance(a, b) == 0) == (a == b)
    assert distance(a, b) == distance(b, a)
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


def test_distance_shape_mismatch():
    with pytest.raises(ValueError):
        distance([1, 2], [1, 2, 3])


@given(st.lists(st.one_of(st.floats(0, 100), st.just(math.inf)), min_size=1, max_size=80),
       st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_acceptance_nesting(dists, q1, q2):
    lo, hi = sorted((q1, q2))
    small, cut_small = accept_mask(dists, lo)
    big, cut_big = accept_mask(dists, hi)
    assert np.all(big[small])
    assert cut_small <= cut_big
    d = np.asarray(dists)
    assert np.array_equal(big, np.isfinite(d) & (d <= cut_big))


def test_kde_point_mass_rejected():
    with pytest.raises(DegenerateBandwidth):
        kde_density(np.full(100, 0.3))
    with pytest.raises(ValueError):
        kde_density(np.arange(10.0))


def test_kde_normal_mode():
    x = np.random.default_rng(0).standard_normal(10_000)
    kde = kde_density(x, "silverman")
    assert abs(kde(np.array([[0.0]]))[0] - 0.3989) / 0.3989 < 0.10


def test_kde_uniform_plateau():
    x = np.random.default_rng(1).random(5000)
    kde = kde_density(x, "silverman", bounds=[(0, 1)])
    vals = kde.marginal(0, np.linspace(0.2, 0.8, 25))
    assert np.all(np.abs(vals - 1.0) < 0.15)


def test_kde_reflected_mass_on_box():
    rng = np.random.default_rng(2)
    x = rng.beta(2, 5, size=(400, 3))
    kde = kde_density(x, "scott", bounds=[(0, 1)] * 3)
    grid = np.linspace(0, 1, 2001)
    for j in range(3):
        assert np.trapezoid(kde.marginal(j, grid), grid) == pytest.approx(1.0, abs=0.02)
    assert kde(np.array([[1.5, 0.5, 0.5]]))[0] == 0.0


def test_mcmc_matches_sample_mean():
    rng = np.random.default_rng(4)
    x = np.column_stack([rng.normal(0.3, 0.1, 2000), rng.normal(-0.2, 0.2, 2000)])
    kde = kde_density(x)
    cfg = CalibrationConfig(mcmc_steps=20000, mcmc_burn=4000, seed=1)
    summ = mcmc_summarize(kde, cfg)
    assert np.all(np.abs(summ.mean - x.mean(axis=0)) < 0.05)
    assert 0.1 <= summ.acceptance_rate <= 0.6
    assert np.all(summ.lower < summ.mean) and np.all(summ.mean < summ.upper)


def test_mcmc_zero_scale_is_stuck():
    x = np.random.default_rng(0).standard_normal((200, 2))
    with pytest.raises(ChainStuck):
        mcmc_summarize(kde_density(x), CalibrationConfig(proposal_scale=0.0, mcmc_steps=500, mcmc_burn=100))


def test_abc_too_few_accepted(layout):
    obs = ObservedSeries(tuple(range(6)), simulate_counts(THETA_HAT, small_config(), layout, 6))
    with pytest.raises(TooFewAccepted):
        abc_fit(obs, small_config(n_draws=10), layout)


def test_abc_accept_everything_returns_prior(layout):
    obs = ObservedSeries(tuple(range(6)), simulate_counts(THETA_HAT, small_config(), layout, 6))
    cfg = small_config(tolerance_quantile=1.0)
    res = abc_fit(obs, cfg, layout)
    finite = np.isfinite(res.distances)
    assert res.accepted.sum() == finite.sum()
    mid = cfg.bounds.mean(axis=1)
    assert np.all(np.abs(res.means - mid) < 0.1)


def test_abc_pipeline(layout, tmp_path):
    cfg = small_config()
    obs = ObservedSeries(tuple(f"m{i}" for i in range(6)), simulate_counts(THETA_HAT, cfg, layout, 6, seed=5))
    res = abc_fit(obs, cfg, layout)
    again = abc_fit(obs, cfg, layout, workers=2)
    assert np.array_equal(res.distances, again.distances)
    assert np.array_equal(res.means, again.means)
    lo, hi = cfg.bounds.T
    assert np.all((res.means >= lo) & (res.means <= hi))
    assert np.all(res.distances[res.accepted] <= res.cutoff)
    assert all(s.distance >= 0 for s in res.samples)
    summ = mcmc_summarize(res.kde, cfg)
    assert np.all((summ.mean >= lo) & (summ.mean <= hi))
    assert np.all(np.abs(summ.mean - res.means) < 0.05)
    res.write_accepted_csv(tmp_path / "acc.csv")
    write_summary_json(tmp_path / "post.json", res, summ)
    write_overlay_csv(tmp_path / "ov.csv", obs, obs.counts)
    doc = json.loads((tmp_path / "post.json").read_text())
    assert doc["parameters"] == list(PARAM_NAMES)
    assert set(doc["abc_mean"]) == set(PARAM_NAMES)
    assert len((tmp_path / "acc.csv").read_text().splitlines()) == 1 + int(res.accepted.sum())
