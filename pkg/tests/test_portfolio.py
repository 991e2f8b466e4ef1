import warnings

import numpy as np
import pytest

from discrete_copula.couplings import CouplingSpec
from discrete_copula.portfolio import (
    MarketClassifier,
    backtest,
    min_mes_weights,
    perf_metrics,
    portfolio_mes,
    simplex_grid,
)


def synthetic(rng, days=250, k=3, betas=None):
    betas = np.asarray(betas if betas is not None else np.linspace(1.5, 0.2, k))
    idx = rng.standard_t(5, size=days) * 0.012
    R = idx[:, None] * betas[None, :] + rng.normal(0, 0.004, size=(days, len(betas)))
    return idx, R


def test_classifier_bins():
    c = MarketClassifier()
    r = np.array([-0.05, -0.03, -0.02, -0.01, 0.0, 0.01, 0.02, 0.03, 0.04])
    np.testing.assert_array_equal(c.classify(r), [-2, -2, -1, -1, 0, 0, 1, 1, 2])
    np.testing.assert_array_equal(c.loss_levels(r), [2, 2, 1, 1, 0, 0, -1, -1, -2])
    with pytest.raises(ValueError):
        MarketClassifier((0.0,), (1.0,))
    with pytest.raises(ValueError):
        MarketClassifier((0.1, 0.0), (0.0, 1.0, 2.0))


def test_perf_metrics_examples():
    m = perf_metrics([0.10, 0.20, 0.00])
    assert m.avg == pytest.approx(0.10)
    assert m.stdev == pytest.approx(0.10)
    assert m.sharpe == pytest.approx(0.7)
    flat = perf_metrics([0.05, 0.05, 0.05])
    assert flat.stdev == 0.0 and flat.sharpe is None
    one = perf_metrics([0.05])
    assert one.stdev is None and one.sharpe is None
    with pytest.raises(ValueError):
        perf_metrics([])


@pytest.mark.parametrize("k,R", [(1, 5), (2, 4), (3, 20), (4, 6)])
def test_simplex_grid(k, R):
    from math import comb

    g = simplex_grid(k, R)
    assert len(g) == comb(R + k - 1, k - 1)
    np.testing.assert_allclose(g.sum(axis=1), 1.0)
    assert g.min() >= 0
    assert len({tuple(np.round(w * R).astype(int)) for w in g}) == len(g)


def test_single_asset():
    rng = np.random.default_rng(0)
    idx, R = synthetic(rng, k=1, betas=[1.0])
    np.testing.assert_array_equal(min_mes_weights(-R.T, MarketClassifier().loss_levels(idx), 0.9), [1.0])


def test_dominated_asset_gets_zero_weight():
    rng = np.random.default_rng(1)
    idx, R = synthetic(rng, k=2, betas=[1.2, 0.4])
    R[:, 1] = R[:, 0] + 0.001  # asset 1 always beats asset 0
    mk = MarketClassifier().loss_levels(idx)
    for mode in ("step", "interp"):
        w = min_mes_weights(-R.T, mk, 0.9, mode=mode)
        assert w[1] == pytest.approx(1.0, abs=1e-9), mode


def test_duplicates_split_evenly():
    rng = np.random.default_rng(2)
    idx, R = synthetic(rng, k=2, betas=[0.5, 1.5])
    R = np.column_stack([R[:, 0], R[:, 0], R[:, 1]])
    w = min_mes_weights(-R.T, MarketClassifier().loss_levels(idx), 0.9)
    np.testing.assert_allclose(w, [0.5, 0.5, 0.0])


def test_constant_returns():
    mk = np.tile([0.0, 1.0, 2.0, -1.0], 25)
    losses = np.array([np.full(100, -0.01), np.full(100, 0.02)])
    w = min_mes_weights(losses, mk, 0.9)
    np.testing.assert_allclose(w, [1.0, 0.0])
    assert portfolio_mes(w, losses, mk, 0.9) == pytest.approx(-0.01)


def test_validation():
    mk = np.zeros(10)
    with pytest.raises(ValueError):
        min_mes_weights(np.zeros((2, 9)), mk, 0.9)
    with pytest.raises(ValueError):
        min_mes_weights(np.zeros((2, 10)), mk, 1.0)


def test_step_optimum_beats_grid():
    rng = np.random.default_rng(3)
    idx, R = synthetic(rng, k=3)
    mk = MarketClassifier().loss_levels(idx)
    w = min_mes_weights(-R.T, mk, 0.9)
    best = min(portfolio_mes(g, -R.T, mk, 0.9) for g in simplex_grid(3, 30))
    assert portfolio_mes(w, -R.T, mk, 0.9) <= best + 1e-12


def test_interp_objective_not_worse_than_grid():
    rng = np.random.default_rng(4)
    idx, R = synthetic(rng, days=200, k=3)
    mk = MarketClassifier().loss_levels(idx)
    spec = CouplingSpec.comonotone(target=1, driver=0)
    w = min_mes_weights(-R.T, mk, 0.8, spec, "interp", resolution=10, refine_steps=4)
    got = portfolio_mes(w, -R.T, mk, 0.8, spec, "interp")
    grid = min(portfolio_mes(g, -R.T, mk, 0.8, spec, "interp") for g in simplex_grid(3, 10))
    assert got <= grid + 1e-12
    assert w.min() >= 0 and w.sum() == pytest.approx(1.0)


def test_conditioning_on_losses_prefers_low_beta():
    rng = np.random.default_rng(5)
    idx, R = synthetic(rng, days=500, k=4, betas=[1.4, 1.0, 0.6, 0.1])
    w = min_mes_weights(-R.T, MarketClassifier().loss_levels(idx), 0.9)
    assert np.argmax(w) == 3


# ---------------------------------------------------------------- backtest


def dated(years, days=60):
    return [f"{y}-{1 + d // 28:02d}-{1 + d % 28:02d}" for y in years for d in range(days)]


def test_backtest_dominated_stream():
    rng = np.random.default_rng(6)
    dates = dated([2001, 2002, 2003])
    idx, R = synthetic(rng, days=len(dates), k=2, betas=[1.0, 1.0])
    R[:, 1] = R[:, 0] + 0.002
    rep = backtest(R, idx, dates, 0.9)
    assert rep.years == [2002, 2003]
    for w in rep.weights:
        np.testing.assert_allclose(w, [0.0, 1.0])
    held = [np.prod(1 + R[[d.startswith(str(y)) for d in dates], 1]) - 1 for y in (2002, 2003)]
    np.testing.assert_allclose(rep.yearly_returns, held)
    assert rep.value_path[-1] == pytest.approx(np.prod(1 + np.array(held)))
    assert len(rep.value_dates) == len(rep.value_path) == 120


def test_backtest_has_no_look_ahead():
    rng = np.random.default_rng(7)
    dates = dated([2010, 2011, 2012, 2013])
    idx, R = synthetic(rng, days=len(dates), k=3)
    base = backtest(R, idx, dates, 0.9)
    # scrambling the final year must not move any weight chosen before or in it
    last = np.array([d.startswith("2013") for d in dates])
    R2, idx2 = R.copy(), idx.copy()
    R2[last] = rng.normal(0, 0.05, size=R2[last].shape)
    idx2[last] = rng.normal(0, 0.05, size=last.sum())
    moved = backtest(R2, idx2, dates, 0.9)
    for a, b in zip(base.weights, moved.weights):
        np.testing.assert_array_equal(a, b)
    assert base.yearly_returns[:-1] == moved.yearly_returns[:-1]


def test_backtest_gap_year_warns():
    rng = np.random.default_rng(8)
    dates = dated([2001, 2002, 2004, 2005])
    idx, R = synthetic(rng, days=len(dates), k=2)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = backtest(R, idx, dates, 0.9)
    assert rep.years == [2002, 2005]
    assert any("2003 skipped" in str(w.message) for w in caught)
    assert any("2004 skipped" in str(w.message) for w in caught)


def test_backtest_needs_two_years():
    rng = np.random.default_rng(9)
    dates = dated([2001])
    idx, R = synthetic(rng, days=len(dates), k=2)
    with pytest.raises(ValueError):
        backtest(R, idx, dates, 0.9)
    with pytest.raises(ValueError):
        backtest(R[:-1], idx, dates, 0.9)


def test_report_dict_is_json_safe():
    import json

    rng = np.random.default_rng(10)
    dates = dated([2001, 2002])
    idx, R = synthetic(rng, days=len(dates), k=2)
    json.dumps(backtest(R, idx, dates, 0.9).to_dict())
