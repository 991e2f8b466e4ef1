import io

import numpy as np
import pytest
from scipy import integrate
from hypothesis import given
from hypothesis import strategies as st

from discrete_copula._rng import generator
from discrete_copula.io import marginal_to_csv_text, read_marginal_csv
from discrete_copula.marginals import DiscreteMarginal, cdf, cdf_left, marginal_from_samples, pit, quantile, round_values

from conftest import marginals_st

COIN = DiscreteMarginal([0.0, 1.0], [0.5, 0.5])


def test_rounding_half_away_from_zero_on_decimal_literal():
    m = marginal_from_samples([0.14, 0.15, 0.06], rounding=1)
    np.testing.assert_allclose(m.support, [0.1, 0.2])
    np.testing.assert_allclose(m.masses, [2 / 3, 1 / 3])
    assert list(round_values([-0.15, 2.675, 0.25], [1, 2, 1][0])) == [-0.2, 2.7, 0.3]
    assert round_values([2.675], 2)[0] == 2.68
    assert round_values([0.25], 1, "half_even")[0] == 0.2


def test_rounding_never_yields_negative_zero():
    out = round_values([-0.04], 1)
    assert out[0] == 0.0 and not np.signbit(out[0])


def test_point_mass_and_normal_sample_support_size():
    m = marginal_from_samples([5.0])
    assert m.support.tolist() == [5.0] and m.masses.tolist() == [1.0]
    x = generator(7).standard_normal(1000) * 10
    assert 300 <= len(marginal_from_samples(x, rounding=1)) <= 600


@pytest.mark.parametrize("bad, msg", [([], "no data"), ([1.0, np.nan], "non-finite"), ([np.inf], "non-finite")])
def test_ingestion_errors(bad, msg):
    with pytest.raises(ValueError, match=msg):
        marginal_from_samples(bad)


@pytest.mark.parametrize(
    "support, masses",
    [([0, 0], [0.5, 0.5]), ([1, 0], [0.5, 0.5]), ([0, 1], [0.6, 0.6]), ([0, 1], [1.0, 0.0]), ([0, 1], [1e-16, 1 - 1e-16])],
)
def test_invalid_marginals_rejected(support, masses):
    with pytest.raises(ValueError):
        DiscreteMarginal(support, masses)


def test_cdf_quantile_conventions():
    pm = DiscreteMarginal.point_mass(5.0)
    assert cdf(pm, 5.0) == 1.0 and cdf_left(pm, 5.0) == 0.0
    assert np.all(quantile(pm, [1e-9, 0.3, 1.0]) == 5.0)
    assert quantile(COIN, 0.5) == 0.0 and quantile(COIN, 0.500001) == 1.0
    assert cdf(COIN, 0.5) == 0.5 and cdf_left(COIN, 1.0) == 0.5
    assert quantile(COIN, 0.0) == 0.0
    with pytest.raises(ValueError):
        quantile(COIN, 1.5)


def test_pit_examples():
    assert pit(COIN, 1.0, 0.5) == 0.75
    pm = DiscreteMarginal.point_mass(5.0)
    np.testing.assert_array_equal(pit(pm, [5.0, 5.0], [0.2, 0.9]), [0.2, 0.9])
    with pytest.raises(ValueError, match="not an atom"):
        pit(COIN, 0.5, 0.5)


@given(marginals_st(), st.lists(st.floats(1e-9, 1.0), min_size=1, max_size=20))
def test_pit_round_trip(m, vs):
    for k, x in enumerate(m.support):
        v = vs[k % len(vs)]
        assert quantile(m, pit(m, x, v)) == x


@given(marginals_st())
def test_pit_pushforward_is_exactly_uniform(m):
    # P(U <= u) = sum_k p_k * clip((u - F(x_k-)) / p_k, 0, 1) must equal u
    b = m.breakpoints
    u = np.concatenate((b, np.linspace(0, 1, 1000)))
    mix = np.clip((u[:, None] - b[None, :-1]) / m.masses[None, :], 0.0, 1.0) @ m.masses
    np.testing.assert_allclose(mix, u, atol=1e-12)


@given(marginals_st())
def test_quantile_of_cdf_is_identity_on_support(m):
    np.testing.assert_array_equal(quantile(m, cdf(m, m.support)), m.support)
    np.testing.assert_allclose(cdf(m, m.support) - cdf_left(m, m.support), m.masses, atol=1e-15)


@given(marginals_st())
def test_interp_quantile_mean_matches_quadrature(m):
    lo, hi = np.array([0.0, 0.1, 0.37]), np.array([1.0, 0.5, 0.38])
    mid = 0.5 * (m.breakpoints[:-1] + m.breakpoints[1:])
    oracle = []
    for a, b in zip(lo, hi):
        kinks = [t for t in mid if a < t < b]
        val, _ = integrate.quad(lambda t: float(m.interp_quantile(t)), a, b, points=kinks or None, limit=200)
        oracle.append(val / (b - a))
    scale = max(1.0, float(np.abs(m.support).max()))
    np.testing.assert_allclose(m.interp_quantile_mean(lo, hi), oracle, atol=1e-9 * scale)


def test_interp_quantile_passes_through_cell_midpoints():
    m = DiscreteMarginal([1.0, 2.0, 4.0], [0.2, 0.3, 0.5])
    np.testing.assert_allclose(m.interp_quantile([0.1, 0.35, 0.75]), [1.0, 2.0, 4.0])
    assert m.interp_quantile(0.0) == 1.0 and m.interp_quantile(1.0) == 4.0


@given(marginals_st())
def test_csv_round_trip_is_bit_exact(m):
    back = read_marginal_csv(io.StringIO(marginal_to_csv_text(m)))
    assert np.array_equal(back.support, m.support) and np.array_equal(back.masses, m.masses)
