from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from discrete_copula._rng import generator
from discrete_copula.io import joint_from_dict, joint_to_dict
from discrete_copula.joint import (
    DiscreteJoint,
    conditional_slice,
    joint_cdf,
    joint_from_samples,
    joint_survival,
    marginal_of,
    marginals,
    project,
)
from discrete_copula.marginals import marginal_from_samples

from conftest import joints, random_joint


def test_ingestion_examples():
    assert joint_from_samples([(0, 0), (1, 1)]).pmf == {(0, 0): 0.5, (1, 1): 0.5}
    j = joint_from_samples([(1, 2), (1, 2), (3, 4)])
    assert j.atoms.tolist() == [[1, 2], [3, 4]]
    np.testing.assert_allclose(j.mass, [2 / 3, 1 / 3])


@pytest.mark.parametrize("rows, msg", [([], "no data"), ([(1, 2), (3,)], "ragged"), ([(1, np.nan)], "non-finite")])
def test_ingestion_errors(rows, msg):
    with pytest.raises(ValueError, match=msg):
        joint_from_samples(rows)


def test_rounded_normal_sample_matches_column_marginals():
    z = generator(3).standard_normal((1000, 2)) * 10
    j = joint_from_samples(z, rounding=1)
    assert abs(j.mass.sum() - 1.0) < 1e-12
    assert j.n_samples == 1000
    for i in range(2):
        m = marginal_from_samples(z[:, i], rounding=1)
        np.testing.assert_array_equal(marginal_of(j, i).support, m.support)
        np.testing.assert_allclose(marginal_of(j, i).masses, m.masses, atol=1e-15)


def test_cdf_examples(diag):
    assert joint_cdf(diag, (0, 0)) == 0.5
    assert joint_cdf(diag, (np.inf, np.inf)) == 1.0
    with pytest.raises(ValueError, match="arity"):
        joint_cdf(diag, (0, 0, 0))


@given(joints())
def test_cdf_and_survival_match_brute_force(j):
    pts = np.array(list(product(*[np.concatenate(([a[0] - 1], a)) for a in j.axes])))
    brute_cdf = [sum(p for x, p in zip(j.atoms, j.mass) if np.all(x <= q)) for q in pts]
    brute_surv = [sum(p for x, p in zip(j.atoms, j.mass) if np.all(x > q)) for q in pts]
    np.testing.assert_allclose(joint_cdf(j, pts), brute_cdf, atol=1e-14)
    np.testing.assert_allclose(joint_survival(j, pts), brute_surv, atol=1e-14)


@given(joints(max_atoms=4))
def test_cdf_is_d_increasing_on_the_grid(j):
    P = j.dense()
    F = P.copy()
    for ax in range(P.ndim):
        F = np.cumsum(F, axis=ax)
    # box volumes recovered by differencing the cdf are the (nonnegative) cell masses
    V = F.copy()
    for ax in range(P.ndim):
        V = np.diff(V, axis=ax, prepend=0.0)
    assert np.all(V >= -1e-15)
    np.testing.assert_allclose(V, P, atol=1e-14)


@given(joints())
def test_marginals_sum_to_one(j):
    for m in marginals(j):
        assert abs(m.masses.sum() - 1.0) <= 1e-12


def test_marginals_are_row_and_column_sums():
    j = random_joint(np.random.default_rng(1), 3, 4)
    P = j.dense()
    for i in range(3):
        np.testing.assert_allclose(marginal_of(j, i).masses, P.sum(axis=tuple(k for k in range(3) if k != i)), atol=1e-15)


def test_slices():
    j = DiscreteJoint.from_dense(np.outer([0.2, 0.8], [0.1, 0.3, 0.6]))
    for k in range(2):
        np.testing.assert_allclose(conditional_slice(j, 0, k).mass, [0.1, 0.3, 0.6])
    s = conditional_slice(DiscreteJoint.from_atoms({(0, 0): 0.5, (1, 1): 0.5}), 0, 0)
    assert s.atoms.tolist() == [[0.0]] and s.mass.tolist() == [1.0]
    R = np.random.default_rng(5).random((4, 4)) + 0.01
    R /= R.sum()
    j4 = DiscreteJoint.from_dense(R)
    for k in range(4):
        np.testing.assert_allclose(conditional_slice(j4, 0, k).mass, R[k] / R[k].sum(), atol=1e-15)
    with pytest.raises(ValueError, match="zero-mass"):
        conditional_slice(j4, 0, 7)


@given(joints(dims=st.integers(2, 3)))
def test_mixing_slices_reproduces_pmf(j):
    P = j.dense()
    m0 = marginal_of(j, 0).masses
    rebuilt = np.zeros_like(P)
    for k in range(j.shape[0]):
        s = conditional_slice(j, 0, k)
        sub = np.zeros(P.shape[1:])
        pos = tuple(np.searchsorted(j.axes[a + 1], s.axes[a])[s.index[:, a]] for a in range(j.dims - 1))
        sub[pos] = s.mass
        rebuilt[k] = m0[k] * sub
    np.testing.assert_allclose(rebuilt, P, atol=1e-15)


def test_project_and_duplicates():
    j = random_joint(np.random.default_rng(2), 3, 3)
    np.testing.assert_allclose(project(j, [2, 0]).dense(), j.dense().sum(axis=1).T, atol=1e-15)
    with pytest.raises(ValueError, match="duplicate"):
        DiscreteJoint(([0.0, 1.0],), [[0], [0]], [0.5, 0.5])


@given(joints())
def test_json_round_trip(j):
    back = joint_from_dict(joint_to_dict(j))
    assert all(np.array_equal(a, b) for a, b in zip(back.axes, j.axes))
    assert np.array_equal(back.index, j.index) and np.array_equal(back.mass, j.mass)
