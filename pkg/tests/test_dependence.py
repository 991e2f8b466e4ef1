from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import antidiagonal, coins, diagonal, joints, random_joint
from discrete_copula.checkerboard import build_checkerboard
from discrete_copula.dependence import (
    CONCEPTS,
    check_concept,
    check_orthant,
    count_upper_sets,
    falsify_concept,
    is_product,
    kendall_tau,
    kendall_tau_copula,
    preservation_suite,
    recheck_witness,
    spearman_rho,
    upper_sets,
)
from discrete_copula.joint import DiscreteJoint

# ---------------------------------------------------------------- brute-force oracles


def brute_upper_sets(shape):
    """Every subset of the grid closed under coordinatewise increase."""
    cells = list(np.ndindex(*shape))
    out = []
    for bits in product([False, True], repeat=len(cells)):
        members = {c for c, b in zip(cells, bits) if b}
        if all(d in members for c in members for d in cells if all(x >= y for x, y in zip(d, c))):
            out.append(np.array(bits))
    return np.array(out)


def compact(j):
    return DiscreteJoint.from_dense(j.dense()).dense()


def oracle(P, concept, tol=1e-12):
    """Direct evaluation of a concept on a bivariate table from its definition."""
    m1, m2 = P.shape
    p = P.ravel()
    sign = 1.0 if concept in ("POD", "PA", "PRD", "WPA") else -1.0
    F1, F2 = np.cumsum(P.sum(1)), np.cumsum(P.sum(0))
    if concept in ("POD", "NOD"):
        for a, b in np.ndindex(m1, m2):
            low = P[: a + 1, : b + 1].sum() - F1[a] * F2[b]
            high = P[a + 1 :, b + 1 :].sum() - (1 - F1[a]) * (1 - F2[b])
            if sign * low < -tol or sign * high < -tol:
                return False
        return True
    if concept == "PA":
        U = brute_upper_sets(P.shape).astype(float)
        cov = (U * p) @ U.T - np.outer(U @ p, U @ p)
        return bool(np.all(cov >= -tol))
    if concept == "NA":
        # disjoint blocks {0}, {1}: upper sets of each coordinate are thresholds
        for a, b in np.ndindex(m1, m2):
            if P[a:, b:].sum() - (1 - (F1[a - 1] if a else 0)) * (1 - (F2[b - 1] if b else 0)) > tol:
                return False
        return True
    if concept in ("PRD", "NRD"):
        for Q in (P, P.T):
            cond = Q / Q.sum(1, keepdims=True)
            tails = np.cumsum(cond[:, ::-1], axis=1)
            if np.any(sign * np.diff(tails, axis=0) < -tol):
                return False
        return True
    if concept in ("WPA", "WNA"):
        for Q in (P, P.T):
            low = np.cumsum(Q, axis=0)
            cond = np.cumsum(low / low.sum(1, keepdims=True), axis=1)
            unc = np.cumsum(Q.sum(0))
            if np.any(sign * (cond - unc) < -tol):
                return False
        return True
    raise ValueError(concept)


# ---------------------------------------------------------------- concordance


def test_tau_examples(diag, anti, indep):
    assert kendall_tau(diag) == pytest.approx(0.5)
    assert kendall_tau(anti) == pytest.approx(-0.5)
    assert kendall_tau(indep) == pytest.approx(0.0, abs=1e-15)
    three = DiscreteJoint.from_atoms({(i, i): 1 / 3 for i in range(3)})
    assert kendall_tau(three) == pytest.approx(2 / 3)


def test_tau_copula_on_diagonal(diag):
    est, se = kendall_tau_copula(build_checkerboard(diag), n=50_000, seed=1)
    assert abs(est - 0.5) < 3 * se


def test_tau_from_samples_matches_exact():
    rng = np.random.default_rng(3)
    u = rng.random((4000, 2))
    est, se = kendall_tau_copula(u)
    assert abs(est) < 4 * se + 1e-3
    comon = np.column_stack([u[:, 0], u[:, 0]])
    assert kendall_tau_copula(comon)[0] == pytest.approx(1.0, abs=1e-3)


def test_rho_examples(diag, anti, indep):
    assert spearman_rho(build_checkerboard(diag)) == pytest.approx(0.75)
    assert spearman_rho(build_checkerboard(anti)) == pytest.approx(-0.75)
    assert spearman_rho(build_checkerboard(indep)) == pytest.approx(0.0, abs=1e-12)


@given(joints(dims=st.just(2)))
def test_tau_rho_swap_symmetry(j):
    swapped = DiscreteJoint(j.axes[::-1], j.index[:, ::-1].copy(), j.mass)
    assert kendall_tau(swapped) == pytest.approx(kendall_tau(j), abs=1e-12)
    assert spearman_rho(build_checkerboard(swapped)) == pytest.approx(spearman_rho(build_checkerboard(j)), abs=1e-12)


@given(joints(dims=st.just(2)))
def test_tau_in_range(j):
    assert -1 - 1e-12 <= kendall_tau(j) <= 1 + 1e-12


# ---------------------------------------------------------------- upper sets


@pytest.mark.parametrize("shape", [(1,), (3,), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_upper_sets_match_brute_force(shape):
    got = upper_sets(shape)
    want = brute_upper_sets(shape)
    assert len(got) == count_upper_sets(shape) == len(want)
    as_set = lambda M: {tuple(r) for r in M.astype(int)}  # noqa: E731
    assert as_set(got) == as_set(want)


def test_three_axes_not_enumerated():
    assert count_upper_sets((2, 2, 2)) is None
    with pytest.raises(ValueError):
        upper_sets((2, 2, 2))


# ---------------------------------------------------------------- verdicts on small examples


def test_diagonal_and_antidiagonal(diag, anti):
    assert check_orthant(diag, "POD").holds == "proven"
    assert check_orthant(anti, "NOD").holds == "proven"
    for c in ("PA", "PRD", "WPA"):
        assert falsify_concept(diag, c).holds == "proven"
    for c in ("NA", "NRD", "WNA"):
        assert falsify_concept(anti, c).holds == "proven"
    v = falsify_concept(diag, "NRD")
    assert v.holds == "refuted" and recheck_witness(diag, v)
    v = check_orthant(diag, "NOD")
    assert v.holds == "refuted" and recheck_witness(diag, v)


def test_independence_satisfies_everything(indep):
    for c in CONCEPTS:
        assert check_concept(indep, c).holds == "proven", c
    three = DiscreteJoint.from_dense(np.full((2, 2, 2), 1 / 8))
    for c in ("POD", "NOD", "NA", "PRD", "NRD", "WPA", "WNA"):
        assert check_concept(three, c).holds == "proven", c


def test_unknown_concept(diag):
    with pytest.raises(ValueError):
        falsify_concept(diag, "XYZ")


def test_witness_json_safe(diag):
    import json

    for c in ("NOD", "NRD", "WNA", "NA"):
        v = check_concept(diag, c)
        assert v.holds == "refuted"
        json.dumps(v.to_dict())


@pytest.mark.parametrize("concept", CONCEPTS)
def test_checkers_match_definition_oracle(concept):
    rng = np.random.default_rng(11)
    for _ in range(150):
        j = random_joint(rng, 2, max_atoms=3)
        P = compact(j)
        v = check_concept(j, concept)
        assert v.exhaustive
        assert (v.holds == "proven") == oracle(P, concept), (concept, P)
        if v.holds == "refuted":
            assert recheck_witness(j, v)


def test_pa_oracle_on_three_axes():
    # no enumeration on three axes: refutations must be genuine, proofs never claimed
    rng = np.random.default_rng(5)
    for _ in range(20):
        j = random_joint(rng, 3, max_atoms=2)
        v = falsify_concept(j, "PA", budget=500)
        assert v.holds in ("refuted", "undetermined")
        if v.holds == "refuted":
            assert recheck_witness(j, v)


# ---------------------------------------------------------------- structural properties


@given(joints(dims=st.integers(2, 3), max_atoms=3))
def test_pod_and_nod_iff_product(j):
    both = check_orthant(j, "POD").holds == "proven" and check_orthant(j, "NOD").holds == "proven"
    assert both == is_product(j)


@given(joints(dims=st.just(2), max_atoms=3))
def test_monotone_transform_preserves_verdicts(j):
    moved = DiscreteJoint(tuple(np.exp(a / 10.0) for a in j.axes), j.index, j.mass)
    for c in CONCEPTS:
        assert check_concept(moved, c).holds == check_concept(j, c).holds


@given(joints(dims=st.just(2), max_atoms=3))
def test_orthant_preserved_by_checkerboard(j):
    for c in ("POD", "NOD"):
        assert preservation_suite(j, c).agree


@pytest.mark.parametrize("concept", ["PA", "NA", "PRD", "NRD", "WPA", "WNA"])
def test_other_concepts_preserved_on_examples(concept):
    for j in (diagonal(), antidiagonal(), coins()):
        rep = preservation_suite(j, concept)
        assert rep.agree, (concept, rep.joint.holds, rep.copula.holds)


def test_recheck_rejects_proofs(indep):
    with pytest.raises(ValueError):
        recheck_witness(indep, check_concept(indep, "PA"))


def test_tau_identity_exact_by_quadrature():
    from discrete_copula.checkerboard import cell_average_density, copula_cdf

    rng = np.random.default_rng(21)
    for _ in range(40):
        j = random_joint(rng, 2)
        c = build_checkerboard(j)
        # C is bilinear on every cell, so 8-point Gauss-Legendre integrates C dC exactly
        tau = 4.0 * np.sum(c.mass * cell_average_density(c, lambda pts: copula_cdf(c, pts))) - 1.0
        assert tau == pytest.approx(kendall_tau(j), abs=1e-12)
