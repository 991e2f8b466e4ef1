from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from discrete_copula.joint import DiscreteJoint

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def random_joint(rng: np.random.Generator, d: int, max_atoms: int = 4, zero_frac: float = 0.3) -> DiscreteJoint:
    """Random joint on a small grid; some cells emptied, every axis value keeps mass."""
    shape = tuple(int(rng.integers(1, max_atoms + 1)) for _ in range(d))
    P = rng.gamma(0.7, size=shape)
    P[rng.random(shape) < zero_frac] = 0.0
    if P.sum() == 0:
        P.flat[0] = 1.0
    P /= P.sum()
    axes = [np.sort(rng.choice(np.arange(-20, 21), size=s, replace=False)).astype(float) for s in shape]
    return DiscreteJoint.from_dense(P, axes)


def diagonal():
    return DiscreteJoint.from_atoms({(0, 0): 0.5, (1, 1): 0.5})


def antidiagonal():
    return DiscreteJoint.from_atoms({(0, 1): 0.5, (1, 0): 0.5})


def coins():
    return DiscreteJoint.from_atoms({(0, 0): 0.25, (0, 1): 0.25, (1, 0): 0.25, (1, 1): 0.25})


@pytest.fixture
def diag():
    return diagonal()


@pytest.fixture
def anti():
    return antidiagonal()


@pytest.fixture
def indep():
    return coins()


@st.composite
def joints(draw, dims=st.integers(1, 3), max_atoms: int = 4):
    seed = draw(st.integers(0, 2**32 - 1))
    d = draw(dims)
    return random_joint(np.random.default_rng(seed), d, max_atoms)


@st.composite
def marginals_st(draw, max_atoms: int = 8):
    n = draw(st.integers(1, max_atoms))
    support = sorted(draw(st.sets(st.integers(-1000, 1000), min_size=n, max_size=n)))
    w = np.array(draw(st.lists(st.integers(1, 100), min_size=n, max_size=n)), dtype=float)
    from discrete_copula.marginals import DiscreteMarginal

    return DiscreteMarginal(np.array(support, dtype=float) / 10.0, w / w.sum())
