"""Concordance measures and checkers for positive/negative dependence concepts.

Orthant dependence is decided exactly.  Association, regression dependence and
weak association are reduced to inequalities over indicator functions of upper
(or lower) sets of the finite grid; those sets are enumerated when the relevant
sub-grid has at most two axes and a manageable number of staircases, and
sampled otherwise.  A sampled search can refute but never proves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement, product
from math import comb
from typing import Literal

import numpy as np

from . import _rng
from .checkerboard import CheckerboardCopula, build_checkerboard, copula_cdf, copula_survival, sample, to_joint
from .joint import DiscreteJoint

TOL = 1e-12
MAX_SETS = 20000
MAX_PAIRS = 2 * 10**8

Holds = Literal["proven", "refuted", "undetermined"]
POSITIVE = {"POD", "WPA", "PA", "PRD"}
CONCEPTS = ("POD", "NOD", "WPA", "WNA", "PA", "NA", "PRD", "NRD")


@dataclass
class DependenceVerdict:
    concept: str
    holds: Holds
    witness: dict | None = None
    exhaustive: bool = True
    checked: int = 0

    def __post_init__(self):
        if self.holds == "refuted" and self.witness is None:
            raise ValueError("a refutation needs a witness")

    def to_dict(self) -> dict:
        return {
            "concept": self.concept,
            "holds": self.holds,
            "exhaustive": self.exhaustive,
            "checked": self.checked,
            "witness": self.witness,
        }


def _dense(j: DiscreteJoint) -> np.ndarray:
    # drop axis values without mass so conditionals are always defined
    return DiscreteJoint.from_dense(j.dense()).dense()


# ---------------------------------------------------------------- concordance


def kendall_tau(j: DiscreteJoint, block: int = 2048) -> float:
    """``P(concordant) - P(discordant)`` for two independent copies; ties count zero."""
    if j.dims != 2:
        raise ValueError("Kendall's tau needs a bivariate law")
    a, p = j.atoms, j.mass
    total = 0.0
    for s in range(0, len(p), block):
        d1 = np.sign(a[s : s + block, None, 0] - a[None, :, 0])
        d2 = np.sign(a[s : s + block, None, 1] - a[None, :, 1])
        total += p[s : s + block] @ (d1 * d2) @ p
    return float(total)


def kendall_tau_copula(c, n: int = 100_000, seed: int = 0, threads: int | None = None) -> tuple[float, float]:
    """Monte Carlo ``4 E[C(U)] - 1`` with ``U ~ C``; returns ``(estimate, standard error)``.

    ``c`` is a bivariate :class:`CheckerboardCopula` or an ``(n, 2)`` array of
    copula draws, in which case the empirical copula of the draws is used.
    """
    if isinstance(c, CheckerboardCopula):
        if c.dims != 2:
            raise ValueError("Kendall's tau needs a bivariate copula")
        u = sample(c, n, seed, threads=threads)
        cu = copula_cdf(c, u)
    else:
        u = np.asarray(c, dtype=float)
        if u.ndim != 2 or u.shape[1] != 2:
            raise ValueError("copula samples must have shape (n, 2)")
        # empirical C(U_k) = #{l : U_l <= U_k} / n by sorting on u_1 and counting u_2 ranks in a Fenwick tree
        order = np.lexsort((u[:, 1], u[:, 0]))
        ranks2 = np.argsort(np.argsort(u[order, 1], kind="stable"), kind="stable")
        cu = np.empty(len(u))
        cu[order] = _dominance_counts(ranks2) / len(u)
    est = 4.0 * cu.mean() - 1.0
    se = 4.0 * cu.std(ddof=1) / np.sqrt(len(cu))
    return float(est), float(se)


def _dominance_counts(r: np.ndarray) -> np.ndarray:
    """For each position k, ``#{l <= k : r[l] <= r[k]}`` (binary indexed tree)."""
    n = len(r)
    tree = np.zeros(n + 1, dtype=np.int64)
    out = np.empty(n)
    for k, v in enumerate(r.tolist()):
        i = v + 1
        while i <= n:
            tree[i] += 1
            i += i & -i
        i, s = v + 1, 0
        while i > 0:
            s += tree[i]
            i -= i & -i
        out[k] = s
    return out


def spearman_rho(c: CheckerboardCopula) -> float:
    """``12 E[U_1 U_2] - 3``; within a cell the coordinates are independent uniforms."""
    if c.dims != 2:
        raise ValueError("Spearman's rho needs a bivariate copula")
    lo, hi = c.cell_bounds()
    mid = 0.5 * (lo + hi)
    return float(12.0 * np.sum(c.mass * mid[:, 0] * mid[:, 1]) - 3.0)


# ---------------------------------------------------------------- orthant dependence


def _orthant_tables(P: np.ndarray):
    """Lower-orthant CDF and upper-orthant survival on the grid padded with a 'below all atoms' level."""
    Q = np.pad(P, [(1, 0)] * P.ndim)
    F = Q.copy()
    for ax in range(Q.ndim):
        F = np.cumsum(F, axis=ax)
    S = Q.copy()
    for ax in range(Q.ndim):
        S = np.flip(np.cumsum(np.flip(S, axis=ax), axis=ax), axis=ax)
        S = np.concatenate([np.take(S, range(1, S.shape[ax]), axis=ax), np.zeros_like(np.take(S, [0], axis=ax))], axis=ax)
    margs = [F[tuple([slice(None) if a == ax else -1 for a in range(Q.ndim)])] for ax in range(Q.ndim)]
    prodF = margs[0]
    prodS = 1.0 - margs[0]
    for m in margs[1:]:
        prodF = np.multiply.outer(prodF, m)
        prodS = np.multiply.outer(prodS, 1.0 - m)
    return F, S, prodF, prodS


def _orthant_verdict(kind, F, S, prodF, prodS, point_of, checked, tol) -> DependenceVerdict:
    sign = 1.0 if kind == "POD" else -1.0
    for label, lhs, rhs in (("lower", F, prodF), ("upper", S, prodS)):
        bad = sign * (lhs - rhs) < -tol
        if bad.any():
            k = tuple(int(i) for i in np.argwhere(bad)[0])
            return DependenceVerdict(
                kind,
                "refuted",
                {"orthant": label, "point": point_of(k), "joint": float(lhs[k]), "product": float(rhs[k])},
                True,
                checked,
            )
    return DependenceVerdict(kind, "proven", None, True, checked)


def check_orthant(obj: DiscreteJoint | CheckerboardCopula, kind: str, refine_by: int = 3, tol: float = TOL) -> DependenceVerdict:
    """Exact POD/NOD verdict.

    A joint law is checked at every atom tuple (each coordinate also taking a
    value below all atoms).  A checkerboard copula is checked at the corners of
    its grid refined ``refine_by``-fold, through :func:`copula_cdf` and
    :func:`copula_survival`; both differences to the product are multilinear
    inside a cell, so corners suffice.
    """
    kind = kind.upper()
    if kind not in ("POD", "NOD"):
        raise ValueError("kind must be POD or NOD")
    if isinstance(obj, CheckerboardCopula):
        axes = []
        for b in obj.breakpoints:
            fine = (b[:-1, None] + np.arange(refine_by)[None, :] * (np.diff(b)[:, None] / refine_by)).ravel()
            axes.append(np.concatenate((fine, [1.0])))
        pts = np.array(list(product(*axes)))
        shape = tuple(a.size for a in axes)
        F = copula_cdf(obj, pts).reshape(shape)
        S = copula_survival(obj, pts).reshape(shape)
        prodF = np.prod(pts, axis=1).reshape(shape)
        prodS = np.prod(1.0 - pts, axis=1).reshape(shape)
        point_of = lambda k: [float(axes[i][k[i]]) for i in range(len(k))]  # noqa: E731
        return _orthant_verdict(kind, F, S, prodF, prodS, point_of, pts.shape[0], tol)
    P = _dense(obj)
    F, S, prodF, prodS = _orthant_tables(P)
    axes = DiscreteJoint.from_dense(obj.dense(), obj.axes).axes

    def point_of(k):
        return [float(axes[i][k[i] - 1]) if k[i] > 0 else float("-inf") for i in range(len(k))]

    return _orthant_verdict(kind, F, S, prodF, prodS, point_of, F.size, tol)


# ---------------------------------------------------------------- upper sets on small grids


def count_upper_sets(shape: tuple[int, ...]) -> int | None:
    if len(shape) == 1:
        return shape[0] + 1
    if len(shape) == 2:
        return comb(shape[0] + shape[1], shape[0])
    return None


def upper_sets(shape: tuple[int, ...]) -> np.ndarray:
    """All upper sets of a 1- or 2-axis grid as a boolean ``(n_sets, prod(shape))`` matrix.

    Order: by threshold vector, lexicographically; the empty set comes first.
    """
    if len(shape) == 1:
        m = shape[0]
        t = np.arange(m, -1, -1)
        return np.arange(m)[None, :] >= t[:, None]
    if len(shape) == 2:
        m1, m2 = shape
        # thresholds t_a nonincreasing in a: {(a, b) : b >= t_a}
        ts = np.array([seq[::-1] for seq in combinations_with_replacement(range(m2 + 1), m1)])[::-1]
        return (np.arange(m2)[None, None, :] >= ts[:, :, None]).reshape(len(ts), m1 * m2)
    raise ValueError("enumeration supports at most two axes")


def random_upper_sets(shape: tuple[int, ...], n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` random upper sets generated by 1-3 minimal points; some are cylinders."""
    grid = np.array(list(np.ndindex(*shape)))
    out = np.zeros((n, grid.shape[0]), dtype=bool)
    dims = np.array(shape)
    for s in range(n):
        k = rng.integers(1, 4)
        gens = rng.integers(0, dims, size=(k, len(shape)))
        if rng.random() < 0.3:
            free = rng.random(len(shape)) < 0.5
            gens[:, free] = 0
        out[s] = np.any(np.all(grid[:, None, :] >= gens[None, :, :], axis=2), axis=1)
    return out


def _members(mask: np.ndarray, shape) -> list[list[int]]:
    return [list(map(int, np.unravel_index(f, shape))) for f in np.flatnonzero(mask)]


def _mask_from_members(members, shape) -> np.ndarray:
    mask = np.zeros(int(np.prod(shape)), dtype=bool)
    if members:
        mask[np.ravel_multi_index(np.array(members).T, shape)] = True
    return mask


def _sets_for(shape, budget, rng):
    n = count_upper_sets(shape)
    if n is not None and n <= MAX_SETS:
        return upper_sets(shape), True
    return random_upper_sets(shape, budget, rng), False


# ---------------------------------------------------------------- association


def _first_violation(cov_fn, n_rows, n_cols, sign, tol, block=512):
    """Scan a covariance matrix in row blocks; return ``(row, col, value)`` of the first violation."""
    for s in range(0, n_rows, block):
        cov = cov_fn(slice(s, min(s + block, n_rows)))
        bad = sign * cov < -tol
        if bad.any():
            r, c = np.argwhere(bad)[0]
            return s + int(r), int(c), float(cov[r, c])
    return None


def _check_pa(P, budget, rng, tol, sign=1.0, concept="PA"):
    shape = P.shape
    p = P.ravel()
    n = count_upper_sets(shape)
    exhaustive = n is not None and n * n <= MAX_PAIRS
    if exhaustive:
        M = upper_sets(shape).astype(float)
        Mp = M @ p
        hit = _first_violation(lambda sl: (M[sl] * p) @ M.T - np.outer(Mp[sl], Mp), len(M), len(M), sign, tol)
        checked = len(M) ** 2
        A = B = M
    else:
        A = random_upper_sets(shape, budget, rng).astype(float)
        B = random_upper_sets(shape, budget, rng).astype(float)
        cov = np.einsum("sk,k,sk->s", A, p, B) - (A @ p) * (B @ p)
        bad = np.flatnonzero(sign * cov < -tol)
        hit = (int(bad[0]), int(bad[0]), float(cov[bad[0]])) if bad.size else None
        checked = budget
    if hit:
        r, c, v = hit
        dims = list(range(P.ndim))
        w = {"A": dims, "B": dims, "set_A": _members(A[r] > 0, shape), "set_B": _members(B[c] > 0, shape), "cov": v}
        return DependenceVerdict(concept, "refuted", w, exhaustive, checked)
    return DependenceVerdict(concept, "proven" if exhaustive else "undetermined", None, exhaustive, checked)


def _check_na(P, budget, rng, tol):
    d = P.ndim
    exhaustive, checked = True, 0
    dims = list(range(d))
    pairs = []
    for ka in range(1, d):
        for A in combinations(dims, ka):
            rest = [x for x in dims if x not in A]
            for kb in range(1, len(rest) + 1):
                for B in combinations(rest, kb):
                    if A < B:
                        pairs.append((list(A), list(B)))
    for A, B in pairs:
        other = [x for x in dims if x not in A + B]
        Q = P.sum(axis=tuple(other)) if other else P
        # move to (A..., B...) order
        order = [sorted(A + B).index(x) for x in A + B]
        Q = np.transpose(Q, order)
        shA = tuple(P.shape[x] for x in A)
        shB = tuple(P.shape[x] for x in B)
        Qm = Q.reshape(int(np.prod(shA)), int(np.prod(shB)))
        pA, pB = Qm.sum(axis=1), Qm.sum(axis=0)
        SA, exA = _sets_for(shA, budget, rng)
        SB, exB = _sets_for(shB, budget, rng)
        SA, SB = SA.astype(float), SB.astype(float)
        exhaustive &= exA and exB
        if exA and exB:
            hit = _first_violation(lambda sl: SA[sl] @ Qm @ SB.T - np.outer(SA[sl] @ pA, SB @ pB), len(SA), len(SB), -1.0, tol)
            checked += len(SA) * len(SB)
        else:
            m = min(len(SA), len(SB))
            SA, SB = SA[:m], SB[:m]
            cov = np.einsum("sa,ab,sb->s", SA, Qm, SB) - (SA @ pA) * (SB @ pB)
            bad = np.flatnonzero(cov > tol)
            hit = (int(bad[0]), int(bad[0]), float(cov[bad[0]])) if bad.size else None
            checked += m
        if hit:
            r, c, v = hit
            w = {"A": A, "B": B, "set_A": _members(SA[r] > 0, shA), "set_B": _members(SB[c] > 0, shB), "cov": v}
            return DependenceVerdict("NA", "refuted", w, exhaustive, checked)
    return DependenceVerdict("NA", "proven" if exhaustive else "undetermined", None, exhaustive, checked)


# ---------------------------------------------------------------- regression and weak association


def _split(P, i):
    Pi = np.moveaxis(P, i, 0)
    rest = Pi.shape[1:]
    return Pi.reshape(Pi.shape[0], -1), rest


def _check_rd(P, concept, budget, rng, tol):
    sign = 1.0 if concept == "PRD" else -1.0
    exhaustive, checked = True, 0
    for i in range(P.ndim):
        R, rest = _split(P, i)
        cond = R / R.sum(axis=1, keepdims=True)
        U, ex = _sets_for(rest, budget, rng)
        exhaustive &= ex
        probs = cond @ U.T.astype(float)
        diff = sign * np.diff(probs, axis=0)
        checked += diff.size
        bad = diff < -tol
        if bad.any():
            k, s = (int(x) for x in np.argwhere(bad)[0])
            w = {"i": i, "atoms": [k, k + 1], "set": _members(U[s], rest), "probs": [float(probs[k, s]), float(probs[k + 1, s])]}
            return DependenceVerdict(concept, "refuted", w, exhaustive, checked)
    return DependenceVerdict(concept, "proven" if exhaustive else "undetermined", None, exhaustive, checked)


def _check_wa(P, concept, budget, rng, tol):
    sign = 1.0 if concept == "WPA" else -1.0
    exhaustive, checked = True, 0
    for i in range(P.ndim):
        R, rest = _split(P, i)
        low = np.cumsum(R, axis=0)
        low = low / low.sum(axis=1, keepdims=True)
        U, ex = _sets_for(rest, budget, rng)
        exhaustive &= ex
        D = (~U).astype(float)
        cond = low @ D.T
        uncond = R.sum(axis=0) @ D.T
        gap = sign * (cond - uncond[None, :])
        checked += gap.size
        bad = gap < -tol
        if bad.any():
            k, s = (int(x) for x in np.argwhere(bad)[0])
            w = {"i": i, "x_index": k, "set": _members(~U[s], rest), "conditional": float(cond[k, s]), "unconditional": float(uncond[s])}
            return DependenceVerdict(concept, "refuted", w, exhaustive, checked)
    return DependenceVerdict(concept, "proven" if exhaustive else "undetermined", None, exhaustive, checked)


def falsify_concept(j: DiscreteJoint, concept: str, budget: int = 5000, seed: int = 0, tol: float = TOL) -> DependenceVerdict:
    """Search for a violation of ``concept`` in ``{PA, NA, PRD, NRD, WPA, WNA}`` (POD/NOD are delegated)."""
    concept = concept.upper()
    if concept in ("POD", "NOD"):
        return check_orthant(j, concept, tol=tol)
    P = _dense(j)
    rng = _rng.generator(seed)
    if P.ndim == 1:
        return DependenceVerdict(concept, "proven", None, True, 0)
    if concept == "PA":
        return _check_pa(P, budget, rng, tol)
    if concept == "NA":
        return _check_na(P, budget, rng, tol)
    if concept in ("PRD", "NRD"):
        return _check_rd(P, concept, budget, rng, tol)
    if concept in ("WPA", "WNA"):
        return _check_wa(P, concept, budget, rng, tol)
    raise ValueError(f"unknown concept {concept!r}")


def check_concept(obj, concept: str, budget: int = 5000, seed: int = 0) -> DependenceVerdict:
    concept = concept.upper()
    if concept in ("POD", "NOD"):
        return check_orthant(obj, concept)
    if isinstance(obj, CheckerboardCopula):
        obj = to_joint(obj)
    return falsify_concept(obj, concept, budget, seed)


def recheck_witness(j: DiscreteJoint, verdict: DependenceVerdict, tol: float = TOL) -> bool:
    """Recompute a refutation from its witness alone; True when the violation is confirmed."""
    if verdict.holds != "refuted":
        raise ValueError("only refutations carry witnesses")
    w, concept = verdict.witness, verdict.concept
    j = DiscreteJoint.from_dense(j.dense(), j.axes)
    P = j.dense()
    sign = 1.0 if concept in POSITIVE else -1.0
    if concept in ("POD", "NOD"):
        x = np.array(w["point"])
        marg = [j.axes[i] for i in range(j.dims)]
        if w["orthant"] == "lower":
            lhs = float(P[np.ix_(*[a <= xi for a, xi in zip(marg, x)])].sum())
            rhs = np.prod([P.sum(axis=tuple(k for k in range(j.dims) if k != i))[a <= xi].sum() for i, (a, xi) in enumerate(zip(marg, x))])
        else:
            lhs = float(P[np.ix_(*[a > xi for a, xi in zip(marg, x)])].sum())
            rhs = np.prod([P.sum(axis=tuple(k for k in range(j.dims) if k != i))[a > xi].sum() for i, (a, xi) in enumerate(zip(marg, x))])
        return sign * (lhs - rhs) < -tol
    if concept in ("PA", "NA"):
        A, B = w["A"], w["B"]
        grid = np.array(list(np.ndindex(*P.shape)))
        p = P.ravel()
        inA = np.array([list(g[A]) in w["set_A"] for g in grid])
        inB = np.array([list(g[B]) in w["set_B"] for g in grid])
        cov = p @ (inA & inB) - (p @ inA) * (p @ inB)
        return sign * cov < -tol
    if concept in ("PRD", "NRD"):
        R, rest = _split(P, w["i"])
        mask = _mask_from_members(w["set"], rest)
        k0, k1 = w["atoms"]
        p0 = R[k0, mask].sum() / R[k0].sum()
        p1 = R[k1, mask].sum() / R[k1].sum()
        return sign * (p1 - p0) < -tol
    if concept in ("WPA", "WNA"):
        R, rest = _split(P, w["i"])
        mask = _mask_from_members(w["set"], rest)
        low = R[: w["x_index"] + 1].sum(axis=0)
        cond = low[mask].sum() / low.sum()
        return sign * (cond - R.sum(axis=0)[mask].sum()) < -tol
    raise ValueError(f"unknown concept {concept!r}")


@dataclass
class PreservationReport:
    concept: str
    joint: DependenceVerdict
    copula: DependenceVerdict
    agree: bool = field(init=False)

    def __post_init__(self):
        self.agree = self.joint.holds == self.copula.holds


def preservation_suite(j: DiscreteJoint, concept: str, refine_by: int = 2, budget: int = 5000, seed: int = 0) -> PreservationReport:
    """Verdict on ``j`` against the verdict on its checkerboard copula.

    POD/NOD are evaluated on the copula itself (grid refined ``refine_by + 1``
    fold); the other concepts on the copula discretised on its ``refine_by``-fold
    refined grid.
    """
    concept = concept.upper()
    c = build_checkerboard(j)
    if concept in ("POD", "NOD"):
        return PreservationReport(concept, check_orthant(j, concept), check_orthant(c, concept, refine_by=refine_by + 1))
    return PreservationReport(
        concept,
        falsify_concept(j, concept, budget, seed),
        falsify_concept(to_joint(c, refine_by), concept, budget, seed),
    )


def is_product(j: DiscreteJoint, tol: float = 1e-12) -> bool:
    P = _dense(j)
    prod_ = np.ones(())
    for ax in range(P.ndim):
        prod_ = np.multiply.outer(prod_, P.sum(axis=tuple(k for k in range(P.ndim) if k != ax)))
    return bool(np.allclose(P, prod_, rtol=0, atol=tol))


__all__ = [
    "CONCEPTS",
    "DependenceVerdict",
    "PreservationReport",
    "check_concept",
    "check_orthant",
    "falsify_concept",
    "is_product",
    "kendall_tau",
    "kendall_tau_copula",
    "preservation_suite",
    "recheck_witness",
    "spearman_rho",
]
