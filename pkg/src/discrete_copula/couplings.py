"""Couplings ``V`` of a discrete vector and the copulas they induce.

Every copula of ``X`` arises as the law of ``U_i = F_i(X_i-) + V_i * dF_i(X_i)``
for a uniform vector ``V`` whose ``i``-th coordinate is independent of ``X_i``.
The named recipes here all share one structure: given the atom tuple ``x``,
each ``U_i`` is uniform on a sub-interval of its strip, independently across
``i``.  :func:`cell_intervals` returns those sub-intervals, which makes exact
(simulation-free) expectations possible downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy import stats

from . import _rng
from .joint import DiscreteJoint, marginals, project
from .marginals import DiscreteMarginal

Kind = Literal["independent", "comonotone", "antitone", "custom"]
VSampler = Callable[[np.ndarray, np.random.Generator], np.ndarray]


@dataclass(frozen=True)
class CouplingSpec:
    """Recipe for the randomiser vector ``V``.

    ``comonotone`` / ``antitone`` make ``V[target]`` the (reversed) conditional
    rank of ``X[driver]`` given ``X[target]``, ties inside an atom of the driver
    spread by an independent uniform; every other ``V_i`` is an independent
    uniform.  ``custom`` calls ``sampler(x, rng) -> v`` with ``x`` of shape
    ``(n, d)``.  Dimensions are 0-based.
    """

    kind: Kind = "independent"
    target: int | None = None
    driver: int | None = None
    sampler: VSampler | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind in ("comonotone", "antitone"):
            if self.target is None or self.driver is None:
                raise ValueError(f"{self.kind} coupling needs target and driver")
            if self.target == self.driver:
                raise ValueError("target and driver must differ")
        elif self.kind == "custom":
            if self.sampler is None:
                raise ValueError("custom coupling needs a sampler")
        elif self.kind != "independent":
            raise ValueError(f"unknown coupling kind {self.kind!r}")

    @classmethod
    def independent(cls) -> "CouplingSpec":
        return cls("independent")

    @classmethod
    def comonotone(cls, target: int, driver: int) -> "CouplingSpec":
        return cls("comonotone", target, driver)

    @classmethod
    def antitone(cls, target: int, driver: int) -> "CouplingSpec":
        return cls("antitone", target, driver)

    @classmethod
    def custom(cls, sampler: VSampler) -> "CouplingSpec":
        return cls("custom", sampler=sampler)

    @classmethod
    def parse(cls, text: str, one_based: bool = True) -> "CouplingSpec":
        """``independent`` | ``comonotone:t,r`` | ``antitone:t,r``."""
        name, _, rest = text.strip().partition(":")
        name = name.lower()
        if name == "independent" and not rest:
            return cls.independent()
        if name in ("comonotone", "antitone"):
            try:
                t, r = (int(s) for s in rest.split(","))
            except ValueError:
                raise ValueError(f"expected {name}:target,driver, got {text!r}") from None
            off = 1 if one_based else 0
            return cls(name, t - off, r - off)
        raise ValueError(f"unknown coupling spec {text!r}")

    def label(self, one_based: bool = True) -> str:
        if self.kind in ("comonotone", "antitone"):
            off = 1 if one_based else 0
            return f"{self.kind}:{self.target + off},{self.driver + off}"
        return self.kind

    @property
    def exact(self) -> bool:
        return self.kind != "custom"

    def validate_for(self, d: int) -> None:
        for k in (self.target, self.driver):
            if k is not None and not 0 <= k < d:
                raise ValueError(f"coupling refers to dimension {k} of a {d}-dimensional law")


def _conditional_rank_bounds(j: DiscreteJoint, target: int, driver: int) -> tuple[np.ndarray, np.ndarray]:
    """Per atom of ``j``: ``F_{driver|target}(x_r-)`` and ``F_{driver|target}(x_r)``."""
    pair = project(j, [target, driver])
    # pair.index is sorted lexicographically, so driver values ascend within each target atom
    t = pair.index[:, 0]
    cond_total = np.bincount(t, weights=pair.mass, minlength=pair.shape[0])
    cs = np.cumsum(pair.mass)
    first = np.flatnonzero(np.r_[True, t[1:] != t[:-1]])
    before = np.repeat(np.r_[0.0, cs][first], np.diff(np.r_[first, t.size]))
    cum = np.minimum((cs - before) / cond_total[t], 1.0)
    last = np.r_[first[1:] - 1, t.size - 1]
    cum[last] = 1.0
    lower = np.where(np.r_[True, t[1:] != t[:-1]], 0.0, np.r_[0.0, cum[:-1]])
    key_pair = np.ravel_multi_index(pair.index.T, pair.shape)
    key = np.ravel_multi_index(
        (np.searchsorted(pair.axes[0], j.axes[target][j.index[:, target]]),
         np.searchsorted(pair.axes[1], j.axes[driver][j.index[:, driver]])),
        pair.shape,
    )
    pos = np.searchsorted(key_pair, key)
    return lower[pos], cum[pos]


def cell_intervals(j: DiscreteJoint, spec: CouplingSpec) -> tuple[np.ndarray, np.ndarray]:
    """Conditional support ``[lo, hi]`` of ``U`` given each atom tuple, shape ``(n_atoms, d)``.

    Also returns, implicitly through ``lo``/``hi``, the law of ``V``: the
    conditional law of ``U_i`` given the atom is uniform on ``[lo_i, hi_i]``.
    """
    if not spec.exact:
        raise ValueError("custom couplings have no closed-form cell intervals")
    spec.validate_for(j.dims)
    ms = marginals(j)
    lo = np.column_stack([m.breakpoints[j.index[:, i]] for i, m in enumerate(ms)])
    hi = np.column_stack([m.breakpoints[j.index[:, i] + 1] for i, m in enumerate(ms)])
    if spec.kind in ("comonotone", "antitone"):
        a, b = _conditional_rank_bounds(j, spec.target, spec.driver)
        if spec.kind == "antitone":
            a, b = 1.0 - b, 1.0 - a
        t = spec.target
        width = hi[:, t] - lo[:, t]
        base = lo[:, t].copy()
        lo[:, t] = base + a * width
        hi[:, t] = base + b * width
    return lo, hi


@dataclass(frozen=True, eq=False)
class CoupledSample:
    x: np.ndarray
    v: np.ndarray
    u: np.ndarray


def sample_coupled(
    j: DiscreteJoint, spec: CouplingSpec, n: int, seed: int, threads: int | None = None
) -> CoupledSample:
    """Draw ``(x, v, u)`` with ``x ~ j``, ``v`` per ``spec`` and ``u`` its randomized PIT."""
    if n < 1:
        raise ValueError("n must be >= 1")
    spec.validate_for(j.dims)
    ms = marginals(j)
    flo = np.column_stack([m.breakpoints[j.index[:, i]] for i, m in enumerate(ms)])
    fhi = np.column_stack([m.breakpoints[j.index[:, i] + 1] for i, m in enumerate(ms)])
    atoms = j.atoms
    cum = np.cumsum(j.mass)
    cum[-1] = 1.0
    if spec.exact:
        lo, hi = cell_intervals(j, spec)
        vlo = (lo - flo) / (fhi - flo)
        vhi = (hi - flo) / (fhi - flo)

    def draw(rng, size):
        cell = np.minimum(np.searchsorted(cum, rng.random(size), side="right"), cum.size - 1)
        w = rng.random((size, j.dims))
        if spec.exact:
            v = vlo[cell] + w * (vhi[cell] - vlo[cell])
        else:
            v = np.asarray(spec.sampler(atoms[cell], rng), dtype=float).reshape(size, j.dims)
        return cell, v

    parts = _rng.chunked_draws(draw, n, seed, threads=threads)
    cell = np.concatenate([p[0] for p in parts])
    v = np.concatenate([p[1] for p in parts])
    u = flo[cell] + v * (fhi[cell] - flo[cell])
    return CoupledSample(atoms[cell], v, u)


@dataclass
class DimensionAudit:
    dim: int
    ks_stat: float
    ks_band: float
    uniform_ok: bool
    indep_pvalue: float
    indep_ok: bool
    cross_pvalues: dict[int, float]

    @property
    def ok(self) -> bool:
        return self.uniform_ok and self.indep_ok


@dataclass
class AuditReport:
    n: int
    dims: list[DimensionAudit]

    @property
    def ok(self) -> bool:
        return all(d.ok for d in self.dims)


def _atom_groups(m: DiscreteMarginal, x: np.ndarray, n_groups: int) -> np.ndarray:
    k = m.index_of(x)
    mid = 0.5 * (m.breakpoints[k] + m.breakpoints[k + 1])
    return np.minimum((mid * n_groups).astype(int), n_groups - 1)


def independence_pvalue(groups: np.ndarray, v: np.ndarray, n_bins: int = 10) -> float:
    """Chi-square contingency p-value of ``v`` (binned) against integer ``groups``."""
    vb = np.minimum((np.asarray(v) * n_bins).astype(int), n_bins - 1)
    _, g = np.unique(groups, return_inverse=True)
    table = np.zeros((g.max() + 1, n_bins))
    np.add.at(table, (g.ravel(), vb), 1)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    if table.shape[0] < 2 or table.shape[1] < 2:
        return 1.0
    return float(stats.chi2_contingency(table, correction=False).pvalue)


def audit_vectors(
    x: np.ndarray, v: np.ndarray, ms: list[DiscreteMarginal], alpha: float = 1e-3, n_groups: int = 10
) -> AuditReport:
    """Check that each ``v_i`` looks uniform and independent of ``x_i``.

    Uniformity uses the one-sample KS distance against the 1.36/sqrt(n) band
    (5% level); independence a chi-square test of ``v_i`` deciles against
    ``n_groups`` mass-balanced groups of atoms of ``x_i``, failing below ``alpha``.
    Dependence of ``v_i`` on the other coordinates is reported, not judged.
    """
    n, d = x.shape
    band = float(1.36 / np.sqrt(n))
    groups = [_atom_groups(ms[i], x[:, i], n_groups) for i in range(d)]
    out = []
    for i in range(d):
        ks = float(stats.kstest(v[:, i], "uniform").statistic)
        pv = independence_pvalue(groups[i], v[:, i])
        cross = {k: independence_pvalue(groups[k], v[:, i]) for k in range(d) if k != i}
        out.append(DimensionAudit(i, ks, band, bool(ks < band), pv, bool(pv >= alpha), cross))
    return AuditReport(n, out)


def audit_coupling(j: DiscreteJoint, spec: CouplingSpec, n: int, seed: int, alpha: float = 1e-3) -> AuditReport:
    s = sample_coupled(j, spec, n, seed)
    return audit_vectors(s.x, s.v, marginals(j), alpha=alpha)


def coupling_from_copula(
    copula_samples, ms: list[DiscreteMarginal], seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Recover ``(x, v)`` from copula draws ``u`` so that ``pit(x, v) == u``.

    ``x_i = F_i^{-1}(u_i)`` and ``v_i = (u_i - F_i(x_i-)) / dF_i(x_i)``; a zero
    jump (not possible for atomic marginals) would take a fresh uniform.
    """
    u = np.atleast_2d(np.asarray(copula_samples, dtype=float))
    if u.shape[1] != len(ms):
        raise ValueError("one marginal per column required")
    if np.any((u < 0) | (u > 1)):
        raise ValueError("copula samples must lie in the unit cube")
    rng = _rng.generator(seed)
    x = np.empty_like(u)
    v = np.empty_like(u)
    for i, m in enumerate(ms):
        x[:, i] = m.quantile(u[:, i])
        k = m.index_of(x[:, i])
        flo, fhi = m.breakpoints[k], m.breakpoints[k + 1]
        jump = fhi - flo
        fresh = rng.random(len(u))
        with np.errstate(invalid="ignore", divide="ignore"):
            v[:, i] = np.where(jump > 0, (u[:, i] - flo) / jump, fresh)
    np.clip(v, 0.0, 1.0, out=v)
    return x, v
