"""Discrete joint distributions on product grids."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .marginals import SUM_TOL, DiscreteMarginal, RoundingRule, round_values


@dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """Sparse pmf on the grid ``axes[0] x ... x axes[d-1]``.

    ``index`` holds one row of axis indices per atom (lexicographically sorted,
    no duplicates) and ``mass`` the matching probabilities.  ``n_samples`` records
    how many observations the pmf was estimated from, when it was.
    """

    axes: tuple
    index: np.ndarray
    mass: np.ndarray
    n_samples: int | None = None

    def __post_init__(self):
        axes = tuple(np.array(a, dtype=float).ravel() for a in self.axes)
        idx = np.array(self.index, dtype=np.int64)
        p = np.array(self.mass, dtype=float).ravel()
        if not axes:
            raise ValueError("need at least one dimension")
        if idx.ndim != 2 or idx.shape[1] != len(axes) or idx.shape[0] != p.size:
            raise ValueError("index must have shape (n_atoms, d) matching mass")
        if p.size == 0:
            raise ValueError("no data")
        for a in axes:
            if a.size == 0 or np.any(np.diff(a) <= 0) or not np.all(np.isfinite(a)):
                raise ValueError("axes must be finite and strictly increasing")
        shape = tuple(a.size for a in axes)
        if np.any(idx < 0) or np.any(idx >= np.array(shape)):
            raise ValueError("atom index out of range")
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            raise ValueError("atom masses must be positive")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"masses sum to {p.sum()!r}, not 1")
        flat = np.ravel_multi_index(idx.T, shape)
        order = np.argsort(flat, kind="stable")
        if np.any(np.diff(flat[order]) == 0):
            raise ValueError("duplicate atoms")
        idx, p = idx[order], p[order]
        for a in (*axes, idx, p):
            a.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "index", idx)
        object.__setattr__(self, "mass", p)

    @property
    def dims(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def atoms(self) -> np.ndarray:
        """Atom coordinates, shape ``(n_atoms, d)``."""
        return np.column_stack([a[self.index[:, i]] for i, a in enumerate(self.axes)])

    @property
    def pmf(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(k) for k in row): float(m) for row, m in zip(self.index, self.mass)}

    def __repr__(self) -> str:
        return f"DiscreteJoint(shape={self.shape}, n_atoms={self.mass.size})"

    def dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[tuple(self.index.T)] = self.mass
        return out

    @classmethod
    def from_dense(cls, table, axes: Sequence | None = None) -> "DiscreteJoint":
        """Build from a dense probability array; zero entries are dropped.

        Axis values without mass are removed so every atom of every marginal is positive.
        """
        t = np.asarray(table, dtype=float)
        if axes is None:
            axes = [np.arange(n, dtype=float) for n in t.shape]
        idx = np.argwhere(t > 0)
        return _compact(axes, idx, t[tuple(idx.T)])

    @classmethod
    def from_atoms(cls, atoms: Mapping[tuple, float] | Sequence, masses: Sequence[float] | None = None) -> "DiscreteJoint":
        """Build from ``{value_tuple: mass}`` or from parallel atom/mass sequences."""
        if masses is None:
            items = list(atoms.items())
            pts = np.array([k for k, _ in items], dtype=float)
            w = np.array([v for _, v in items], dtype=float)
        else:
            pts = np.asarray(atoms, dtype=float)
            w = np.asarray(masses, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        axes = [np.unique(pts[:, i]) for i in range(pts.shape[1])]
        idx = np.column_stack([np.searchsorted(axes[i], pts[:, i]) for i in range(pts.shape[1])])
        flat = np.ravel_multi_index(idx.T, tuple(a.size for a in axes))
        uniq, inv = np.unique(flat, return_inverse=True)
        merged = np.bincount(inv, weights=w)
        keep = merged > 0
        idx = np.column_stack(np.unravel_index(uniq[keep], tuple(a.size for a in axes)))
        return _compact(axes, idx, merged[keep])


def _compact(axes, idx, mass, n_samples=None) -> DiscreteJoint:
    """Drop axis values that carry no mass and re-index."""
    idx = np.asarray(idx, dtype=np.int64).reshape(len(mass), len(axes))
    new_axes, cols = [], []
    for i, a in enumerate(axes):
        used, inv = np.unique(idx[:, i], return_inverse=True)
        new_axes.append(np.asarray(a, dtype=float)[used])
        cols.append(inv.ravel())
    return DiscreteJoint(tuple(new_axes), np.column_stack(cols), np.asarray(mass, dtype=float), n_samples)


def joint_from_samples(
    rows, rounding: int | Sequence[int | None] | None = None, rule: RoundingRule = "half_away"
) -> DiscreteJoint:
    """Empirical joint of ``rows`` (n x d), optionally rounded per dimension."""
    try:
        x = np.array(rows, dtype=float)
    except ValueError as exc:
        raise ValueError("ragged rows") from exc
    if x.size == 0:
        raise ValueError("no data")
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("ragged rows")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite sample")
    n, d = x.shape
    if rounding is None or isinstance(rounding, (int, np.integer)):
        rounding = [rounding] * d
    if len(rounding) != d:
        raise ValueError(f"rounding has {len(rounding)} entries for {d} dimensions")
    cols = [round_values(x[:, i], rounding[i], rule) for i in range(d)]
    axes, idx = [], []
    for c in cols:
        a, inv = np.unique(c, return_inverse=True)
        axes.append(a)
        idx.append(inv.ravel())
    idx = np.column_stack(idx)
    cells, counts = np.unique(idx, axis=0, return_counts=True)
    # count ratios only; no accumulated float sums
    return DiscreteJoint(tuple(axes), cells, counts / n, n_samples=n)


def joint_cdf(j: DiscreteJoint, x) -> np.ndarray | float:
    """``P(X <= x)`` for one point (length ``d``) or many (``k x d``)."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != j.dims:
        raise ValueError(f"point has arity {pts.shape[1]}, joint has {j.dims} dimensions")
    below = np.all(j.atoms[None, :, :] <= pts[:, None, :], axis=2)
    out = below @ j.mass
    return float(out[0]) if single else out


def joint_survival(j: DiscreteJoint, x) -> np.ndarray | float:
    """``P(X > x)`` componentwise."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != j.dims:
        raise ValueError(f"point has arity {pts.shape[1]}, joint has {j.dims} dimensions")
    above = np.all(j.atoms[None, :, :] > pts[:, None, :], axis=2)
    out = above @ j.mass
    return float(out[0]) if single else out


def marginal_masses(j: DiscreteJoint, i: int) -> np.ndarray:
    return np.bincount(j.index[:, i], weights=j.mass, minlength=j.shape[i])


def marginal_of(j: DiscreteJoint, i: int) -> DiscreteMarginal:
    if not 0 <= i < j.dims:
        raise ValueError(f"dimension {i} out of range")
    return DiscreteMarginal(j.axes[i], marginal_masses(j, i))


def marginals(j: DiscreteJoint) -> list[DiscreteMarginal]:
    return [marginal_of(j, i) for i in range(j.dims)]


def project(j: DiscreteJoint, dims: Sequence[int]) -> DiscreteJoint:
    """Joint law of the coordinates ``dims`` (in that order)."""
    dims = list(dims)
    sub = j.index[:, dims]
    shape = tuple(j.shape[i] for i in dims)
    flat = np.ravel_multi_index(sub.T, shape)
    uniq, inv = np.unique(flat, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=j.mass)
    idx = np.column_stack(np.unravel_index(uniq, shape))
    return DiscreteJoint(tuple(j.axes[i] for i in dims), idx, mass)


def conditional_slice(j: DiscreteJoint, i: int, k: int) -> DiscreteJoint:
    """Law of the other ``d - 1`` coordinates given ``X_i = axes[i][k]``."""
    if j.dims < 2:
        raise ValueError("conditional slice needs at least two dimensions")
    sel = j.index[:, i] == k
    total = j.mass[sel].sum()
    if total <= 0:
        raise ValueError("zero-mass atom")
    keep = [a for a in range(j.dims) if a != i]
    return _compact([j.axes[a] for a in keep], j.index[sel][:, keep], j.mass[sel] / total)
