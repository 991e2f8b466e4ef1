"""The checkerboard copula of a discrete joint law.

The copula is piecewise uniform on the grid of cells
``(F_1(x_1-), F_1(x_1)] x ... x (F_d(x_d-), F_d(x_d)]`` spanned by the marginal
atoms; each cell carries the joint mass of its atom tuple.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np

from . import _rng
from .joint import DiscreteJoint, marginal_masses

STRIP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CheckerboardCopula:
    """Piecewise-uniform copula on a product grid of intervals.

    ``breakpoints[i]`` runs from 0 to 1; cell index ``k`` along axis ``i`` is the
    interval ``(breakpoints[i][k], breakpoints[i][k+1]]``.  Only cells with
    positive mass are stored.
    """

    breakpoints: tuple
    index: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        bps = tuple(np.array(b, dtype=float).ravel() for b in self.breakpoints)
        idx = np.array(self.index, dtype=np.int64)
        p = np.array(self.mass, dtype=float).ravel()
        for b in bps:
            if b.size < 2 or b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0):
                raise ValueError("breakpoints must increase strictly from 0 to 1")
        if idx.ndim != 2 or idx.shape != (p.size, len(bps)):
            raise ValueError("index must have shape (n_cells, d)")
        shape = tuple(b.size - 1 for b in bps)
        if np.any(idx < 0) or np.any(idx >= np.array(shape)):
            raise ValueError("cell index out of range")
        if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("cell masses must be positive and sum to 1")
        flat = np.ravel_multi_index(idx.T, shape)
        order = np.argsort(flat, kind="stable")
        if np.any(np.diff(flat[order]) == 0):
            raise ValueError("duplicate cells")
        for a in (*bps, idx, p):
            a.setflags(write=False)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "index", idx[order])
        object.__setattr__(self, "mass", p[order])
        object.__setattr__(self, "_flat", flat[order])

    @property
    def dims(self) -> int:
        return len(self.breakpoints)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b.size - 1 for b in self.breakpoints)

    def __repr__(self) -> str:
        return f"CheckerboardCopula(shape={self.shape}, n_cells={self.mass.size})"

    def cell_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of every stored cell, each ``(n_cells, d)``."""
        lo = np.column_stack([b[self.index[:, i]] for i, b in enumerate(self.breakpoints)])
        hi = np.column_stack([b[self.index[:, i] + 1] for i, b in enumerate(self.breakpoints)])
        return lo, hi

    def cell_volume(self) -> np.ndarray:
        lo, hi = self.cell_bounds()
        return np.prod(hi - lo, axis=1)

    def strip_sums(self, i: int) -> np.ndarray:
        return np.bincount(self.index[:, i], weights=self.mass, minlength=self.shape[i])

    def check_uniform_marginals(self, tol: float = STRIP_TOL) -> bool:
        return all(
            np.allclose(self.strip_sums(i), np.diff(b), rtol=0, atol=tol) for i, b in enumerate(self.breakpoints)
        )

    def locate(self, u) -> np.ndarray:
        """Cell index tuple containing each point (lower-open, upper-closed; 0 joins the first cell)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        cols = [
            np.clip(np.searchsorted(b, u[:, i], side="left") - 1, 0, b.size - 2) for i, b in enumerate(self.breakpoints)
        ]
        return np.column_stack(cols)

    def _lookup(self, cells: np.ndarray) -> np.ndarray:
        """Position of each cell tuple in ``self.mass``, or -1 when the cell is empty."""
        flat = np.ravel_multi_index(cells.T, self.shape)
        pos = np.searchsorted(self._flat, flat)
        pos_c = np.minimum(pos, self._flat.size - 1)
        return np.where(self._flat[pos_c] == flat, pos_c, -1)


def build_checkerboard(j: DiscreteJoint) -> CheckerboardCopula:
    bps = []
    for i in range(j.dims):
        b = np.concatenate(([0.0], np.cumsum(marginal_masses(j, i))))
        b[-1] = 1.0
        bps.append(b)
    return CheckerboardCopula(tuple(bps), j.index, j.mass)


def _check_unit(u: np.ndarray, d: int) -> np.ndarray:
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.shape[1] != d:
        raise ValueError(f"points have arity {u.shape[1]}, copula has {d} dimensions")
    if np.any((u < 0) | (u > 1)) or np.any(np.isnan(u)):
        raise ValueError("points must lie in the unit cube")
    return u


def copula_cdf(c: CheckerboardCopula, u, block: int = 4096) -> np.ndarray | float:
    """``C(u)``: integral of the piecewise-constant density over ``[0, u]``."""
    single = np.ndim(u) == 1
    pts = _check_unit(u, c.dims)
    lo, hi = c.cell_bounds()
    width = hi - lo
    out = np.empty(len(pts))
    for s in range(0, len(pts), block):
        q = pts[s : s + block, None, :]
        frac = np.clip((q - lo) / width, 0.0, 1.0)
        out[s : s + block] = np.prod(frac, axis=2) @ c.mass
    return float(out[0]) if single else out


def copula_survival(c: CheckerboardCopula, u) -> np.ndarray | float:
    """``P(U > u)`` by inclusion-exclusion over :func:`copula_cdf`."""
    single = np.ndim(u) == 1
    pts = _check_unit(u, c.dims)
    total = np.zeros(len(pts))
    for subset in product((0, 1), repeat=c.dims):
        q = np.where(np.array(subset, dtype=bool), pts, 1.0)
        total += (-1) ** sum(subset) * copula_cdf(c, q)
    return float(total[0]) if single else total


def copula_density(c: CheckerboardCopula, u) -> np.ndarray | float:
    single = np.ndim(u) == 1
    pts = _check_unit(u, c.dims)
    pos = c._lookup(c.locate(pts))
    dens = c.mass / c.cell_volume()
    out = np.where(pos >= 0, dens[np.maximum(pos, 0)], 0.0)
    return float(out[0]) if single else out


def sample(c: CheckerboardCopula, n: int, seed: int, threads: int | None = None) -> np.ndarray:
    """``n`` draws: a cell chosen in proportion to its mass, then a uniform point inside it."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = c.cell_bounds()
    cum = np.cumsum(c.mass)
    cum[-1] = 1.0

    def draw(rng, size):
        cell = np.minimum(np.searchsorted(cum, rng.random(size), side="right"), cum.size - 1)
        w = rng.random((size, c.dims))
        return lo[cell] + w * (hi[cell] - lo[cell])

    return np.concatenate(_rng.chunked_draws(draw, n, seed, threads=threads))


def entropy(c: CheckerboardCopula) -> float:
    """Differential entropy in nats; at most 0, with 0 only for the independence copula."""
    return float(-np.sum(c.mass * np.log(c.mass / c.cell_volume())))


def cell_average_density(c: CheckerboardCopula, f: Callable[[np.ndarray], np.ndarray], order: int = 8) -> np.ndarray:
    """Average of ``f`` over every stored cell by tensor Gauss-Legendre quadrature.

    ``f`` maps a ``(k, d)`` array of points to ``k`` density values.  The result is
    aligned with ``c.index``.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    grid = np.array(list(product(nodes, repeat=c.dims)))
    wgrid = np.prod(np.array(list(product(weights, repeat=c.dims))), axis=1)
    lo, hi = c.cell_bounds()
    pts = lo[:, None, :] + grid[None, :, :] * (hi - lo)[:, None, :]
    vals = np.asarray(f(pts.reshape(-1, c.dims)), dtype=float).reshape(len(lo), len(grid))
    return vals @ wgrid


def perturb_within_cells(c: CheckerboardCopula, seed: int, strength: float) -> CheckerboardCopula:
    """Another copula of the same discrete law: cells halved per axis, mass reshuffled inside.

    Inside each cell the ``2^d`` sub-boxes get weights
    ``(1 + strength * sum_S a_S prod_{i in S} s_i) / 2^d`` with ``s_i = +-1`` the
    half along axis ``i``, ``|S| >= 2`` and ``sum |a_S| <= 1``.  Every product of
    two or more signs sums to zero over a half-slab, so cell masses and all strip
    sums are unchanged while the density stays positive for ``strength < 1``.
    """
    if not 0.0 <= strength < 1.0:
        raise ValueError("strength must lie in [0, 1)")
    d = c.dims
    rng = _rng.generator(seed)
    bits = np.array(list(product((0, 1), repeat=d)))
    signs = 2 * bits - 1
    subsets = [s for s in product((0, 1), repeat=d) if sum(s) >= 2]
    patterns = np.array([np.prod(np.where(np.array(s, bool), signs, 1), axis=1) for s in subsets])
    n_cells = c.mass.size
    if subsets:
        coef = rng.standard_normal((n_cells, len(subsets)))
        coef /= np.maximum(np.abs(coef).sum(axis=1, keepdims=True), 1e-300)
        coef *= rng.random((n_cells, 1))
        shares = (1.0 + strength * coef @ patterns) / 2**d
    else:
        shares = np.full((n_cells, 2**d), 0.5**d)
    new_bps = []
    for b in c.breakpoints:
        fine = np.empty(2 * b.size - 1)
        fine[0::2] = b
        fine[1::2] = 0.5 * (b[:-1] + b[1:])
        new_bps.append(fine)
    idx = (2 * c.index[:, None, :] + bits[None, :, :]).reshape(-1, d)
    mass = (c.mass[:, None] * shares).ravel()
    return CheckerboardCopula(tuple(new_bps), idx, mass)


def refine(c: CheckerboardCopula, k: int) -> CheckerboardCopula:
    """Same copula with every interval split into ``k`` equal pieces."""
    d = c.dims
    offs = np.array(list(product(range(k), repeat=d)))
    new_bps = []
    for b in c.breakpoints:
        fine = (b[:-1, None] + np.arange(k)[None, :] * (np.diff(b)[:, None] / k)).ravel()
        new_bps.append(np.concatenate((fine, [1.0])))
    idx = (k * c.index[:, None, :] + offs[None, :, :]).reshape(-1, d)
    mass = np.repeat(c.mass / k**d, len(offs))
    return CheckerboardCopula(tuple(new_bps), idx, mass)


def to_joint(c: CheckerboardCopula, k: int = 1) -> DiscreteJoint:
    """The copula discretised on its grid refined ``k``-fold, atoms at the cell upper ends."""
    r = refine(c, k) if k > 1 else c
    return DiscreteJoint(tuple(b[1:] for b in r.breakpoints), r.index, r.mass)
