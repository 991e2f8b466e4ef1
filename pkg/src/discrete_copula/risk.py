"""Co-risk measures and stress distortions under a chosen coupling.

Marginal ES is ``E[Y | U_cond > p]``.  ``Y`` is the target atom itself in
``step`` mode; in ``interp`` mode it is the piecewise-linear quantile of the
target marginal evaluated at ``U_target``, so the position of ``U_target``
inside its atom (which the coupling controls) matters.

For the named couplings, given the atom tuple every ``U_i`` is uniform on a
known sub-interval independently across ``i`` (see
:func:`discrete_copula.couplings.cell_intervals`); the ``*_exact`` functions
integrate over those intervals in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import special

from .couplings import CouplingSpec, cell_intervals, sample_coupled
from .joint import DiscreteJoint, marginal_of, marginals
from .marginals import MASS_FLOOR, DiscreteMarginal

Mode = Literal["step", "interp"]
MODES = ("step", "interp")


@dataclass(frozen=True)
class MesRequest:
    cond_dim: int
    target_dim: int
    p: float
    spec: CouplingSpec = field(default_factory=CouplingSpec.independent)
    mode: Mode = "step"
    mc_n: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.cond_dim == self.target_dim:
            raise ValueError("cond_dim and target_dim must differ")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


@dataclass
class MesResult:
    estimate: float
    se: float
    mode: str
    spec: str
    method: str
    n_tail: int | None = None

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "se": self.se,
            "mode": self.mode,
            "spec": self.spec,
            "method": self.method,
            "n_tail": self.n_tail,
        }


def _tail_terms(j: DiscreteJoint, cond: int, target: int, p: float, spec: CouplingSpec, mode: str):
    """Per-atom tail weight ``mass * P(U_cond > p | atom)`` and conditional mean of ``Y``."""
    if not 0.0 <= p < 1.0:
        raise ValueError("p must lie in [0, 1)")
    if cond == target:
        raise ValueError("cond and target must differ")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    lo, hi = cell_intervals(j, spec)
    tail = np.clip((hi[:, cond] - p) / (hi[:, cond] - lo[:, cond]), 0.0, 1.0)
    if mode == "step":
        y = j.axes[target][j.index[:, target]]
    else:
        y = marginal_of(j, target).interp_quantile_mean(lo[:, target], hi[:, target])
    w = j.mass * tail
    # U_cond is uniform whatever the coupling, so the tail has probability exactly 1 - p
    if abs(w.sum() - (1.0 - p)) > 1e-9:
        raise AssertionError(f"tail probability {w.sum()!r} differs from 1 - p = {1 - p!r}")
    return w, y


def marginal_es_exact(
    j: DiscreteJoint,
    cond_dim: int,
    target_dim: int,
    p: float,
    spec: CouplingSpec | None = None,
    mode: Mode = "step",
) -> float:
    """Exact ``E[Y | U_cond > p]`` (checkerboard coupling unless ``spec`` says otherwise)."""
    if p >= 1.0:
        raise ValueError("p must be < 1")
    w, y = _tail_terms(j, cond_dim, target_dim, p, spec or CouplingSpec.independent(), mode)
    return float(w @ y / (1.0 - p))


def marginal_es_mc(j: DiscreteJoint, req: MesRequest, threads: int | None = None) -> MesResult:
    n = req.mc_n or 1_000_000
    s = sample_coupled(j, req.spec, n, req.seed, threads=threads)
    hit = s.u[:, req.cond_dim] > req.p
    k = int(hit.sum())
    if k == 0:
        raise ValueError("empty tail event; increase mc_n")
    if req.mode == "step":
        y = s.x[hit, req.target_dim]
    else:
        y = marginal_of(j, req.target_dim).interp_quantile(s.u[hit, req.target_dim])
    se = float(y.std(ddof=1) / np.sqrt(k)) if k > 1 else float("inf")
    return MesResult(float(y.mean()), se, req.mode, req.spec.label(), "mc", k)


def expected_shortfall(m: DiscreteMarginal, p: float) -> float:
    """``E[X | U > p]`` with ``U`` the randomized PIT of ``X`` (atoms split at level ``p``)."""
    b = m.breakpoints
    tail = np.clip((b[1:] - p) / (b[1:] - b[:-1]), 0.0, 1.0)
    return float(np.sum(m.masses * tail * m.support) / (1.0 - p))


def normal_mes_oracle(r: float, sigma: float, p: float) -> float:
    """``E[X_2 | X_1 > q_p]`` for a bivariate normal with N(0, sigma^2) marginals and correlation ``r``."""
    if not -1.0 <= r <= 1.0:
        raise ValueError("|r| must be <= 1")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    z = special.ndtri(p)
    return float(r * sigma / (1.0 - p) * np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi))


def _left_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    cum = np.cumsum(w) / w.sum()
    k = int(np.searchsorted(cum, q - 1e-12, side="left"))
    return float(v[min(k, len(v) - 1)])


def covar(j: DiscreteJoint, req: MesRequest, q: float, method: Literal["exact", "mc"] = "exact", threads: int | None = None) -> MesResult:
    """``q``-quantile (left-continuous) of the target given ``U_cond > p``.

    ``exact`` covers step mode for the named couplings; everything else is
    estimated from ``req.mc_n`` coupled draws.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if method == "exact":
        if req.mode != "step" or not req.spec.exact:
            raise ValueError("exact CoVaR is available in step mode for named couplings; use method='mc'")
        w, y = _tail_terms(j, req.cond_dim, req.target_dim, req.p, req.spec, "step")
        keep = w > 0
        return MesResult(_left_quantile(y[keep], w[keep], q), 0.0, req.mode, req.spec.label(), "exact")
    n = req.mc_n or 100_000
    s = sample_coupled(j, req.spec, n, req.seed, threads=threads)
    hit = s.u[:, req.cond_dim] > req.p
    k = int(hit.sum())
    if k == 0:
        raise ValueError("empty tail event; increase mc_n")
    if req.mode == "step":
        y = s.x[hit, req.target_dim]
    else:
        y = marginal_of(j, req.target_dim).interp_quantile(s.u[hit, req.target_dim])
    y = np.sort(y)
    return MesResult(float(y[max(int(np.ceil(q * k)) - 1, 0)]), float("nan"), req.mode, req.spec.label(), "mc", k)


# ---------------------------------------------------------------- stress


def _gauss_legendre_mean(g, lo, hi, order=16):
    x, w = np.polynomial.legendre.leggauss(order)
    pts = lo[..., None] + 0.5 * (x + 1.0) * (hi - lo)[..., None]
    return 0.5 * np.sum(w * g(pts), axis=-1)


@dataclass(frozen=True)
class Distortion:
    """Nonnegative increasing density ``g`` on ``[0, 1]`` with unit integral."""

    name: str
    g: Callable[[np.ndarray], np.ndarray]
    interval_mean: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def mean_over(self, lo, hi) -> np.ndarray:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if self.interval_mean is not None:
            return self.interval_mean(lo, hi)
        return _gauss_legendre_mean(self.g, lo, hi)

    @classmethod
    def identity(cls) -> "Distortion":
        return cls("identity", lambda u: np.ones_like(np.asarray(u, dtype=float)), lambda a, b: np.ones_like(a))

    @classmethod
    def linear(cls) -> "Distortion":
        """``g(u) = 2u``; mean over ``(a, b]`` is ``a + b``."""
        return cls("linear", lambda u: 2.0 * np.asarray(u, dtype=float), lambda a, b: a + b)

    @classmethod
    def power(cls, kappa: float) -> "Distortion":
        """``g(u) = kappa u^(kappa - 1)``, ``kappa >= 1``."""
        if kappa < 1:
            raise ValueError("kappa must be >= 1 for an increasing distortion")
        return cls(
            f"power({kappa:g})",
            lambda u: kappa * np.asarray(u, dtype=float) ** (kappa - 1.0),
            lambda a, b: (b**kappa - a**kappa) / (b - a),
        )

    @classmethod
    def custom(cls, g: Callable[[np.ndarray], np.ndarray], name: str = "custom") -> "Distortion":
        grid = np.linspace(0.0, 1.0, 1001)
        vals = np.asarray(g(grid), dtype=float)
        if np.any(vals < 0) or np.any(np.diff(vals) < -1e-12):
            raise ValueError("distortion must be nonnegative and increasing")
        total = float(_gauss_legendre_mean(g, np.array(0.0), np.array(1.0), order=64))
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"distortion integrates to {total!r}, not 1")
        return cls(name, g)

    @classmethod
    def parse(cls, text: str) -> "Distortion":
        name, _, arg = text.partition(":")
        if name == "linear":
            return cls.linear()
        if name == "identity":
            return cls.identity()
        if name == "power":
            return cls.power(float(arg))
        raise ValueError(f"unknown distortion {text!r}")


@dataclass(frozen=True)
class StressSpec:
    """``dQ/dP`` built from ``g_i(U_i)``: one coordinate, their mean, or their normalised product."""

    g: Distortion | Sequence[Distortion]
    combine: Literal["single", "mean", "product"] = "single"
    dim: int = 0

    def __post_init__(self):
        if self.combine not in ("single", "mean", "product"):
            raise ValueError("combine must be single, mean or product")

    def distortion(self, i: int) -> Distortion:
        return self.g if isinstance(self.g, Distortion) else self.g[i]


@dataclass
class StressResult:
    marginals: list[DiscreteMarginal]
    method: str
    cdf_se: list[np.ndarray] | None = None


def _stressed_marginal(axis_values, masses) -> DiscreteMarginal:
    keep = masses >= MASS_FLOOR
    m = masses[keep]
    return DiscreteMarginal(axis_values[keep], m / m.sum())


def stress_distribution(
    j: DiscreteJoint,
    spec: CouplingSpec,
    stress: StressSpec,
    method: Literal["exact", "mc"] | None = None,
    n: int = 1_000_000,
    seed: int = 0,
    threads: int | None = None,
) -> StressResult:
    """Marginals of ``X`` under ``dQ = (dQ/dP)(U) dP``.

    ``exact`` integrates each ``g_i`` over the conditional interval of ``U_i``;
    it applies to the named couplings (the default there).  ``mc`` reweights
    ``n`` coupled draws and attaches delta-method standard errors to the
    stressed CDF at every atom.
    """
    d = j.dims
    if stress.combine == "single" and not 0 <= stress.dim < d:
        raise ValueError(f"stress dimension {stress.dim} out of range")
    method = method or ("exact" if spec.exact else "mc")
    if method == "exact":
        lo, hi = cell_intervals(j, spec)
        means = {i: stress.distortion(i).mean_over(lo[:, i], hi[:, i]) for i in range(d)}
        if stress.combine == "single":
            w = means[stress.dim]
        elif stress.combine == "mean":
            w = sum(means.values()) / d
        else:
            w = np.prod(np.column_stack(list(means.values())), axis=1)
        q = j.mass * w
        q = q / q.sum()
        out = [
            _stressed_marginal(j.axes[i], np.bincount(j.index[:, i], weights=q, minlength=j.shape[i])) for i in range(d)
        ]
        return StressResult(out, "exact")
    if method != "mc":
        raise ValueError("method must be exact or mc")
    s = sample_coupled(j, spec, n, seed, threads=threads)
    gs = [stress.distortion(i).g(s.u[:, i]) for i in range(d)]
    if stress.combine == "single":
        w = gs[stress.dim]
    elif stress.combine == "mean":
        w = sum(gs) / d
    else:
        w = np.prod(np.column_stack(gs), axis=1)
    wbar = w.mean()
    out, ses = [], []
    for i, m in enumerate(marginals(j)):
        k = m.index_of(s.x[:, i])
        wm = np.bincount(k, weights=w, minlength=len(m)) / n
        cdf = np.cumsum(wm) / wbar
        # ratio estimator: Var(F^Q) ~ E[w^2 (1{X <= a} - F^Q)^2] / (n wbar^2); the residual has mean 0
        w2_below = np.cumsum(np.bincount(k, weights=w * w, minlength=len(m))) / n
        var = (w2_below * (1.0 - 2.0 * cdf) + cdf**2 * np.mean(w * w)) * n / (n - 1)
        se = np.sqrt(np.maximum(var, 0.0) / n) / wbar
        out.append(_stressed_marginal(m.support, np.diff(np.concatenate(([0.0], cdf)))))
        ses.append(se)
    return StressResult(out, "mc", ses)
