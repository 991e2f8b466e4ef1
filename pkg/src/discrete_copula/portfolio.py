"""Minimum Marginal-ES portfolios over the long-only simplex, with a yearly backtest."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Literal, Sequence

import numpy as np

from .couplings import CouplingSpec
from .joint import joint_from_samples
from .marginals import DiscreteMarginal
from .risk import Mode, marginal_es_exact

RISK_FREE = 0.03


@dataclass(frozen=True)
class MarketClassifier:
    """Maps index returns to condition values; bins are right-closed ``(t_{k-1}, t_k]``."""

    thresholds: tuple[float, ...] = (-0.03, -0.01, 0.01, 0.03)
    values: tuple[float, ...] = (-2.0, -1.0, 0.0, 1.0, 2.0)

    def __post_init__(self):
        if len(self.values) != len(self.thresholds) + 1:
            raise ValueError("need one more value than thresholds")
        if np.any(np.diff(self.thresholds) <= 0) or np.any(np.diff(self.values) <= 0):
            raise ValueError("thresholds and values must be strictly increasing")

    def classify(self, index_returns) -> np.ndarray:
        r = np.asarray(index_returns, dtype=float)
        return np.asarray(self.values)[np.searchsorted(self.thresholds, r, side="left")]

    def loss_levels(self, index_returns) -> np.ndarray:
        """Negated condition values: larger means a worse market day."""
        return -self.classify(index_returns) + 0.0


@dataclass
class PerfMetrics:
    avg: float
    stdev: float | None
    sharpe: float | None


def perf_metrics(yearly_returns: Sequence[float], risk_free: float = RISK_FREE) -> PerfMetrics:
    """Mean, sample standard deviation and Sharpe ratio of annual returns.

    A zero or undefined standard deviation gives ``sharpe=None`` rather than an
    infinite ratio.
    """
    r = np.asarray(yearly_returns, dtype=float)
    if r.size == 0:
        raise ValueError("no returns")
    avg = float(r.mean())
    if r.size < 2:
        return PerfMetrics(avg, None, None)
    sd = float(r.std(ddof=1))
    if sd <= 1e-15 * max(1.0, abs(avg)):
        return PerfMetrics(avg, 0.0, None)
    return PerfMetrics(avg, sd, (avg - risk_free) / sd)


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    """All weight vectors with entries in ``{0, 1/R, ..., 1}`` summing to one."""
    rows = []
    for bars in combinations(range(resolution + k - 1), k - 1):
        cuts = np.diff(np.concatenate(([-1], bars, [resolution + k - 1]))) - 1
        rows.append(cuts)
    return np.array(rows, dtype=float) / resolution


def _tail_day_weights(market: np.ndarray, p: float) -> np.ndarray:
    """``P(U_market > p | day) / (n (1 - p))`` under an independent randomiser for the market."""
    vals, inv, counts = np.unique(market, return_inverse=True, return_counts=True)
    m = DiscreteMarginal(vals, counts / market.size)
    b = m.breakpoints
    tail = np.clip((b[1:] - p) / (b[1:] - b[:-1]), 0.0, 1.0)
    return tail[inv.ravel()] / (market.size * (1.0 - p))


def portfolio_mes(
    weights, losses: np.ndarray, market: np.ndarray, p: float, spec: CouplingSpec | None = None, mode: Mode = "step"
) -> float:
    """MES of the portfolio loss ``w . losses`` given the market condition.

    ``losses`` is ``(assets, days)``; the pair (condition, portfolio loss) is
    treated as an empirical bivariate law with the condition in dimension 0.
    """
    spec = spec or CouplingSpec.independent()
    loss = np.asarray(weights, dtype=float) @ losses
    j = joint_from_samples(np.column_stack([market, loss]))
    return marginal_es_exact(j, 0, 1, p, spec, mode)


def _linear_in_weights(spec: CouplingSpec, mode: str) -> bool:
    # step mode with a market randomiser that ignores the loss: MES = sum_a w_a MES_a
    return mode == "step" and (spec.kind == "independent" or (spec.exact and spec.target != 0))


def asset_tail_losses(losses: np.ndarray, market: np.ndarray, p: float) -> np.ndarray:
    """Per-asset conditional expected loss on the market tail event (step mode)."""
    return losses @ _tail_day_weights(np.asarray(market, dtype=float), p)


def min_mes_weights(
    losses,
    market,
    p: float,
    spec: CouplingSpec | None = None,
    mode: Mode = "step",
    resolution: int = 20,
    refine_steps: int = 12,
    tie_tol: float = 1e-12,
) -> np.ndarray:
    """Long-only weights minimising the portfolio MES given the market condition.

    In step mode (with a market randomiser that ignores the loss) the objective
    is linear, so the optimum is the best vertex; ties share weight equally.
    Otherwise a simplex grid search at ``1/resolution`` is followed by
    pairwise weight transfers with halving step sizes.  The objective is
    evaluated exactly, so the search is deterministic.
    """
    spec = spec or CouplingSpec.independent()
    L = np.atleast_2d(np.asarray(losses, dtype=float))
    mk = np.asarray(market, dtype=float).ravel()
    if L.shape[1] != mk.size:
        raise ValueError("losses and market series are not aligned")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    k = L.shape[0]
    if k == 1:
        return np.ones(1)
    if _tail_day_weights(mk, p).sum() <= 0:
        raise ValueError("empty tail event at this p; lower p")
    if _linear_in_weights(spec, mode):
        e = asset_tail_losses(L, mk, p)
        best = np.flatnonzero(e <= e.min() + tie_tol * max(1.0, abs(e.min())))
        w = np.zeros(k)
        w[best] = 1.0 / best.size
        return w

    def objective(w):
        return portfolio_mes(w, L, mk, p, spec, mode)

    grid = simplex_grid(k, resolution)
    vals = np.array([objective(w) for w in grid])
    w = grid[int(np.argmin(vals))].copy()
    best = float(vals.min())
    step = 0.5 / resolution
    for _ in range(refine_steps):
        improved = True
        while improved:
            improved = False
            for a in range(k):
                for b in range(k):
                    if a == b or w[a] <= 0:
                        continue
                    cand = w.copy()
                    delta = min(step, w[a])
                    cand[a] -= delta
                    cand[b] += delta
                    val = objective(cand)
                    if val < best - 1e-15:
                        w, best, improved = cand, val, True
        step /= 2
    w = np.maximum(w, 0.0)
    return w / w.sum()


@dataclass
class PortfolioReport:
    years: list[int]
    weights: list[np.ndarray]
    yearly_returns: list[float]
    avg_return: float
    stdev: float | None
    sharpe: float | None
    warnings: list[str] = field(default_factory=list)
    value_dates: list = field(default_factory=list)
    value_path: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "years": self.years,
            "weights": [list(map(float, w)) for w in self.weights],
            "yearly_returns": self.yearly_returns,
            "avg_return": self.avg_return,
            "stdev": self.stdev,
            "sharpe": self.sharpe,
            "warnings": self.warnings,
        }


def _year_of(dates) -> np.ndarray:
    d = np.asarray(dates)
    if np.issubdtype(d.dtype, np.datetime64):
        return d.astype("datetime64[Y]").astype(int) + 1970
    return np.array([int(str(x)[:4]) for x in d])


def backtest(
    returns,
    index_returns,
    dates,
    p: float,
    spec: CouplingSpec | None = None,
    mode: Mode = "step",
    classifier: MarketClassifier | None = None,
    resolution: int = 20,
    condition: Literal["loss", "return"] = "loss",
) -> PortfolioReport:
    """Fit on year ``t-1``, hold the weights (buy and hold) through year ``t``.

    ``returns`` is ``(days, assets)`` of simple daily returns.  Losses are the
    negated returns.  By default the conditioning variable is the market's loss
    level, so the tail event ``U_cond > p`` selects the worst market days;
    ``condition="return"`` conditions on the class value itself.  Years whose
    previous calendar year has no data are skipped with a warning.
    """
    R = np.atleast_2d(np.asarray(returns, dtype=float))
    idx = np.asarray(index_returns, dtype=float).ravel()
    if R.shape[0] != idx.size:
        raise ValueError("returns and index returns are not aligned")
    years = _year_of(dates)
    if years.size != idx.size:
        raise ValueError("dates and returns are not aligned")
    classifier = classifier or MarketClassifier()
    if condition not in ("loss", "return"):
        raise ValueError("condition must be 'loss' or 'return'")
    market = classifier.loss_levels(idx) if condition == "loss" else classifier.classify(idx)
    present = sorted(set(years.tolist()))
    rep_years, weights, yearly, notes = [], [], [], []
    value_dates, path = [], []
    value = 1.0
    dates_arr = np.asarray(dates)
    for t in range(present[0] + 1, present[-1] + 1):
        if t not in present:
            notes.append(f"year {t} skipped: no data")
            continue
        prev = years == t - 1
        if not prev.any():
            notes.append(f"year {t} skipped: no data for {t - 1}")
            continue
        w = min_mes_weights(-R[prev].T, market[prev], p, spec, mode, resolution)
        cur = years == t
        growth = np.cumprod(1.0 + R[cur], axis=0)
        held = growth @ w
        yearly.append(float(held[-1] - 1.0))
        rep_years.append(int(t))
        weights.append(w)
        value_dates.extend(dates_arr[cur].tolist())
        path.extend((value * held).tolist())
        value *= held[-1]
    for msg in notes:
        warnings.warn(msg)
    if not yearly:
        raise ValueError("need at least two consecutive years of data")
    pm = perf_metrics(yearly)
    return PortfolioReport(rep_years, weights, yearly, pm.avg, pm.stdev, pm.sharpe, notes, value_dates, np.array(path))
