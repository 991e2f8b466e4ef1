"""One-dimensional atomic marginals and the randomized probability integral transform."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

MASS_FLOOR = 1e-15
SUM_TOL = 1e-12

RoundingRule = Literal["half_away", "half_even"]


def round_values(values, decimals: int | None, rule: RoundingRule = "half_away") -> np.ndarray:
    """Round to ``decimals`` places.

    ``half_away`` rounds ties away from zero on the decimal literal, so
    ``0.15 -> 0.2`` even though the binary double is slightly below 0.15.
    """
    x = np.asarray(values, dtype=float)
    if decimals is None:
        return x.copy()
    scale = 10.0 ** int(decimals)
    # snap representation error (e.g. 2.675*100 = 267.49999999999997) before the tie test
    scaled = np.round(x * scale, 9)
    if rule == "half_away":
        out = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    elif rule == "half_even":
        out = np.round(scaled)
    else:
        raise ValueError(f"unknown rounding rule {rule!r}")
    return out / scale + 0.0  # +0.0 turns -0.0 into 0.0


@dataclass(frozen=True, eq=False)
class DiscreteMarginal:
    """Finite atomic distribution on the real line.

    Parameters
    ----------
    support : array_like
        Strictly increasing atoms.
    masses : array_like
        Positive probabilities, one per atom, summing to one.
    """

    support: np.ndarray
    masses: np.ndarray
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = np.array(self.support, dtype=float).ravel()
        p = np.array(self.masses, dtype=float).ravel()
        if s.size == 0:
            raise ValueError("no data")
        if s.shape != p.shape:
            raise ValueError("support and masses differ in length")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(p))):
            raise ValueError("non-finite support or mass")
        if np.any(np.diff(s) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(p < MASS_FLOOR):
            raise ValueError(f"masses must be >= {MASS_FLOOR}")
        total = p.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"masses sum to {total!r}, not 1")
        cum = np.concatenate(([0.0], np.cumsum(p)))
        cum[-1] = 1.0
        np.minimum(cum, 1.0, out=cum)
        for a in (s, p, cum):
            a.setflags(write=False)
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "masses", p)
        object.__setattr__(self, "_cum", cum)

    def __len__(self) -> int:
        return self.support.size

    def __repr__(self) -> str:
        return f"DiscreteMarginal(n_atoms={len(self)}, range=[{self.support[0]:g}, {self.support[-1]:g}])"

    @classmethod
    def point_mass(cls, x: float) -> "DiscreteMarginal":
        return cls([x], [1.0])

    @property
    def breakpoints(self) -> np.ndarray:
        """``[0, F(x_1), ..., F(x_m)]``; atom ``k`` owns ``(b_k, b_{k+1}]``."""
        return self._cum

    @property
    def mean(self) -> float:
        return float(self.support @ self.masses)

    def index_of(self, x) -> np.ndarray:
        """Atom index of each ``x``; raises if some ``x`` is not an atom."""
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.support, x, side="left")
        kc = np.minimum(k, len(self) - 1)
        if np.any((k >= len(self)) | (self.support[kc] != x)):
            raise ValueError("not an atom")
        return kc

    def cdf(self, x):
        """``P(X <= x)``."""
        return self._cum[np.searchsorted(self.support, x, side="right")]

    def cdf_left(self, x):
        """``P(X < x)``."""
        return self._cum[np.searchsorted(self.support, x, side="left")]

    def quantile(self, u):
        """Left-continuous inverse ``inf{s : F(s) >= u}``; ``quantile(0)`` is the minimum atom."""
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)) or np.any(np.isnan(u)):
            raise ValueError("u must lie in [0, 1]")
        k = np.searchsorted(self._cum[1:], u, side="left")
        return self.support[np.minimum(k, len(self) - 1)]

    def pit(self, x, v):
        """Randomized PIT ``F(x-) + v * (F(x) - F(x-))`` for atoms ``x``."""
        k = self.index_of(x)
        v = np.asarray(v, dtype=float)
        if np.any((v < 0) | (v > 1)):
            raise ValueError("v must lie in [0, 1]")
        lo = self._cum[k]
        return lo + v * (self._cum[k + 1] - lo)

    # piecewise-linear quantile through (cell midpoint, atom), flat beyond the outer midpoints

    def _knots(self):
        mid = 0.5 * (self._cum[:-1] + self._cum[1:])
        return mid, self.support

    def interp_quantile(self, u):
        if np.any((np.asarray(u) < 0) | (np.asarray(u) > 1)):
            raise ValueError("u must lie in [0, 1]")
        mid, x = self._knots()
        return np.interp(u, mid, x)

    def _interp_primitive(self, u):
        """``G(u) = int_0^u interp_quantile``."""
        mid, x = self._knots()
        u = np.asarray(u, dtype=float)
        if len(self) == 1:
            return x[0] * u
        seg = np.diff(mid)
        g_knots = np.concatenate(([x[0] * mid[0]], x[0] * mid[0] + np.cumsum(0.5 * seg * (x[:-1] + x[1:]))))
        k = np.clip(np.searchsorted(mid, u, side="right") - 1, -1, len(self) - 1)
        below = k < 0
        above = k >= len(self) - 1
        kk = np.clip(k, 0, len(self) - 2)
        t = u - mid[kk]
        slope = (x[kk + 1] - x[kk]) / seg[kk]
        inner = g_knots[kk] + t * x[kk] + 0.5 * slope * t * t
        out = np.where(below, x[0] * u, inner)
        return np.where(above, g_knots[-1] + (u - mid[-1]) * x[-1], out)

    def interp_quantile_mean(self, lo, hi):
        """Average of :meth:`interp_quantile` over ``[lo, hi]`` (``hi > lo``)."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return (self._interp_primitive(hi) - self._interp_primitive(lo)) / (hi - lo)


def marginal_from_samples(
    values: Iterable[float], rounding: int | None = None, rule: RoundingRule = "half_away"
) -> DiscreteMarginal:
    """Empirical marginal of ``values`` after optional rounding to ``rounding`` places."""
    x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no data")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite sample")
    support, counts = np.unique(round_values(x, rounding, rule), return_counts=True)
    return DiscreteMarginal(support, counts / x.size)


def cdf(m: DiscreteMarginal, x):
    return m.cdf(x)


def cdf_left(m: DiscreteMarginal, x):
    return m.cdf_left(x)


def quantile(m: DiscreteMarginal, u):
    return m.quantile(u)


def pit(m: DiscreteMarginal, x, v):
    return m.pit(x, v)
