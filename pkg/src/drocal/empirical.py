"""Empirical CDFs, the weighted KS discrepancy and Kolmogorov quantiles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

_SERIES_TOL = 1e-12


@dataclass(frozen=True)
class Ecdf:
    sorted_points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.sorted_points, dtype=float)
        if pts.ndim != 1 or pts.size < 1:
            raise InvalidInputError("an ECDF needs at least one point")
        if np.any(np.diff(pts) < 0):
            raise InvalidInputError("ECDF points must be sorted ascending")
        object.__setattr__(self, "sorted_points", pts)

    @classmethod
    def from_sample(cls, points) -> "Ecdf":
        return cls(np.sort(np.asarray(points, dtype=float)))

    @property
    def n(self) -> int:
        return self.sorted_points.size


@dataclass(frozen=True)
class WeightedSample:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 1 or pts.shape != w.shape or pts.size == 0:
            raise InvalidInputError("points and weights must be non-empty 1-D arrays of equal length")
        if np.any(w < 0):
            raise InvalidInputError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise InvalidInputError(f"weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def cdf(self, x, *, left: bool = False):
        """Weighted step CDF at x (right-continuous), or its left limit."""
        order = np.argsort(self.points, kind="stable")
        pts = self.points[order]
        cum = np.concatenate(([0.0], np.cumsum(self.weights[order])))
        side = "left" if left else "right"
        return cum[np.searchsorted(pts, x, side=side)]


def ecdf_left(ecdf: Ecdf, x):
    """F(x-): fraction of points strictly below x."""
    return np.searchsorted(ecdf.sorted_points, x, side="left") / ecdf.n


def ecdf_right(ecdf: Ecdf, x):
    """F(x+) = F(x): fraction of points at or below x."""
    return np.searchsorted(ecdf.sorted_points, x, side="right") / ecdf.n


def ks_sup(ws: WeightedSample, ecdf: Ecdf) -> float:
    """Exact sup_x |G(x) - F(x)| between a weighted sample CDF G and an ECDF F.

    Both are right-continuous step functions, so the supremum is attained at
    a breakpoint or as a left limit at one; checking both limits at the union
    of breakpoints is exhaustive.
    """
    bp = np.union1d(ws.points, ecdf.sorted_points)
    right = np.abs(ws.cdf(bp) - ecdf_right(ecdf, bp))
    left = np.abs(ws.cdf(bp, left=True) - ecdf_left(ecdf, bp))
    return float(max(right.max(), left.max()))


def kolmogorov_cdf(x: float) -> float:
    """K(x) = P(sup |Brownian bridge| <= x).

    Uses the alternating series 1 - 2 sum (-1)^(k-1) exp(-2 k^2 x^2), stopped
    once the next term drops below 1e-12. Below x = 0.5 that series needs many
    terms and cancels badly, so the equivalent Jacobi-theta form
    sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2)) is used instead.
    """
    if x <= 0:
        return 0.0
    if x < 0.5:
        total = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * x * x))
            total += term
            if term < _SERIES_TOL * max(total, 1e-300) or term == 0.0:
                break
            k += 1
        return math.sqrt(2 * math.pi) / x * total
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2 * k * k * x * x)
        total += term if k % 2 else -term
        nxt = math.exp(-2 * (k + 1) ** 2 * x * x)
        if nxt < _SERIES_TOL:
            break
        k += 1
    return 1.0 - 2.0 * total


def kolmogorov_quantile(p: float, xtol: float = 1e-6) -> float:
    """Solve K(q) = p by bisection to within ``xtol``."""
    if not (0 < p < 1):
        raise InvalidInputError(f"p must lie in (0, 1), got {p}")
    lo, hi = 0.0, 1.0
    while kolmogorov_cdf(hi) < p:
        hi *= 2
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if kolmogorov_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bonferroni_threshold(alpha: float, m: int) -> float:
    """KS threshold q_{1 - alpha/m} for m simultaneous summaries."""
    if not (0 < alpha < 1):
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    if m < 1:
        raise InvalidInputError(f"m must be positive, got {m}")
    return kolmogorov_quantile(1 - alpha / m)
