"""Failure-probability ranges, severities and per-e R_min/R_max.

Every quantity is a linear functional of the weights W over the eligibility
polytope of an eligible e, optimized per e and then combined over e:

    R_i range  = [min_e min_W sum W_j 1{g_i(a_j) >= 0},  max_e max_W ...]
    severity_i = max_e max_W sum W_j g_i(a_j) 1{g_i(a_j) >= 0}
    R_min/R_max(e) = min_W / max_W of sum W_j 1{some g_i(a_j) >= 0}
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eligibility import bound_linear_over_polytope
from .errors import EmptySetError, InvalidInputError
from .model import evaluate_requirements


@dataclass(frozen=True)
class FailureIndicatorVector:
    per_requirement: np.ndarray  # [G, k] bool
    combined: np.ndarray  # [k] bool, OR over requirements

    @classmethod
    def from_values(cls, g) -> "FailureIndicatorVector":
        fail = np.atleast_2d(np.asarray(g, dtype=float)) >= 0
        return cls(fail.T.copy(), fail.any(axis=1))


@dataclass
class RminRmaxRow:
    index: int
    e: np.ndarray
    r_min: float
    r_max: float


@dataclass
class ReliabilityReport:
    requirement_ranges: np.ndarray  # [G, 2]
    combined_range: tuple[float, float]
    severities: np.ndarray  # [G]
    table: list[RminRmaxRow]


def _eligible(records, polytopes):
    items = [(idx, rec, polytopes[idx]) for idx, rec in enumerate(records) if rec.eligible and idx in polytopes]
    if not items:
        raise EmptySetError("no eligible e with a weight polytope")
    return items


def _requirement_values(model, poly, e, theta) -> np.ndarray:
    if poly.a_samples is None:
        raise InvalidInputError("weight polytope carries no a-samples to evaluate requirements at")
    g = evaluate_requirements(model, poly.a_samples, e, theta)
    if g.shape[0] != poly.k:
        raise InvalidInputError(f"got {g.shape[0]} requirement rows for {poly.k} weights")
    return g


def _bounds(poly, c, backend):
    return (
        bound_linear_over_polytope(poly, c, "min", backend),
        bound_linear_over_polytope(poly, c, "max", backend),
    )


def failure_prob_range(records, model, theta, polytopes, backend: str = "highs"):
    """Per-requirement ranges [G, 2] and the combined (any-failure) range."""
    lo = hi = None
    c_lo, c_hi = np.inf, -np.inf
    for _, rec, poly in _eligible(records, polytopes):
        ind = FailureIndicatorVector.from_values(_requirement_values(model, poly, rec.e, theta))
        per = np.array([_bounds(poly, v.astype(float), backend) for v in ind.per_requirement])
        lo = per[:, 0] if lo is None else np.minimum(lo, per[:, 0])
        hi = per[:, 1] if hi is None else np.maximum(hi, per[:, 1])
        b = _bounds(poly, ind.combined.astype(float), backend)
        c_lo, c_hi = min(c_lo, b[0]), max(c_hi, b[1])
    return np.column_stack([lo, hi]), (c_lo, c_hi)


def severity(records, model, theta, polytopes, i: int, backend: str = "highs") -> float:
    """Worst-case expected positive part of requirement i."""
    worst = -np.inf
    for _, rec, poly in _eligible(records, polytopes):
        g = _requirement_values(model, poly, rec.e, theta)
        if not 0 <= i < g.shape[1]:
            raise InvalidInputError(f"requirement index {i} out of range for {g.shape[1]} requirements")
        c = np.where(g[:, i] >= 0, g[:, i], 0.0)
        worst = max(worst, bound_linear_over_polytope(poly, c, "max", backend))
    return float(worst)


def rmin_rmax_table(records, model, theta, polytopes, backend: str = "highs") -> list[RminRmaxRow]:
    rows = []
    for idx, rec, poly in _eligible(records, polytopes):
        ind = FailureIndicatorVector.from_values(_requirement_values(model, poly, rec.e, theta))
        r_min, r_max = _bounds(poly, ind.combined.astype(float), backend)
        rows.append(RminRmaxRow(idx, np.asarray(rec.e), r_min, r_max))
    return rows


def reliability_report(records, model, theta, polytopes, backend: str = "highs") -> ReliabilityReport:
    """All of the above with one requirement evaluation per eligible e."""
    items = _eligible(records, polytopes)
    per_lo = per_hi = sev = None
    table = []
    for idx, rec, poly in items:
        g = _requirement_values(model, poly, rec.e, theta)
        ind = FailureIndicatorVector.from_values(g)
        per = np.array([_bounds(poly, v.astype(float), backend) for v in ind.per_requirement])
        s = np.array(
            [bound_linear_over_polytope(poly, np.where(col >= 0, col, 0.0), "max", backend) for col in g.T]
        )
        per_lo = per[:, 0] if per_lo is None else np.minimum(per_lo, per[:, 0])
        per_hi = per[:, 1] if per_hi is None else np.maximum(per_hi, per[:, 1])
        sev = s if sev is None else np.maximum(sev, s)
        r_min, r_max = _bounds(poly, ind.combined.astype(float), backend)
        table.append(RminRmaxRow(idx, np.asarray(rec.e), r_min, r_max))
    combined = (min(r.r_min for r in table), max(r.r_max for r in table))
    return ReliabilityReport(np.column_stack([per_lo, per_hi]), combined, sev, table)


def low_rmin_subset(table: list[RminRmaxRow], quantile: float = 0.5) -> list[int]:
    """Indices of table rows whose R_min is at or below the given quantile."""
    if not table:
        return []
    cut = np.quantile([r.r_min for r in table], quantile)
    return [r.index for r in table if r.r_min <= cut]
