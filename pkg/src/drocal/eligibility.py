"""Eligibility LPs, eligibility-set construction and range studies.

For one epistemic value e with simulated summaries S_r(y(a_j, e)) and data
summaries s_r^(i), the degree of eligibility is

    q* = min q
         s.t. F_r(s+) - q/sqrt(n1) <= sum_j W_j 1{S_r(y_j) <= s} <= F_r(s-) + q/sqrt(n1)
              for every distinct data value s of every summary r,
              sum_j W_j = 1,  W >= 0

and e is eligible when q* <= q_{1-alpha/m}.

The HiGHS route uses a sparse form: for each summary r, sort the distinct
data values v_1 < ... < v_U and introduce cumulative masses
P_{r,u} = sum of W_j with S_r(y_j) <= v_u, linked by
P_{r,u} - P_{r,u-1} = sum of W_j whose value falls in (v_{u-1}, v_u].
Each weight then appears in one linking row per summary instead of in
every sandwich row. The ``bland`` route solves the dense indicator form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .empirical import Ecdf, bonferroni_threshold, ecdf_left, ecdf_right
from .errors import (
    EmptySetError,
    InfeasibleError,
    InvalidInputError,
    ModelEvaluationError,
    SolverError,
)
from .lp import solve_lp
from .model import Box, simulate_outputs
from .parallel import parallel_map
from .summary import DEFAULT_BANDS, TimeSeries, summarize_batch

log = logging.getLogger(__name__)

WITNESS_TOL = 1e-6


@dataclass(frozen=True)
class IndicatorTensor:
    data_summaries: np.ndarray
    sim_summaries: np.ndarray

    @property
    def n1(self) -> int:
        return self.data_summaries.shape[0]

    @property
    def k(self) -> int:
        return self.sim_summaries.shape[0]

    @property
    def m(self) -> int:
        return self.data_summaries.shape[1]

    @cached_property
    def bits(self) -> np.ndarray:
        """bits[j, i, r] = 1{sim[j, r] <= data[i, r]}, shape [k, n1, m]."""
        return self.sim_summaries[:, None, :] <= self.data_summaries[None, :, :]

    @cached_property
    def _rows(self):
        """Distinct-value sandwich rows per summary: (values, F(v+), F(v-))."""
        rows = []
        for r in range(self.m):
            col = self.data_summaries[:, r]
            ecdf = Ecdf.from_sample(col)
            v = np.unique(col)
            rows.append((v, ecdf_right(ecdf, v), ecdf_left(ecdf, v)))
        return rows

    @cached_property
    def _sparse(self):
        """Linking equalities and bound vectors of the cumulative-mass form."""
        k = self.k
        n_cum = sum(v.size for v, _, _ in self._rows)
        n_var = k + n_cum + 1
        er, ec, ev = [], [], []
        row = 0
        for r, (v, _, _) in enumerate(self._rows):
            U = v.size
            idx = np.arange(U)
            er += [row + idx, row + idx[1:]]
            ec += [k + row + idx, k + row + idx[:-1]]
            ev += [np.ones(U), -np.ones(U - 1)]
            bins = np.searchsorted(v, self.sim_summaries[:, r], side="left")
            inside = bins < U
            er.append(row + bins[inside])
            ec.append(np.nonzero(inside)[0])
            ev.append(-np.ones(inside.sum()))
            row += U
        er.append(np.full(k, row))
        ec.append(np.arange(k))
        ev.append(np.ones(k))
        A_eq = sp.csr_matrix(
            (np.concatenate(ev), (np.concatenate(er), np.concatenate(ec))), shape=(row + 1, n_var)
        )
        b_eq = np.zeros(row + 1)
        b_eq[-1] = 1.0
        lo = np.concatenate([F_plus for _, F_plus, _ in self._rows])
        hi = np.concatenate([F_minus for _, _, F_minus in self._rows])
        return A_eq, b_eq, lo, hi

    def sandwich_matrix(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Dense (B, F(v+), F(v-)) with B[u, j] = 1{sim_j <= v_u} over all rows."""
        blocks, lo, hi = [], [], []
        for r, (v, F_plus, F_minus) in enumerate(self._rows):
            blocks.append((self.sim_summaries[None, :, r] <= v[:, None]).astype(float))
            lo.append(F_plus)
            hi.append(F_minus)
        return np.vstack(blocks), np.concatenate(lo), np.concatenate(hi)

    def violation(self, weights) -> float:
        """Smallest q at which ``weights`` satisfy every sandwich row."""
        B, lo, hi = self.sandwich_matrix()
        mass = B @ np.asarray(weights, dtype=float)
        return float(np.sqrt(self.n1) * max(np.max(lo - mass), np.max(mass - hi)))


def build_indicator_tensor(data_summaries, sim_summaries) -> IndicatorTensor:
    data = np.atleast_2d(np.asarray(data_summaries, dtype=float))
    sim = np.atleast_2d(np.asarray(sim_summaries, dtype=float))
    if data.ndim != 2 or sim.ndim != 2 or data.shape[1] != sim.shape[1]:
        raise InvalidInputError(f"summary dimension mismatch: data {data.shape}, sims {sim.shape}")
    if data.shape[0] < 1 or sim.shape[0] < 1:
        raise InvalidInputError("need at least one data point and one simulation")
    if not (np.all(np.isfinite(data)) and np.all(np.isfinite(sim))):
        raise InvalidInputError("summaries must be finite")
    return IndicatorTensor(data, sim)


def _lp_sparse(tensor: IndicatorTensor, q_bounds, objective=None):
    A_eq, b_eq, lo, hi = tensor._sparse
    k = tensor.k
    n_cum = lo.size
    s = 1.0 / np.sqrt(tensor.n1)
    I = sp.identity(n_cum, format="csr")
    col = sp.csr_matrix(np.full((n_cum, 1), -s))
    Z = sp.csr_matrix((n_cum, k))
    A_ub = sp.vstack([sp.hstack([Z, -I, col]), sp.hstack([Z, I, col])], format="csr")
    b_ub = np.concatenate([-lo, hi])
    c = np.zeros(k + n_cum + 1)
    if objective is None:
        c[-1] = 1.0
    else:
        c[:k] = objective
    lb = np.concatenate([np.zeros(k), np.full(n_cum, -np.inf), [q_bounds[0]]])
    ub = np.concatenate([np.full(k, np.inf), np.full(n_cum, np.inf), [q_bounds[1]]])
    res = solve_lp(c, A_ub, b_ub, A_eq, b_eq, (lb, ub), backend="highs")
    return res.x[:k], res.x[-1], res.fun


def _lp_dense(tensor: IndicatorTensor, q_bounds, objective=None):
    B, lo, hi = tensor.sandwich_matrix()
    k = tensor.k
    s = 1.0 / np.sqrt(tensor.n1)
    col = np.full((B.shape[0], 1), -s)
    A_ub = np.block([[-B, col], [B, col]])
    b_ub = np.concatenate([-lo, hi])
    A_eq = np.concatenate([np.ones(k), [0.0]])[None, :]
    c = np.zeros(k + 1)
    if objective is None:
        c[-1] = 1.0
    else:
        c[:k] = objective
    lb = np.concatenate([np.zeros(k), [q_bounds[0]]])
    ub = np.concatenate([np.full(k, np.inf), [q_bounds[1]]])
    res = solve_lp(c, A_ub, b_ub, A_eq, [1.0], (lb, ub), backend="bland")
    return res.x[:k], res.x[-1], res.fun


def _solve(tensor, q_bounds, objective=None, backend="highs"):
    if backend == "highs":
        return _lp_sparse(tensor, q_bounds, objective)
    if backend == "bland":
        return _lp_dense(tensor, q_bounds, objective)
    raise ValueError(f"unknown LP backend {backend!r}")


def _clean_weights(w: np.ndarray) -> np.ndarray:
    w = np.clip(w, 0.0, None)
    return w / w.sum()


def solve_min_q(tensor: IndicatorTensor, backend: str = "highs") -> tuple[float, np.ndarray]:
    """Degree of eligibility q* and an optimal weight vector."""
    shape = (2 * sum(v.size for v, _, _ in tensor._rows) + 1, tensor.k + 1)
    try:
        w, q, _ = _solve(tensor, (0.0, np.inf), backend=backend)
    except InfeasibleError as exc:
        # q large enough is always feasible, so this is a solver defect
        raise SolverError(f"internal error: min-q LP reported infeasible ({exc})", shape) from exc
    w = _clean_weights(w)
    q = max(float(q), 0.0)
    if tensor.violation(w) > q + WITNESS_TOL:
        raise SolverError(
            f"witness weights violate the sandwich at q*={q:.9g} by {tensor.violation(w) - q:.3g}", shape
        )
    return q, w


def check_feasible(tensor: IndicatorTensor, q: float, backend: str = "highs") -> bool:
    """Whether some weight vector satisfies the sandwich at threshold q."""
    if q < 0:
        raise InvalidInputError(f"q must be nonnegative, got {q}")
    try:
        _solve(tensor, (q, q), objective=np.zeros(tensor.k), backend=backend)
    except InfeasibleError:
        return False
    return True


@dataclass(frozen=True)
class WeightPolytope:
    """Probability weights on the k aleatory samples satisfying the sandwich at q."""

    tensor: IndicatorTensor
    q_threshold: float
    a_samples: np.ndarray | None = None

    def __post_init__(self):
        if not self.q_threshold > 0:
            raise InvalidInputError(f"q_threshold must be positive, got {self.q_threshold}")

    @property
    def n1(self) -> int:
        return self.tensor.n1

    @property
    def k(self) -> int:
        return self.tensor.k

    @cached_property
    def nonempty(self) -> bool:
        return check_feasible(self.tensor, self.q_threshold)


def bound_linear_over_polytope(poly: WeightPolytope, c, sense: str = "min", backend: str = "highs") -> float:
    """min or max of c.W over the weight polytope."""
    c = np.asarray(c, dtype=float)
    if c.shape != (poly.k,):
        raise InvalidInputError(f"objective must have length k={poly.k}, got {c.shape}")
    if sense not in ("min", "max"):
        raise InvalidInputError(f"sense must be 'min' or 'max', got {sense!r}")
    if np.ptp(c) == 0.0:
        # constant objective: every feasible W gives c[0]; still confirm nonempty
        if not poly.nonempty:
            raise InfeasibleError(f"weight polytope at q={poly.q_threshold:.6g} is empty")
        return float(c[0])
    sign = 1.0 if sense == "min" else -1.0
    try:
        w, _, _ = _solve(poly.tensor, (poly.q_threshold, poly.q_threshold), sign * c, backend)
    except InfeasibleError as exc:
        raise InfeasibleError(f"weight polytope at q={poly.q_threshold:.6g} is empty") from exc
    return float(c @ w)


@dataclass
class EligibilityRecord:
    e: np.ndarray
    q_star: float
    eligible: bool
    threshold: float
    witness_weights: np.ndarray | None = None
    error: str | None = None


def summarize_data(data, bands=DEFAULT_BANDS) -> np.ndarray:
    """[n1, m] summary matrix of a list of TimeSeries."""
    data = list(data)
    if not data:
        raise InvalidInputError("no data series given")
    out = []
    for ts in data:
        if not isinstance(ts, TimeSeries):
            raise InvalidInputError("data must be TimeSeries objects")
        out.append(summarize_batch(ts.values[None, :], ts.dt, *bands)[0])
    return np.vstack(out)


def simulate_summaries(model, a_samples, e, bands=DEFAULT_BANDS) -> np.ndarray:
    """[k, m] summaries of the model outputs at every shared a-sample for one e."""
    values, dt = simulate_outputs(model, a_samples, e)
    return summarize_batch(values, dt, *bands)


def _error_text(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {' '.join(str(exc).split())}"


def _eligibility_task(args):
    model, a_samples, e, data_summaries, bands, threshold, keep_weights, backend = args
    try:
        sims = simulate_summaries(model, a_samples, e, bands)
    except (ModelEvaluationError, InvalidInputError) as exc:
        return EligibilityRecord(np.asarray(e), np.nan, False, threshold, error=_error_text(exc))
    return _record_from_summaries(e, data_summaries, sims, threshold, keep_weights, backend)


def _record_from_summaries(e, data_summaries, sims, threshold, keep_weights, backend):
    try:
        q, w = solve_min_q(build_indicator_tensor(data_summaries, sims), backend)
    except SolverError as exc:
        return EligibilityRecord(np.asarray(e), np.nan, False, threshold, error=_error_text(exc))
    return EligibilityRecord(np.asarray(e), q, q <= threshold, threshold, w if keep_weights else None)


def _raise_if_all_failed(records):
    if records and all(r.error for r in records):
        first = records[0].error
        kind = SolverError if first.startswith(("SolverError", "InfeasibleError")) else ModelEvaluationError
        raise kind(f"all {len(records)} evaluations failed; first error: {first}")


def construct_eligibility_set(
    data,
    model,
    e_samples,
    a_samples,
    alpha: float = 0.05,
    bands=DEFAULT_BANDS,
    *,
    threshold: float | None = None,
    keep_weights: bool = False,
    jobs: int = 1,
    backend: str = "highs",
) -> list[EligibilityRecord]:
    """Simulate, summarize, solve the min-q LP per e and flag eligibility.

    ``data`` is a list of TimeSeries or an already-summarized [n1, m] matrix.
    The same ``a_samples`` are used for every e. Records come back in
    ``e_samples`` order whatever ``jobs`` is.
    """
    data_summaries = _as_summaries(data, bands)
    if threshold is None:
        threshold = bonferroni_threshold(alpha, data_summaries.shape[1])
    e_samples = np.atleast_2d(np.asarray(e_samples, dtype=float))
    a_samples = np.atleast_2d(np.asarray(a_samples, dtype=float))
    tasks = [(model, a_samples, e, data_summaries, bands, threshold, keep_weights, backend) for e in e_samples]
    records = parallel_map(_eligibility_task, tasks, jobs)
    _raise_if_all_failed(records)
    log.info(
        "eligibility: %d/%d eligible at threshold %.4f (k/n1 = %.1f)",
        sum(r.eligible for r in records),
        len(records),
        threshold,
        a_samples.shape[0] / data_summaries.shape[0],
    )
    return records


def _as_summaries(data, bands) -> np.ndarray:
    if isinstance(data, np.ndarray) and data.ndim == 2 and data.dtype.kind == "f":
        return data
    return summarize_data(data, bands)


def build_polytopes(records, data, model, a_samples, bands=DEFAULT_BANDS, q_threshold=None) -> dict:
    """Weight polytopes of the eligible records, keyed by record index."""
    data_summaries = _as_summaries(data, bands)
    polys = {}
    for idx, rec in enumerate(records):
        if not rec.eligible:
            continue
        sims = simulate_summaries(model, a_samples, rec.e, bands)
        q = rec.threshold if q_threshold is None else q_threshold
        polys[idx] = WeightPolytope(build_indicator_tensor(data_summaries, sims), q, np.asarray(a_samples))
    if not polys:
        raise EmptySetError("no eligible records to build weight polytopes from")
    return polys


def range_shrinkage_ranking(records, prior_box: Box) -> list[tuple[int, float]]:
    """Rank epistemic dimensions by how much eligibility shrinks their range.

    score_d = 1 - (95th - 5th percentile of eligible e_d) / prior width_d.
    Returns (dimension, score) pairs, highest score first; ties keep
    dimension order.
    """
    eligible = np.array([r.e for r in records if r.eligible])
    if eligible.size == 0:
        raise EmptySetError("range ranking needs at least one eligible record")
    lo, hi = np.percentile(eligible, [5, 95], axis=0)
    width = prior_box.width
    if np.any(width <= 0):
        raise InvalidInputError("prior box has a zero-width dimension")
    scores = 1.0 - (hi - lo) / width
    order = sorted(range(scores.size), key=lambda d: -scores[d])
    return [(d, float(scores[d])) for d in order]


@dataclass
class StudyRow:
    size: int
    seed: int
    n_eligible: int
    n_records: int
    eligible_fraction: float
    ranges: np.ndarray = field(repr=False)  # [dim_e, 2], NaN when nothing is eligible


def _study_task(args):
    e, data_sub, sims, threshold, backend = args
    if isinstance(sims, str):
        return EligibilityRecord(np.asarray(e), np.nan, False, threshold, error=sims)
    return _record_from_summaries(e, data_sub, sims, threshold, False, backend)


def _sim_task(args):
    model, a_samples, e, bands = args
    try:
        return simulate_summaries(model, a_samples, e, bands)
    except (ModelEvaluationError, InvalidInputError) as exc:
        return _error_text(exc)


def n1_impact_study(
    data,
    model,
    sizes,
    seeds,
    e_samples,
    a_samples,
    alpha: float = 0.05,
    bands=DEFAULT_BANDS,
    *,
    threshold: float | None = None,
    jobs: int = 1,
    backend: str = "highs",
) -> list[StudyRow]:
    """Rerun the eligibility construction on subsamples of the data.

    For every (size, seed) pair, ``size`` series are drawn without
    replacement (indices kept in original order) and the eligible fraction
    and per-dimension eligible ranges are reported. Simulations do not
    depend on the data, so they are computed once and reused.
    """
    data_summaries = _as_summaries(data, bands)
    n1 = data_summaries.shape[0]
    sizes = [int(s) for s in sizes]
    for s in sizes:
        if not 1 <= s <= n1:
            raise InvalidInputError(f"subsample size {s} is outside [1, {n1}]")
    if threshold is None:
        threshold = bonferroni_threshold(alpha, data_summaries.shape[1])
    e_samples = np.atleast_2d(np.asarray(e_samples, dtype=float))
    a_samples = np.atleast_2d(np.asarray(a_samples, dtype=float))
    sims = parallel_map(_sim_task, [(model, a_samples, e, bands) for e in e_samples], jobs)
    if all(isinstance(s, str) for s in sims):
        raise ModelEvaluationError(f"all {len(sims)} simulations failed; first error: {sims[0]}")

    rows = []
    for size in sizes:
        for seed in seeds:
            rng = np.random.default_rng(seed)
            idx = np.sort(rng.choice(n1, size=size, replace=False))
            sub = data_summaries[idx]
            tasks = [(e, sub, s, threshold, backend) for e, s in zip(e_samples, sims)]
            records = parallel_map(_study_task, tasks, jobs)
            elig = np.array([r.e for r in records if r.eligible]).reshape(-1, e_samples.shape[1])
            if elig.shape[0]:
                ranges = np.column_stack([elig.min(axis=0), elig.max(axis=0)])
            else:
                ranges = np.full((e_samples.shape[1], 2), np.nan)
            rows.append(StudyRow(size, int(seed), elig.shape[0], len(records), elig.shape[0] / len(records), ranges))
    return rows


def mean_fraction_by_size(rows) -> dict[int, float]:
    out = {}
    for size in dict.fromkeys(r.size for r in rows):
        out[size] = float(np.mean([r.eligible_fraction for r in rows if r.size == size]))
    return out


__all__ = [
    "IndicatorTensor",
    "EligibilityRecord",
    "WeightPolytope",
    "StudyRow",
    "build_indicator_tensor",
    "solve_min_q",
    "check_feasible",
    "bound_linear_over_polytope",
    "construct_eligibility_set",
    "build_polytopes",
    "range_shrinkage_ranking",
    "n1_impact_study",
    "mean_fraction_by_size",
    "summarize_data",
    "simulate_summaries",
]
