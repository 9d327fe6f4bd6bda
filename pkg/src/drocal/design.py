"""Robust design objective and coordinate Kiefer-Wolfowitz descent.

The objective at a design theta is the worst case over eligible e of the
best-case (polytope-min) probability that some requirement fails:

    f(theta) = max_e min_W sum_j W_j 1{any g_i(a_j, e, theta) >= 0}

The optimizer works on a normalized position x with theta = theta_b * x
(elementwise), starting from x = 1, and for n = 1..n_max and each
coordinate i takes a central difference with perturbation c_n = c0 n^-1/4
and step a_n = a0 / n.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .constants import KW_A0, KW_C0, KW_N_MAX
from .eligibility import (
    WeightPolytope,
    bound_linear_over_polytope,
    build_indicator_tensor,
    simulate_summaries,
    solve_min_q,
)
from .errors import DrocalError, EmptySetError, InvalidInputError
from .model import evaluate_requirements, sample_uniform
from .seeding import derive_seed
from .summary import DEFAULT_BANDS

log = logging.getLogger(__name__)

# Slack added to a fresh sample set's own q* when the configured threshold
# leaves its polytope empty.
_RELAX_EPS = 1e-9


class RobustObjective:
    """Callable ``f(theta, seed)`` over a frozen eligibility set.

    With ``seed=None`` (or ``fresh_samples=False``) the a-samples and
    polytopes from the eligibility run are reused. With a seed, k fresh
    a-samples are drawn and each eligible e gets a new polytope over them;
    if that polytope is empty at the configured threshold, the threshold is
    raised to that sample set's own q* (plus 1e-9). Fresh polytopes do not
    depend on theta, so the last few seeds are cached.
    """

    def __init__(self, records, polytopes, model, bands=DEFAULT_BANDS, fresh_samples=True, backend="highs", cache_size=4):
        self.items = [(idx, np.asarray(rec.e)) for idx, rec in enumerate(records) if rec.eligible and idx in polytopes]
        if not self.items:
            raise EmptySetError("robust objective needs at least one eligible e")
        self.frozen = [polytopes[idx] for idx, _ in self.items]
        first = self.frozen[0]
        self.data_summaries = first.tensor.data_summaries
        self.q_threshold = first.q_threshold
        self.k = first.k
        self.model = model
        self.bands = bands
        self.fresh_samples = fresh_samples
        self.backend = backend
        self.cache_size = cache_size
        self._cache = OrderedDict()
        self.relaxed = {}  # seed -> number of polytopes whose threshold was raised

    def polytopes_for(self, seed) -> list[WeightPolytope]:
        if seed is None or not self.fresh_samples:
            return self.frozen
        if seed in self._cache:
            self._cache.move_to_end(seed)
            return self._cache[seed]
        a = sample_uniform(self.model.a_box, self.k, seed)
        polys, relaxed = [], 0
        for _, e in self.items:
            tensor = build_indicator_tensor(self.data_summaries, simulate_summaries(self.model, a, e, self.bands))
            q_star, _ = solve_min_q(tensor, self.backend)
            q = self.q_threshold
            if q_star > q:
                q = q_star + _RELAX_EPS
                relaxed += 1
            polys.append(WeightPolytope(tensor, q, a))
        self.relaxed[seed] = relaxed
        self._cache[seed] = polys
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return polys

    def __call__(self, theta, seed=None) -> float:
        theta = np.asarray(theta, dtype=float)
        worst = -np.inf
        for (_, e), poly in zip(self.items, self.polytopes_for(seed)):
            g = evaluate_requirements(self.model, poly.a_samples, e, theta)
            fail = (g >= 0).any(axis=1).astype(float)
            worst = max(worst, bound_linear_over_polytope(poly, fail, "min", self.backend))
        return float(worst)


def robust_objective(theta, records, polytopes, model, seed=None, bands=DEFAULT_BANDS, backend="highs") -> float:
    return RobustObjective(records, polytopes, model, bands, backend=backend)(theta, seed)


@dataclass
class KwConfig:
    theta_baseline: np.ndarray
    c0: float = KW_C0
    a0: float = KW_A0
    n_max: int = KW_N_MAX
    exponent: float = 0.25
    return_best: bool = False

    def __post_init__(self):
        self.theta_baseline = np.asarray(self.theta_baseline, dtype=float)
        if self.theta_baseline.ndim != 1 or not np.all(np.isfinite(self.theta_baseline)):
            raise InvalidInputError("theta_baseline must be a finite vector")
        if not (self.c0 > 0 and self.a0 > 0 and self.n_max >= 1):
            raise InvalidInputError("need c0 > 0, a0 > 0 and n_max >= 1")

    def schedules(self, n: int) -> tuple[float, float]:
        """(c_n, a_n) at outer iteration n >= 1."""
        return self.c0 / n**self.exponent, self.a0 / n


@dataclass
class KwStep:
    n: int
    i: int
    seed: int
    c_n: float
    a_n: float
    x_before: np.ndarray
    u: float
    l: float
    g: float
    x_after: np.ndarray


@dataclass
class KwTrace:
    steps: list[KwStep] = field(default_factory=list)
    # (n, f at theta_b * x after iteration n) when tracking the best iterate;
    # n = 0 is the baseline.
    checkpoints: list[tuple[int, float]] = field(default_factory=list)
    eval_seed: int | None = None
    best_n: int | None = None


class KwError(DrocalError):
    """Objective failure during KW; carries the trace up to the failure."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def kw_optimize(f, cfg: KwConfig, seed: int = 0):
    """Coordinate-wise KW descent on ``f(theta, seed)``.

    Both evaluations of one central difference share a seed derived from
    (seed, n, i), so their a-samples coincide. With ``cfg.return_best`` the
    iterate after every outer loop is also scored at one fixed seed and the
    best of those (baseline included) is returned instead of the last.
    Returns (theta_new, trace).
    """
    theta_b = cfg.theta_baseline
    d = theta_b.size
    x = np.ones(d)
    trace = KwTrace()

    def evaluate(theta, s):
        try:
            return float(f(theta, s))
        except Exception as exc:
            raise KwError(f"objective failed at theta={theta.tolist()}: {exc}", trace) from exc

    best_x, best_f = x.copy(), None
    if cfg.return_best:
        trace.eval_seed = derive_seed(seed, 0, 0)
        best_f = evaluate(theta_b * x, trace.eval_seed)
        trace.checkpoints.append((0, best_f))
        trace.best_n = 0

    for n in range(1, cfg.n_max + 1):
        c_n, a_n = cfg.schedules(n)
        for i in range(d):
            s = derive_seed(seed, n, i)
            step = np.zeros(d)
            step[i] = c_n
            u = evaluate(theta_b * (x + step), s)
            l = evaluate(theta_b * (x - step), s)
            g = (u - l) / (2 * c_n)
            x_new = x.copy()
            x_new[i] -= a_n * g
            trace.steps.append(KwStep(n, i, s, c_n, a_n, x.copy(), u, l, g, x_new.copy()))
            x = x_new
        log.debug("KW iteration %d: x = %s", n, np.array2string(x, precision=4))
        if cfg.return_best:
            fx = evaluate(theta_b * x, trace.eval_seed)
            trace.checkpoints.append((n, fx))
            if fx < best_f:
                best_x, best_f, trace.best_n = x.copy(), fx, n

    final = best_x if cfg.return_best else x
    return theta_b * final, trace
