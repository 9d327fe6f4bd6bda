"""Independent reference implementations used only by the tests.

Nothing here imports the LP code: vertex enumeration solves every square
subsystem of active constraints with numpy and keeps the feasible points.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

FEAS_TOL = 1e-9


def sandwich_rows(data, sims):
    """(B, lo, hi) built straight from the definition, one row per distinct
    data value of each summary: lo = F(v) and hi = F(v-)."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    sims = np.atleast_2d(np.asarray(sims, dtype=float))
    n1 = data.shape[0]
    B, lo, hi = [], [], []
    for r in range(data.shape[1]):
        for v in sorted(set(data[:, r].tolist())):
            B.append([1.0 if s <= v else 0.0 for s in sims[:, r]])
            lo.append(sum(1 for d in data[:, r] if d <= v) / n1)
            hi.append(sum(1 for d in data[:, r] if d < v) / n1)
    return np.array(B), np.array(lo), np.array(hi)


def _vertices(A_ub, b_ub, A_eq, b_eq):
    """All vertices of {x : A_ub x <= b_ub, A_eq x = b_eq}."""
    n = A_ub.shape[1]
    n_free = n - A_eq.shape[0]
    out = []
    for active in itertools.combinations(range(A_ub.shape[0]), n_free):
        M = np.vstack([A_eq, A_ub[list(active)]])
        rhs = np.concatenate([b_eq, b_ub[list(active)]])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, rhs)
        if np.all(A_ub @ x <= b_ub + FEAS_TOL) and np.allclose(A_eq @ x, b_eq, atol=FEAS_TOL):
            out.append(x)
    return out


def min_q_oracle(data, sims) -> float:
    """min q over the sandwich polytope in (W, q) by vertex enumeration."""
    B, lo, hi = sandwich_rows(data, sims)
    k = B.shape[1]
    s = 1.0 / math.sqrt(np.atleast_2d(data).shape[0])
    # rows: -B W - s q <= -lo ; B W - s q <= hi ; -W <= 0 ; -q <= 0
    A_ub = np.vstack(
        [
            np.hstack([-B, -s * np.ones((B.shape[0], 1))]),
            np.hstack([B, -s * np.ones((B.shape[0], 1))]),
            np.hstack([-np.eye(k), np.zeros((k, 1))]),
            np.concatenate([np.zeros(k), [-1.0]])[None, :],
        ]
    )
    b_ub = np.concatenate([-lo, hi, np.zeros(k), [0.0]])
    A_eq = np.concatenate([np.ones(k), [0.0]])[None, :]
    verts = _vertices(A_ub, b_ub, A_eq, np.array([1.0]))
    return min(v[-1] for v in verts)


def polytope_vertices(data, sims, q):
    """Vertices of the weight polytope at fixed q."""
    B, lo, hi = sandwich_rows(data, sims)
    k = B.shape[1]
    s = q / math.sqrt(np.atleast_2d(data).shape[0])
    A_ub = np.vstack([-B, B, -np.eye(k)])
    b_ub = np.concatenate([-lo + s, hi + s, np.zeros(k)])
    return _vertices(A_ub, b_ub, np.ones((1, k)), np.array([1.0]))


def linear_bounds_oracle(data, sims, q, c) -> tuple[float, float]:
    vals = [float(np.dot(c, v)) for v in polytope_vertices(data, sims, q)]
    return min(vals), max(vals)


def ks_grid_oracle(points, weights, data, grid) -> float:
    """max over grid of |G(x) - F(x)| by direct summation."""
    best = 0.0
    for x in grid:
        G = sum(w for p, w in zip(points, weights) if p <= x)
        F = sum(1 for d in data if d <= x) / len(data)
        best = max(best, abs(G - F))
    return best


def dft_direct(y) -> np.ndarray:
    """C_k = (1/N) sum_t y_t exp(+2 pi i k t / N), k = 0..N//2, by a plain loop."""
    N = len(y)
    out = np.zeros(N // 2 + 1, dtype=complex)
    for k in range(N // 2 + 1):
        acc = 0j
        for t in range(N):
            acc += y[t] * complex(math.cos(2 * math.pi * k * t / N), math.sin(2 * math.pi * k * t / N))
        out[k] = acc / N
    return out


def kw_quadratic_oracle(x0: float, target: float, c0: float, a0: float, n_max: int) -> float:
    """Closed-form KW recursion on f(x) = sum (x - target)^2 per coordinate.

    The central difference of a quadratic is exact, so every step is
    x <- x - (a0/n) * 2 (x - target).
    """
    x = x0
    for n in range(1, n_max + 1):
        x -= (a0 / n) * 2 * (x - target)
    return x
