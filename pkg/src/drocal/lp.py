"""Linear programming backends.

Two interchangeable solvers for

    min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lb <= x <= ub

``highs``  scipy's HiGHS (default; sparse, fast, deterministic).
``bland``  a dense two-phase tableau simplex with Bland's anti-cycling rule,
           meant for small instances and as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import InfeasibleError, SolverError

FEAS_TOL = 1e-9
BACKENDS = ("highs", "bland")


@dataclass
class LPResult:
    x: np.ndarray
    fun: float


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None, backend="highs") -> LPResult:
    """Solve an LP; raise ``InfeasibleError`` or ``SolverError`` on failure.

    ``bounds`` is a pair of arrays (lb, ub) with +-inf for missing sides, or
    None for x >= 0.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    if bounds is None:
        lb, ub = np.zeros(n), np.full(n, np.inf)
    else:
        lb, ub = (np.asarray(b, dtype=float) for b in bounds)
    rows = sum(A.shape[0] for A in (A_ub, A_eq) if A is not None)
    shape = (rows, n)
    if backend == "highs":
        return _solve_highs(c, A_ub, b_ub, A_eq, b_eq, lb, ub, shape)
    if backend == "bland":
        return _solve_bland(c, A_ub, b_ub, A_eq, b_eq, lb, ub, shape)
    raise ValueError(f"unknown LP backend {backend!r}; choose from {BACKENDS}")


def _solve_highs(c, A_ub, b_ub, A_eq, b_eq, lb, ub, shape):
    bounds = np.column_stack([np.where(np.isfinite(lb), lb, -np.inf), np.where(np.isfinite(ub), ub, np.inf)])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": FEAS_TOL, "dual_feasibility_tolerance": FEAS_TOL},
    )
    if res.status == 2:
        raise InfeasibleError("LP is infeasible", shape)
    if res.status != 0:
        raise SolverError(f"HiGHS failed with status {res.status}: {res.message}", shape)
    return LPResult(np.asarray(res.x), float(res.fun))


def _dense(A):
    if A is None:
        return None
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def _solve_bland(c, A_ub, b_ub, A_eq, b_eq, lb, ub, shape):
    """Reduce to standard form (x' >= 0, equality rows) and run the tableau."""
    n = c.size
    A_ub, A_eq = _dense(A_ub), _dense(A_eq)
    # Substitute x = lb + x' for finite lb, x = ub - x' for upper-only,
    # x = x+ - x- for free variables.
    cols = []  # (original index, sign)
    shift = np.zeros(n)
    for j in range(n):
        if np.isfinite(lb[j]):
            shift[j] = lb[j]
            cols.append((j, 1.0))
        elif np.isfinite(ub[j]):
            shift[j] = ub[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    T = np.zeros((n, len(cols)))
    for col, (j, sign) in enumerate(cols):
        T[j, col] = sign

    ub_rows, ub_rhs = [], []
    if A_ub is not None:
        ub_rows.append(A_ub)
        ub_rhs.append(np.asarray(b_ub, dtype=float))
    # finite upper bounds on lower-bounded variables become rows
    extra = [j for j in range(n) if np.isfinite(lb[j]) and np.isfinite(ub[j])]
    if extra:
        E = np.zeros((len(extra), n))
        E[np.arange(len(extra)), extra] = 1.0
        ub_rows.append(E)
        ub_rhs.append(ub[extra])
    A1 = np.vstack(ub_rows) if ub_rows else np.zeros((0, n))
    b1 = np.concatenate(ub_rhs) if ub_rhs else np.zeros(0)
    A2 = A_eq if A_eq is not None else np.zeros((0, n))
    b2 = np.asarray(b_eq, dtype=float) if A_eq is not None else np.zeros(0)

    b1 = b1 - A1 @ shift
    b2 = b2 - A2 @ shift
    A1, A2 = A1 @ T, A2 @ T
    n_ub = A1.shape[0]
    # equality form with slacks on the inequality rows
    A = np.block([[A1, np.eye(n_ub)], [A2, np.zeros((A2.shape[0], n_ub))]])
    b = np.concatenate([b1, b2])
    cost = np.concatenate([T.T @ c, np.zeros(n_ub)])
    z = bland_simplex(cost, A, b, shape)
    x = shift + T @ z[: T.shape[1]]
    return LPResult(x, float(c @ x))


def bland_simplex(c, A, b, shape=None, max_iter=50_000):
    """min c.x s.t. A x = b, x >= 0 via two-phase tableau with Bland's rule."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    shape = shape or (m, n)
    tol = 1e-10

    # phase 1 tableau: [A | I | b], artificials n..n+m-1
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = b
    basis = list(range(n, n + m))
    tab[m, :] = 0.0
    tab[m, n : n + m] = 1.0
    for i in range(m):
        tab[m] -= tab[i]
    _pivot_loop(tab, basis, n + m, tol, max_iter, shape)
    if tab[m, -1] < -1e-8 * max(1.0, np.abs(b).max(initial=0.0)):
        raise InfeasibleError("LP is infeasible", shape)

    # drive artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            row = tab[i, :n]
            cand = np.nonzero(np.abs(row) > tol)[0]
            if cand.size:
                _pivot(tab, basis, i, int(cand[0]))
    keep = [i for i in range(m) if basis[i] < n]
    tab = np.vstack([tab[keep], tab[m : m + 1]])
    tab = np.delete(tab, np.s_[n : n + m], axis=1)
    basis = [basis[i] for i in keep]
    m2 = len(keep)

    # phase 2 objective row
    tab[m2, :] = 0.0
    tab[m2, :n] = c
    for i, j in enumerate(basis):
        tab[m2] -= c[j] * tab[i]
    _pivot_loop(tab, basis, n, tol, max_iter, shape)
    x = np.zeros(n)
    for i, j in enumerate(basis):
        x[j] = tab[i, -1]
    return x


def _pivot(tab, basis, row, col):
    tab[row] /= tab[row, col]
    for i in range(tab.shape[0]):
        if i != row and tab[i, col] != 0.0:
            tab[i] -= tab[i, col] * tab[row]
    basis[row] = col


def _pivot_loop(tab, basis, n_cols, tol, max_iter, shape):
    m = tab.shape[0] - 1
    for _ in range(max_iter):
        obj = tab[m, :n_cols]
        entering = np.nonzero(obj < -tol)[0]
        if entering.size == 0:
            return
        col = int(entering[0])  # Bland: lowest index
        column = tab[:m, col]
        pos = column > tol
        if not pos.any():
            raise SolverError("LP is unbounded", shape)
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + tol * max(1.0, abs(best)))[0]
        row = min(ties, key=lambda i: basis[i])  # Bland: lowest leaving index
        _pivot(tab, basis, int(row), col)
    raise SolverError(f"simplex exceeded {max_iter} pivots", shape)
