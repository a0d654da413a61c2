"""The stability linear program and two independent solvers for it.

Problems are in the form ``min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,
x >= 0``.  :func:`solve_simplex` is a dense two-phase tableau simplex with
Bland's rule; :func:`solve_oracle` enumerates basic solutions and is only
meant for a handful of variables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InconsistencyError, ParameterError, SolverError

TOL = 1e-9

OPTIMAL, INFEASIBLE, UNBOUNDED = "Optimal", "Infeasible", "Unbounded"


def _num(x: float) -> float:
    return float(f"{x:.12g}")


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        n = len(c)
        A_ub = np.asarray(self.A_ub, dtype=float).reshape(-1, n)
        A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, n)
        b_ub = np.asarray(self.b_ub, dtype=float).reshape(-1)
        b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        if len(b_ub) != len(A_ub) or len(b_eq) != len(A_eq):
            raise ParameterError("constraint matrix and right-hand side disagree in length")
        for name, arr in (("c", c), ("A_ub", A_ub), ("b_ub", b_ub), ("A_eq", A_eq), ("b_eq", b_eq)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vars(self) -> int:
        return len(self.c)

    def residuals(self, x) -> float:
        """Largest violation of any constraint or of ``x >= 0``."""
        x = np.asarray(x, dtype=float)
        parts = [0.0, float(np.max(-x, initial=0.0))]
        if len(self.b_ub):
            parts.append(float(np.max(self.A_ub @ x - self.b_ub)))
        if len(self.b_eq):
            parts.append(float(np.max(np.abs(self.A_eq @ x - self.b_eq))))
        return max(parts)

    def to_dict(self) -> dict:
        rows = lambda A: [[_num(v) for v in row] for row in A]  # noqa: E731
        return {
            "n_vars": self.n_vars,
            "objective": [_num(v) for v in self.c],
            "A_ub": rows(self.A_ub),
            "b_ub": [_num(v) for v in self.b_ub],
            "A_eq": rows(self.A_eq),
            "b_eq": [_num(v) for v in self.b_eq],
            "lower_bounds": [0.0] * self.n_vars,
        }


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    residuals: float | None = None
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "x": None if self.x is None else [_num(v) for v in self.x],
            "objective": None if self.objective is None else _num(self.objective),
            "residuals": None if self.residuals is None else float(f"{self.residuals:.3g}"),
            "iterations": self.iterations,
        }


def build_stability_lp(params) -> LpProblem:
    """Minimise the largest busy fraction ``x_{m+1}`` over ``x_1..x_m`` with

    * ``lam_j + mu * sum_i x_i p_ij <= mu * x_j`` for each queue,
    * ``sum_i mu (1 - p_i^*) x_i = lam + lam'`` (balance), where ``p_i^*`` is
      the total re-routing probability out of queue ``i``,
    * ``x_j <= x_{m+1}``.
    """
    mu = float(params.mu)
    if not mu > 0:
        raise ParameterError("mu must be positive")
    m = params.m
    P = np.asarray(params.routing, dtype=float)
    p_sh = np.asarray(params.p_sh, dtype=float)
    lam_j = np.asarray(params.lam_j, dtype=float)

    c = np.zeros(m + 1)
    c[m] = 1.0
    flow = np.zeros((m, m + 1))
    flow[:, :m] = mu * P.T - mu * np.eye(m)
    cap = np.zeros((m, m + 1))
    cap[:, :m] = np.eye(m)
    cap[:, m] = -1.0
    A_ub = np.vstack([flow, cap])
    b_ub = np.concatenate([-lam_j, np.zeros(m)])
    A_eq = np.zeros((1, m + 1))
    A_eq[0, :m] = mu * (1.0 - P.sum(axis=1) - p_sh)
    b_eq = np.array([lam_j.sum() + float(params.lam_prime)])
    return LpProblem(c, A_ub, b_ub, A_eq, b_eq)


def _pivot(T: np.ndarray, r: int, col: int):
    T[r] /= T[r, col]
    factors = T[:, col].copy()
    factors[r] = 0.0
    T -= np.outer(factors, T[r])


def _run(T, basis, cost, allowed, tol, max_iter, counter):
    """Bland-rule simplex on tableau rows ``T = [B^-1 A | B^-1 b]``."""
    while True:
        if counter[0] >= max_iter:
            raise SolverError(f"simplex did not terminate within {max_iter} pivots")
        reduced = cost - cost[basis] @ T[:, :-1]
        entering = next((j for j in allowed if reduced[j] < -tol), None)
        if entering is None:
            return OPTIMAL
        col = T[:, entering]
        rows = np.flatnonzero(col > tol)
        if len(rows) == 0:
            return UNBOUNDED
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        r = min(ties, key=lambda i: basis[i])
        _pivot(T, r, entering)
        basis[r] = entering
        counter[0] += 1


def solve_simplex(problem: LpProblem, tol: float = TOL) -> LpSolution:
    if not tol > 0:
        raise ParameterError("tol must be positive")
    n = problem.n_vars
    n_ub, n_eq = len(problem.b_ub), len(problem.b_eq)
    rows = n_ub + n_eq
    A = np.zeros((rows, n + n_ub))
    A[:n_ub, :n] = problem.A_ub
    A[:n_ub, n:] = np.eye(n_ub)
    A[n_ub:, :n] = problem.A_eq
    b = np.concatenate([problem.b_ub, problem.b_eq])
    flip = b < 0
    A[flip] *= -1
    b = np.where(flip, -b, b)

    # rows whose slack enters the basis directly need no artificial
    slack_ok = np.zeros(rows, dtype=bool)
    slack_ok[:n_ub] = ~flip[:n_ub]
    art_rows = np.flatnonzero(~slack_ok)
    n_art = len(art_rows)
    width = n + n_ub + n_art
    T = np.zeros((rows, width + 1))
    T[:, : n + n_ub] = A
    T[art_rows, n + n_ub + np.arange(n_art)] = 1.0
    T[:, -1] = b
    basis = [n + i if slack_ok[i] else -1 for i in range(rows)]
    for k, r in enumerate(art_rows):
        basis[r] = n + n_ub + k

    max_iter = int(1e4) * width
    counter = [0]
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    if n_art:
        cost1 = np.zeros(width)
        cost1[n + n_ub :] = 1.0
        _run(T, basis, cost1, range(width), tol, max_iter, counter)
        if T[:, -1] @ cost1[basis] > tol * scale:
            return LpSolution(INFEASIBLE, iterations=counter[0])
        # drive zero-valued artificials out of the basis; drop redundant rows
        keep = []
        for r in range(len(basis)):
            if basis[r] < n + n_ub:
                keep.append(r)
                continue
            col = next((j for j in range(n + n_ub) if abs(T[r, j]) > tol), None)
            if col is None:
                continue
            _pivot(T, r, col)
            basis[r] = col
            keep.append(r)
        T = T[keep]
        basis = [basis[r] for r in keep]
        T = np.delete(T, np.s_[n + n_ub : width], axis=1)
        width = n + n_ub

    cost2 = np.zeros(width)
    cost2[:n] = problem.c
    status = _run(T, basis, cost2, range(width), tol, max_iter, counter)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=counter[0])
    z = np.zeros(width)
    z[basis] = T[:, -1]
    x = np.maximum(z[:n], 0.0)
    res = problem.residuals(x)
    if res > tol * scale:
        raise SolverError(f"simplex optimum violates constraints by {res:.3g}")
    return LpSolution(OPTIMAL, x, float(problem.c @ x), res, counter[0])


def _independent_rows(A, b, tol):
    """Drop equality rows that are combinations of earlier ones; ``None`` if
    the system is inconsistent."""
    keep = []
    for i in range(len(b)):
        trial = keep + [i]
        if np.linalg.matrix_rank(A[trial], tol=tol) == len(trial):
            keep = trial
        elif np.linalg.matrix_rank(np.column_stack([A[trial], b[trial]]), tol=tol) > len(keep):
            return None, None
    return A[keep], b[keep]


def solve_oracle(problem: LpProblem, tol: float = TOL) -> LpSolution:
    """Brute-force optimum over all basic solutions.

    Every choice of ``n_vars`` active constraints (equalities always
    included) is solved; feasible points are kept and the best returned.
    Assumes the objective is bounded below on the feasible set, which holds
    for the stability program since ``x >= 0``.
    """
    n = problem.n_vars
    if n > 5:
        raise ParameterError("vertex enumeration is limited to 5 variables")
    A_eq, b_eq = _independent_rows(problem.A_eq, problem.b_eq, tol)
    if A_eq is None:
        return LpSolution(INFEASIBLE)
    n_eq = len(b_eq)
    G = np.vstack([problem.A_ub, -np.eye(n)])
    h = np.concatenate([problem.b_ub, np.zeros(n)])
    need = n - n_eq
    if need < 0:
        raise ParameterError("more equalities than variables")
    subsets = np.array(list(itertools.combinations(range(len(h)), need)), dtype=int)
    if need == 0:
        subsets = np.zeros((1, 0), dtype=int)
    k = len(subsets)
    M = np.empty((k, n, n))
    rhs = np.empty((k, n))
    M[:, :n_eq] = A_eq
    rhs[:, :n_eq] = b_eq
    M[:, n_eq:] = G[subsets]
    rhs[:, n_eq:] = h[subsets]
    good = np.linalg.cond(M) < 1e12
    if not good.any():
        return LpSolution(INFEASIBLE)
    X = np.linalg.solve(M[good], rhs[good][..., None])[..., 0]
    feasible = np.all(X >= -tol, axis=1)
    if len(problem.b_ub):
        feasible &= np.all(X @ problem.A_ub.T <= problem.b_ub + tol, axis=1)
    if n_eq:
        feasible &= np.all(np.abs(X @ problem.A_eq.T - problem.b_eq) <= tol, axis=1)
    if not feasible.any():
        return LpSolution(INFEASIBLE)
    X = X[feasible]
    values = X @ problem.c
    best = int(np.argmin(values))
    x = X[best]
    return LpSolution(OPTIMAL, x, float(values[best]), problem.residuals(x))


def rho_from_solution(sol: LpSolution, m: int) -> np.ndarray:
    """Busy-fraction vector: the LP minimiser if its maximum is below 1,
    otherwise all ones (also used when the program is infeasible)."""
    if sol.status == UNBOUNDED:
        raise InconsistencyError("stability LP cannot be unbounded; check the model build")
    if sol.status == INFEASIBLE or sol.x[m] >= 1.0:
        return np.ones(m)
    return np.array(sol.x[:m])
