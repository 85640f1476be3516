"""Contraction and Newton solvers with iteration reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class PreconditionError(ValueError):
    pass


@dataclass
class SolveReport:
    solution: object = field(repr=False)
    iterations: int
    final_residual: float
    ratios: list
    status: str
    residuals: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _sup(x) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


@dataclass
class ContractionProblem:
    """Solve F1 x + F2(x) = target with F1 linear and invertible, ||F1^-1|| <= c."""
    apply_f1_inverse: Callable
    apply_f2: Callable
    delta: float
    c: float
    max_iters: int = 100
    norm: Callable = _sup
    tol: float = 1e-12
    lipschitz: float | None = None

    def __post_init__(self):
        if not (self.delta > 0 and self.c > 0):
            raise ValueError("delta and c must be positive")


def contraction_solve(problem: ContractionProblem, target, x0=None) -> SolveReport:
    """Iterate x <- F1^-1 (target - F2(x)) from x0 (default 0).

    Entry requires ||F2(0) - target|| <= delta / (4 c); leaving the ball of
    radius delta stops with status ``left_ball``.
    """
    p = problem
    target = np.asarray(target)
    zero = np.zeros_like(target, dtype=np.result_type(target, float))
    x = zero.copy() if x0 is None else np.array(x0, dtype=zero.dtype).reshape(zero.shape)
    if p.norm(x) > p.delta:
        raise PreconditionError("start point lies outside the ball")
    start = p.norm(p.apply_f2(zero) - target)
    if start > p.delta / (4 * p.c):
        raise PreconditionError(
            f"||F2(0) - target|| = {start:.3g} exceeds delta/(4c) = {p.delta / (4 * p.c):.3g}")
    ratios, steps = [], []
    status = "max_iters"
    for k in range(1, p.max_iters + 1):
        x_new = p.apply_f1_inverse(target - p.apply_f2(x))
        step = p.norm(x_new - x)
        if steps and steps[-1] > 0:
            ratios.append(step / steps[-1])
        steps.append(step)
        x = x_new
        if p.norm(x) > p.delta:
            status = "left_ball"
            break
        if step < p.tol:
            status = "converged"
            break
    if p.lipschitz is not None and ratios:
        bound = 2 * p.c * p.lipschitz
        if max(ratios) > bound + 1e-12:
            raise AssertionError(f"contraction ratio {max(ratios):.3g} above 2 c Lip = {bound:.3g}")
    residual = p.norm(p.apply_f1_inverse(target - p.apply_f2(x)) - x)
    return SolveReport(x, k, residual, ratios, status, steps)


def newton_solve(residual: Callable, linearization_solve: Callable, x0, tol: float,
                 max_iters: int = 50, norm: Callable | None = None,
                 max_backtracks: int = 10, stagnation_window: int = 5) -> SolveReport:
    """Newton's method with residual-norm backtracking.

    ``linearization_solve(x, r)`` returns J(x)^{-1} r. ``ratios`` records
    successive residual reductions ||r_{k+1}|| / ||r_k||. Stops with status
    ``stagnated`` when the residual drops by less than a factor 1e-3 over
    ``stagnation_window`` iterations.
    """
    norm = norm or (lambda v: float(np.linalg.norm(np.ravel(v))))
    x = np.array(x0, dtype=float, copy=True)
    r = residual(x)
    rn = norm(r)
    history, ratios = [rn], []
    status = "max_iters"
    k = 0
    if rn < tol:
        return SolveReport(x, 0, rn, ratios, "converged", history)
    for k in range(1, max_iters + 1):
        dx = linearization_solve(x, r)
        step = 1.0
        for _ in range(max_backtracks + 1):
            x_try = x - step * dx
            r_try = residual(x_try)
            rn_try = norm(r_try)
            if np.isfinite(rn_try) and rn_try < rn:
                break
            step /= 2
        x, r = x_try, r_try
        ratios.append(rn_try / rn if rn > 0 else 0.0)
        rn = rn_try
        history.append(rn)
        if rn < tol:
            status = "converged"
            break
        if not np.isfinite(rn):
            status = "diverged"
            break
        if len(history) > stagnation_window and \
                history[-1] > 1e-3 * history[-1 - stagnation_window]:
            status = "stagnated"
            break
    return SolveReport(x, k, rn, ratios, status, history)


def sparse_direct_solver(matrix) -> Callable:
    """Factor once with SuperLU; returns rhs -> solution."""
    lu = spla.splu(sp.csc_matrix(matrix))
    return lu.solve


def krylov_solve(matvec: Callable, rhs: np.ndarray, preconditioner: Callable | None = None,
                 tol: float = 1e-12, maxiter: int = 500) -> np.ndarray:
    """GMRES for the (nonsymmetric) linearizations, with an optional
    preconditioner such as a spectral Poisson solve."""
    n = rhs.size
    op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
    m = None if preconditioner is None else spla.LinearOperator((n, n), matvec=preconditioner,
                                                               dtype=float)
    sol, info = spla.gmres(op, rhs, M=m, rtol=tol, atol=0.0, restart=60, maxiter=maxiter)
    if info != 0:
        raise RuntimeError(f"gmres did not converge (info={info})")
    return sol
