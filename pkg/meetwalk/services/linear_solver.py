"""
Linear solves for the meeting-time systems.

Small systems are materialized and solved directly; larger ones go through
restarted GMRES with a matrix-free operator.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres

from meetwalk.config import (
    SolverError,
    get_dense_limit,
    get_solver_maxiter,
    get_solver_rtol,
)

logger = logging.getLogger('meetwalk.solver')

GMRES_RESTART = 50


@dataclass(frozen=True)
class LinearSolution:
    x: np.ndarray
    method: str
    residual: float
    iterations: int = 0


def solve_dense(matrix, rhs: np.ndarray) -> LinearSolution:
    a = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if a.shape[0] == 0:
        return LinearSolution(np.zeros(0), 'dense', 0.0)
    try:
        x = scipy.linalg.solve(a, b)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SolverError(f"meeting-time system is singular: {e}") from e
    residual = float(np.max(np.abs(b - a @ x)))
    return LinearSolution(x, 'dense', residual)


def solve_operator(matvec: Callable[[np.ndarray], np.ndarray], dim: int, rhs: np.ndarray,
                   rtol: Optional[float] = None, maxiter: Optional[int] = None) -> LinearSolution:
    """Restarted GMRES on a matrix-free operator."""
    rtol = rtol or get_solver_rtol()
    maxiter = maxiter or get_solver_maxiter()
    restart = max(1, min(GMRES_RESTART, dim))
    operator = LinearOperator((dim, dim), matvec=matvec, dtype=np.float64)
    b = np.asarray(rhs, dtype=float)

    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    x, info = gmres(
        operator, b,
        rtol=rtol, atol=0.0,
        restart=restart, maxiter=max(1, maxiter // restart),
        callback=count, callback_type='pr_norm',
    )
    residual = float(np.max(np.abs(b - matvec(x))))
    if info != 0:
        raise SolverError(
            f"GMRES did not converge in {iterations} iterations (info={info}, residual {residual:.3e})"
        )
    return LinearSolution(x, 'gmres', residual, iterations)


def solve_system(dim: int, rhs: np.ndarray, build_matrix: Callable[[], sp.spmatrix],
                 matvec: Callable[[np.ndarray], np.ndarray],
                 dense_limit: Optional[int] = None) -> LinearSolution:
    """
    Solve ``A x = rhs`` where ``A`` is available both ways.

    Args:
        dim: number of unknowns
        rhs: right-hand side
        build_matrix: returns ``A`` as a sparse matrix (used up to the dense limit)
        matvec: applies ``A`` without materializing it
        dense_limit: override of MEETWALK_DENSE_LIMIT
    """
    limit = dense_limit or get_dense_limit()
    if dim <= limit:
        solution = solve_dense(build_matrix(), rhs)
    else:
        solution = solve_operator(matvec, dim, rhs)
    logger.debug(
        f"Solved {dim}-unknown system with {solution.method} "
        f"(iterations={solution.iterations}, residual={solution.residual:.3e})"
    )
    return solution
