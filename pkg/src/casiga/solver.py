"""Solution of the constrained symmetric positive-definite system."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
# normwise backward error above this signals a failed (not merely ill-conditioned) solve
BACKWARD_TOL = 1e-12


class SolverError(RuntimeError):
    """Factorization breakdown or non-convergence; carries the residual history."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


@dataclass
class Solution:
    """Control-variable displacements with solve diagnostics.

    ``residual`` is ||K U - F|| / ||F||. For nearly incompressible materials it
    is bounded below by roughly eps * ||K|| ||U|| / ||F||, which can exceed
    1e-10 on fine meshes; ``backward_error`` (infinity norms,
    ||r|| / (||K|| ||U|| + ||F||)) is the precision-independent measure.
    """

    U: np.ndarray
    residual: float
    method: str
    iterations: int = 0
    residuals: list = field(default_factory=list)
    backward_error: float = 0.0


def spd_factorize(K):
    """Symmetric-mode sparse LU without pivoting; fails unless K is SPD.

    With a symmetric fill-reducing ordering and no row pivoting, LU of a
    symmetric matrix equals L D L^T, so positive U-diagonal entries certify
    positive definiteness.
    """
    K = sp.csc_matrix(K)
    lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                   options={"SymmetricMode": True})
    piv = lu.U.diagonal()
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise SolverError("row pivoting occurred; matrix is not symmetric positive definite")
    if not np.all(piv > 0):
        raise SolverError("nonpositive pivot %g; matrix is not positive definite" % piv.min())
    return lu


def _relres(K, U, F, nF):
    return float(np.linalg.norm(K @ U - F) / nF)


def solve_direct(K, F, refine_steps=3):
    nF = np.linalg.norm(F)
    if nF == 0.0:
        return Solution(np.zeros_like(F), 0.0, "direct")
    lu = spd_factorize(K)
    U = lu.solve(F)
    history = [_relres(K, U, F, nF)]
    # iterative refinement; stops when it no longer helps
    for _ in range(refine_steps):
        if history[-1] <= RESIDUAL_TOL * 1e-3:
            break
        dU = lu.solve(F - K @ U)
        trial = U + dU
        r = _relres(K, trial, F, nF)
        if r >= history[-1]:
            break
        U = trial
        history.append(r)
    return Solution(U, history[-1], "direct", len(history) - 1, history)


def solve_cg(K, F, tol=RESIDUAL_TOL, maxiter=None):
    """Jacobi-preconditioned conjugate gradients."""
    nF = np.linalg.norm(F)
    if nF == 0.0:
        return Solution(np.zeros_like(F), 0.0, "cg")
    n = F.size
    maxiter = 50 * n if maxiter is None else maxiter
    diag = K.diagonal()
    if np.any(diag <= 0):
        raise SolverError("nonpositive diagonal entry; matrix is not SPD")
    M = spla.LinearOperator((n, n), matvec=lambda x: x / diag)
    history = []
    U, info = spla.cg(K, F, rtol=tol, atol=0.0, maxiter=maxiter, M=M,
                      callback=lambda xk: history.append(_relres(K, xk, F, nF)))
    res = _relres(K, U, F, nF)
    if info != 0 or res > tol:
        raise SolverError("CG did not converge (info=%d, relative residual %.3e)" % (info, res),
                          history)
    return Solution(U, res, "cg", len(history), history)


def backward_error(K, U, F):
    r = np.abs(K @ U - F).max()
    scale = spla.norm(K, np.inf) * np.abs(U).max() + np.abs(F).max()
    return float(r / scale) if scale > 0 else 0.0


def solve_spd(system, method="direct"):
    """Solve a :class:`~casiga.assembly.SparseSystem` for all control variables."""
    K, F = system.K_free, system.F_free
    if method == "direct":
        sol = solve_direct(K, F)
    elif method == "cg":
        sol = solve_cg(K, F)
    else:
        raise ValueError("unknown solver method %r" % (method,))
    sol.backward_error = backward_error(K, sol.U, F)
    if sol.residual > RESIDUAL_TOL:
        # accepted only if the gap is the rounding floor of an ill-conditioned system
        if sol.backward_error > BACKWARD_TOL:
            raise SolverError("relative residual %.3e, backward error %.3e: solve failed"
                              % (sol.residual, sol.backward_error), sol.residuals)
        log.info("relative residual %.3e above %.0e (backward error %.1e)",
                 sol.residual, RESIDUAL_TOL, sol.backward_error)
    sol.U = system.expand(sol.U)
    return sol
