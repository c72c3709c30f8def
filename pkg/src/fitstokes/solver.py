"""Sparse solve of the symmetric indefinite saddle-point system.

The full system is K = [[A, B^T, 0], [B, 0, c^T], [0, c, 0]] with c the
cell-area row enforcing the zero pressure mean through one multiplier.
The direct path factors K with SuperLU and applies iterative refinement
until the requested relative residual is met; the iterative path runs
MINRES with a block-diagonal (A-diagonal / pressure-mass) preconditioner.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import SaddleSystem
from .errors import NoConvergence, SingularSystem


@dataclass(frozen=True)
class SolveReport:
    method: str
    iterations: int
    residual: float
    wall_time: float


def _full_system(system: SaddleSystem):
    A, B, c = system.A, system.B, system.areas
    K = sp.bmat([[A, B.T, None],
                 [B, None, c[:, None]],
                 [None, c[None, :], None]], format="csc")
    rhs = np.concatenate([system.rhs_u, system.rhs_p, [0.0]])
    return K, rhs


def solve(system: SaddleSystem, tol: float = 1e-10, method: str = "direct"):
    """Solve for (velocity DOFs, pressure DOFs).

    Returns (u, p, report) where u is the full edge-mean vector including
    the prescribed boundary values and p has exactly zero weighted mean.
    """
    t0 = time.perf_counter()
    nf = system.A.shape[0]
    C = system.B.shape[0]
    K, rhs = _full_system(system)
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        report = SolveReport(method=method, iterations=0, residual=0.0,
                             wall_time=time.perf_counter() - t0)
        return system.expand_velocity(np.zeros(nf)), np.zeros(C), report

    if method == "direct":
        try:
            lu = spla.splu(K)
        except RuntimeError as exc:
            raise SingularSystem(f"sparse factorization failed: {exc}") from exc
        z = lu.solve(rhs)
        residual = float(np.linalg.norm(rhs - K @ z)) / rhs_norm
        iters = 0
        while residual > tol and iters < 5:
            z += lu.solve(rhs - K @ z)
            residual = float(np.linalg.norm(rhs - K @ z)) / rhs_norm
            iters += 1
        if not np.isfinite(residual) or residual > tol:
            raise SingularSystem(
                f"direct solve stalled at relative residual {residual:.3e} (tol {tol:.1e})"
            )
    elif method == "iterative":
        z, residual, iters = _minres_solve(system, K, rhs, rhs_norm, tol)
    else:
        raise ValueError(f"unknown solver method {method!r}")

    u = system.expand_velocity(z[:nf])
    p = z[nf:nf + C]
    total = system.areas.sum()
    p = p - (system.areas @ p) / total
    report = SolveReport(method=method, iterations=iters,
                         residual=residual, wall_time=time.perf_counter() - t0)
    return u, p, report


def _minres_solve(system: SaddleSystem, K, rhs, rhs_norm, tol):
    diag_a = np.maximum(system.A.diagonal(), 1e-300)
    scale = np.concatenate([1.0 / diag_a, 1.0 / system.areas, [1.0]])
    M = spla.LinearOperator(K.shape, matvec=lambda x: scale * x)
    history = []

    def callback(xk):
        history.append(float(np.linalg.norm(rhs - K @ xk)) / rhs_norm)

    z, info = spla.minres(K, rhs, rtol=min(tol, 1e-12), maxiter=50 * K.shape[0] // 10,
                          M=M, callback=callback)
    residual = float(np.linalg.norm(rhs - K @ z)) / rhs_norm
    if residual > tol:
        raise NoConvergence(
            f"MINRES stopped at relative residual {residual:.3e} (tol {tol:.1e}, info={info})",
            residual_history=history)
    return z, residual, len(history)
