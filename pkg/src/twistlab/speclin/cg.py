"""Conjugate gradients for shifted symmetric systems."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, IndefiniteDetected, NotConverged
from .matrix import SparseSymMatrix


def conjugate_gradient(A: SparseSymMatrix, b, shift: float = 0.0, tol: float = 1e-10,
                       maxit: int = None, mass: SparseSymMatrix = None,
                       precond=None, x0=None):
    """Solve ``(A - shift*M) x = b`` with M the identity unless ``mass`` is given.

    Stops when ``||(A - shift*M) x - b|| <= tol * ||b||``. ``precond`` is an
    optional array of inverse diagonal entries (Jacobi).

    Raises
    ------
    IndefiniteDetected
        If a search direction with non-positive curvature appears.
    NotConverged
        If ``maxit`` iterations pass first; ``err.residual`` is the final
        relative residual.
    """
    b = np.asarray(b, dtype=float)
    n = A.n
    if b.shape != (n,):
        raise DimensionMismatch(f"rhs has shape {b.shape}, expected ({n},)")
    maxit = 10 * n if maxit is None else maxit

    if mass is None:
        def apply(v):
            return A.matvec(v) - shift * v
    else:
        def apply(v):
            return A.matvec(v) - shift * mass.matvec(v)

    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros(n)
    r = b - apply(x)
    z = r * precond if precond is not None else r
    p = z.copy()
    rz = r @ z
    for it in range(maxit):
        if np.linalg.norm(r) <= tol * bnorm:
            return x
        q = apply(p)
        curv = p @ q
        if curv <= 0.0:
            raise IndefiniteDetected(
                f"non-positive curvature p'(A - shift M)p = {curv:.3e} at iteration {it}")
        step = rz / curv
        x += step * p
        r -= step * q
        z = r * precond if precond is not None else r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = np.linalg.norm(b - apply(x)) / bnorm
    if res <= tol:
        return x
    raise NotConverged(f"CG did not converge in {maxit} iterations (relative residual {res:.3e})",
                       residual=res)
