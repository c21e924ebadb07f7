"""Smallest eigenpairs of symmetric pencils ``A x = lam M x``.

Three routes share one result type:

* ``lobpcg``: blocked LOBPCG with a Jacobi preconditioner;
* ``shift-invert``: block Krylov on ``(A - sigma M)^{-1} M`` with full
  M-orthogonalisation, Rayleigh-Ritz on ``A`` and an adaptive shift.  The
  inner solves use a banded Cholesky factor (LAPACK ``dpbtrf``); failure of
  that factorisation is also how the shift is kept below the spectrum;
* ``dense``: LAPACK ``eigh`` on the dense pencil, the reference oracle.

``auto`` runs LOBPCG and falls back to shift-invert on stagnation.

Residuals are reported as normwise backward errors
``||A x - lam M x|| / ((||A||_1 + |lam| ||M||_1) ||x||)``, which makes the
tolerance independent of the scaling of the pencil.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..errors import DimensionMismatch, NotConverged, SingularMass
from .cg import conjugate_gradient
from .matrix import SparseSymMatrix

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_BLOCK = 4
DENSE_LIMIT = 2000
DEFAULT_SEED = 20140611
# keep banded factors below ~1.5 GB
BANDED_MEMORY_LIMIT = 1.5e9


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_norms: np.ndarray
    iterations: int
    converged: bool
    seed: int = DEFAULT_SEED
    method: str = ""
    shift: float = None
    history: list = field(default_factory=list, repr=False)

    @property
    def value(self) -> float:
        """Smallest eigenvalue."""
        return float(self.eigenvalues[0])

    @property
    def vector(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


class _Stagnation(Exception):
    def __init__(self, X, theta, iterations):
        super().__init__("LOBPCG stagnated")
        self.X, self.theta, self.iterations = X, theta, iterations


# helpers -------------------------------------------------------------------


class _Pencil:
    """Mat-vecs and norms for ``(A, M)``; ``M=None`` means the identity."""

    def __init__(self, A: SparseSymMatrix, M: SparseSymMatrix = None):
        if M is not None and M.n != A.n:
            raise DimensionMismatch("A and M differ in size")
        self.A, self.M, self.n = A, M, A.n
        self._A = A.to_scipy()
        self._M = None if M is None else M.to_scipy()
        self.normA = max(A.norm1(), np.finfo(float).tiny)
        self.normM = 1.0 if M is None else M.norm1()
        self.mdiag = None
        if M is None:
            self.mdiag = np.ones(self.n)
        elif M.is_diagonal():
            self.mdiag = M.diagonal()
            if np.any(self.mdiag <= 0):
                raise SingularMass("mass matrix has non-positive diagonal entries")

    def a(self, X):
        return self._A @ X

    def m(self, X):
        return X if self._M is None else self._M @ X

    def backward_error(self, X, AX, MX, lam):
        R = AX - MX * lam
        num = np.linalg.norm(R, axis=0)
        den = (self.normA + np.abs(lam) * self.normM) * np.linalg.norm(X, axis=0)
        return num / np.maximum(den, np.finfo(float).tiny)

    def dual_norm(self, R):
        """||r||_{M^-1} per column (exact for diagonal M)."""
        if self.mdiag is not None:
            return np.sqrt(np.sum(R * R / self.mdiag[:, None], axis=0))
        return np.linalg.norm(R, axis=0) / np.sqrt(self.normM)


def _morth(pencil: _Pencil, V, against=None, drop=1e-10):
    """M-orthonormalise the columns of V (optionally against an M-orthonormal basis).

    Uses two passes of Gram-Schmidt against ``against`` followed by SVQB;
    numerically dependent directions are dropped.
    """
    V = np.array(V, dtype=float, copy=True)
    if V.ndim == 1:
        V = V[:, None]
    for _ in range(2):
        if against is not None and against.shape[1]:
            V -= against @ (against.T @ pencil.m(V))
        MV = pencil.m(V)
        norms = np.sqrt(np.maximum(np.einsum("ij,ij->j", V, MV), 0.0))
        keep = norms > 0
        V = V[:, keep] / norms[keep]
        if V.shape[1] == 0:
            return V
        G = V.T @ pencil.m(V)
        G = 0.5 * (G + G.T)
        w, U = np.linalg.eigh(G)
        good = w > drop * max(w.max(), 1.0)
        V = V @ (U[:, good] / np.sqrt(w[good]))
    return V


def _rayleigh_ritz(pencil: _Pencil, Q, AQ=None):
    AQ = pencil.a(Q) if AQ is None else AQ
    H = Q.T @ AQ
    H = 0.5 * (H + H.T)
    theta, C = np.linalg.eigh(H)
    return theta, C, AQ


def _initial_block(n, bs, seed, x0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, bs))
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.ndim == 1:
            x0 = x0[:, None]
        c = min(x0.shape[1], bs)
        X[:, :c] = x0[:, :c] + 1e-3 * np.linalg.norm(x0[:, :c], axis=0) / np.sqrt(n) * X[:, :c]
    return X


def _finish(pencil, X, theta, k, method, iterations, seed, tol, shift=None, history=None):
    X = X[:, :k]
    theta = np.asarray(theta[:k], dtype=float)
    AX, MX = pencil.a(X), pencil.m(X)
    res = pencil.backward_error(X, AX, MX, theta)
    return EigenResult(
        eigenvalues=theta,
        eigenvectors=X,
        residual_norms=res,
        iterations=iterations,
        converged=bool(np.all(res[:k] <= tol)),
        seed=seed,
        method=method,
        shift=shift,
        history=history or [],
    )


# dense oracle ---------------------------------------------------------------


def dense_eigenpairs(A: SparseSymMatrix, M: SparseSymMatrix = None, k: int = 1,
                     limit: int = DENSE_LIMIT, seed: int = DEFAULT_SEED,
                     tol: float = DEFAULT_TOL) -> EigenResult:
    """Reference solution via LAPACK ``eigh`` (allowed for ``n <= limit``)."""
    if A.n > limit:
        raise ValueError(f"dense oracle limited to n <= {limit}, got {A.n}")
    k = min(k, A.n)
    Ad = A.to_dense()
    Md = None if M is None else M.to_dense()
    try:
        w, V = sla.eigh(Ad, Md, subset_by_index=[0, k - 1])
    except np.linalg.LinAlgError as exc:
        raise SingularMass(f"dense pencil solve failed: {exc}") from exc
    pencil = _Pencil(A, M) if (M is None or M.is_diagonal()) else _DensePencilShim(A, M)
    return _finish(pencil, V, w, k, "dense", 1, seed, tol)


class _DensePencilShim(_Pencil):
    """Pencil with a non-diagonal mass; only used to report residuals."""

    def __init__(self, A, M):
        self.A, self.M, self.n = A, M, A.n
        self._A, self._M = A.to_scipy(), M.to_scipy()
        self.normA = max(A.norm1(), np.finfo(float).tiny)
        self.normM = M.norm1()
        self.mdiag = None


# LOBPCG -------------------------------------------------------------------------


def lobpcg(A: SparseSymMatrix, M: SparseSymMatrix = None, k: int = 1, tol: float = DEFAULT_TOL,
           block_size: int = DEFAULT_BLOCK, maxiter: int = 500, seed: int = DEFAULT_SEED,
           x0=None, stall_window: int = 60, raise_on_stall: bool = False) -> EigenResult:
    """Blocked LOBPCG (Knyazev) with Jacobi preconditioning.

    If the largest residual among the wanted pairs fails to halve within
    ``stall_window`` iterations the run is declared stagnant; with
    ``raise_on_stall`` the current block is handed back through an internal
    exception so that :func:`smallest_eigenpairs` can switch methods.
    """
    pencil = _pencil_for(A, M)
    n = A.n
    bs = min(max(block_size, k), n)
    if 3 * bs > n:
        return dense_eigenpairs(A, M, k, limit=max(n, DENSE_LIMIT), seed=seed, tol=tol)

    diagA = A.diagonal()
    scale = np.abs(diagA)
    precond = np.where(scale > 0, 1.0 / np.where(scale > 0, scale, 1.0), 1.0)

    X = _morth(pencil, _initial_block(n, bs, seed, x0))
    theta, C, AX = _rayleigh_ritz(pencil, X)
    X, AX = X @ C, AX @ C
    P = None
    best, best_it = np.inf, 0
    history = []
    for it in range(1, maxiter + 1):
        MX = pencil.m(X)
        R = AX - MX * theta
        res = pencil.backward_error(X, AX, MX, theta)
        worst = float(np.max(res[:k]))
        history.append(worst)
        if worst <= tol:
            return _finish(pencil, X, theta, k, "lobpcg", it, seed, tol, history=history)
        if worst < 0.5 * best:
            best, best_it = worst, it
        elif it - best_it > stall_window:
            if raise_on_stall:
                raise _Stagnation(X, theta, it)
            break
        W = R * precond[:, None]
        blocks = [X, W] if P is None else [X, W, P]
        Q = _morth(pencil, np.hstack(blocks))
        theta_all, C, AQ = _rayleigh_ritz(pencil, Q)
        Xn = Q @ C[:, :bs]
        AXn = AQ @ C[:, :bs]
        P = Xn - X @ (X.T @ pencil.m(Xn))
        X, AX, theta = Xn, AXn, theta_all[:bs]
    result = _finish(pencil, X, theta, k, "lobpcg", it, seed, tol, history=history)
    if raise_on_stall and not result.converged:
        raise _Stagnation(X, theta, it)
    return result


# shift-invert ---------------------------------------------------------------------


class _InnerSolver:
    """Solves ``(A - sigma M) y = b``; constructing it checks positive definiteness."""

    def __init__(self, pencil: _Pencil, sigma: float, kind: str, tol: float):
        self.sigma, self.kind = sigma, kind
        if kind == "banded":
            ab = pencil.A.to_banded_upper(sigma, pencil.M if pencil.M is not None
                                          else SparseSymMatrix.identity(pencil.n))
            self.factor = sla.cholesky_banded(ab, lower=False, check_finite=False)
        elif kind == "cg":
            self.pencil, self.tol = pencil, tol
            self.precond = 1.0 / np.maximum(np.abs(pencil.A.diagonal()), np.finfo(float).tiny)
        else:
            raise ValueError(f"unknown inner solver {kind!r}")

    def solve(self, B):
        if self.kind == "banded":
            return sla.cho_solve_banded((self.factor, False), B, check_finite=False)
        out = np.empty_like(B)
        for j in range(B.shape[1]):
            out[:, j] = conjugate_gradient(self.pencil.A, B[:, j], shift=self.sigma,
                                           tol=self.tol, mass=self.pencil.M,
                                           precond=self.precond)
        return out


def _default_inner(A: SparseSymMatrix) -> str:
    kd = A.bandwidth()
    return "banded" if (kd + 1) * A.n * 8 <= BANDED_MEMORY_LIMIT else "cg"


def _factor_below_spectrum(pencil, sigma, inner, tol, step):
    """Lower ``sigma`` until ``A - sigma M`` is positive definite."""
    from ..errors import IndefiniteDetected

    for _ in range(80):
        try:
            solver = _InnerSolver(pencil, sigma, inner, tol)
            if inner == "cg":
                # probe definiteness with a single solve
                probe = np.random.default_rng(0).standard_normal((pencil.n, 1))
                solver.solve(probe)
            return solver
        except (np.linalg.LinAlgError, IndefiniteDetected):
            sigma -= step
            step *= 2.0
    raise NotConverged("could not find a shift below the spectrum")


def _gershgorin_lower(pencil: _Pencil) -> float:
    A = pencil.A.to_scipy().tocoo()
    d = pencil.mdiag if pencil.mdiag is not None else np.ones(pencil.n)
    scaled = np.abs(A.data) / np.sqrt(d[A.row] * d[A.col])
    off = A.row != A.col
    radius = np.bincount(A.row[off], weights=scaled[off], minlength=pencil.n)
    centre = pencil.A.diagonal() / d
    return float(np.min(centre - radius))


def shift_invert(A: SparseSymMatrix, M: SparseSymMatrix = None, k: int = 1,
                 tol: float = DEFAULT_TOL, shift: float = None, block_size: int = DEFAULT_BLOCK,
                 seed: int = DEFAULT_SEED, x0=None, maxdim: int = None, max_cycles: int = 12,
                 inner: str = None) -> EigenResult:
    """Block shift-invert Krylov iteration for the ``k`` smallest eigenpairs.

    ``shift`` is a guess for a point below the spectrum; it is lowered
    automatically until ``A - shift*M`` is positive definite.  After each
    restart cycle the shift is moved up towards the lowest Ritz value
    (never past a point where the factorisation fails).
    """
    pencil = _pencil_for(A, M)
    n = A.n
    bs = min(max(block_size, k), n)
    if 3 * bs > n:
        return dense_eigenpairs(A, M, k, limit=max(n, DENSE_LIMIT), seed=seed, tol=tol)
    inner = inner or _default_inner(A)
    maxdim = maxdim or min(n, max(12 * bs, 3 * k + 30))
    if shift is None:
        est = lobpcg(A, M, k, tol=0.0, block_size=bs, maxiter=15, seed=seed, x0=x0)
        x0 = est.eigenvectors
        lam0 = est.value
        shift = lam0 - 0.05 * max(1.0, abs(lam0))
    scale = max(pencil.normA / max(pencil.normM, np.finfo(float).tiny), 1.0)
    solver = _factor_below_spectrum(pencil, shift, inner, 1e-3 * tol, 1e-3 * scale)
    sigma = solver.sigma

    X = _initial_block(n, bs, seed, x0)
    total_steps = 0
    history = []
    theta = None
    for cycle in range(max_cycles):
        B = _morth(pencil, X)
        AB = pencil.a(B)
        last = B
        while True:
            H = B.T @ AB
            H = 0.5 * (H + H.T)
            theta, C = np.linalg.eigh(H)
            nw = min(k, len(theta))
            Xk = B @ C[:, :nw]
            AXk = AB @ C[:, :nw]
            MXk = pencil.m(Xk)
            res = pencil.backward_error(Xk, AXk, MXk, theta[:nw])
            history.append((sigma, float(np.max(res))))
            if nw == k and np.all(res <= tol):
                return _finish(pencil, Xk, theta, k, "shift-invert", total_steps, seed, tol,
                               shift=sigma, history=history)
            if B.shape[1] + bs > maxdim or B.shape[1] >= n:
                break
            W = solver.solve(pencil.m(last))
            W = _morth(pencil, W, against=B)
            total_steps += 1
            if W.shape[1] == 0:
                break
            B = np.hstack([B, W])
            AB = np.hstack([AB, pencil.a(W)])
            last = W
        keep = min(B.shape[1], max(bs, k + 2))
        X = B @ C[:, :keep]
        # move the shift closer to the bottom of the spectrum
        rho = pencil.dual_norm(AB @ C[:, :1] - pencil.m(X[:, :1]) * theta[0])[0]
        gap = theta[min(k, len(theta) - 1)] - theta[0] if len(theta) > 1 else abs(theta[0])
        target = theta[0] - max(2.0 * rho, 0.1 * gap, 1e-12 * max(1.0, abs(theta[0])))
        if target > sigma and (theta[0] - sigma) > 2.0 * (theta[0] - target):
            try:
                solver = _InnerSolver(pencil, target, inner, 1e-3 * tol)
                sigma = target
            except np.linalg.LinAlgError:
                pass
        log.debug("shift-invert cycle %d: sigma=%.12g theta0=%.12g res=%.2e",
                  cycle, sigma, theta[0], history[-1][1])
    result = _finish(pencil, X, theta, k, "shift-invert", total_steps, seed, tol,
                     shift=sigma, history=history)
    return result


# public entry point -----------------------------------------------------------------


def _pencil_for(A, M):
    if M is not None and not M.is_diagonal():
        pencil = _DensePencilShim(A, M)
        try:
            sla.cholesky_banded(M.to_banded_upper(), lower=False, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularMass("mass matrix is not positive definite") from exc
        return pencil
    return _Pencil(A, M)


def smallest_eigenpairs(A: SparseSymMatrix, M: SparseSymMatrix = None, k: int = 1,
                        tol: float = DEFAULT_TOL, method: str = "auto",
                        block_size: int = DEFAULT_BLOCK, seed: int = DEFAULT_SEED,
                        maxiter: int = 500, shift: float = None, x0=None,
                        inner: str = None, dense: bool = False,
                        require_convergence: bool = True) -> EigenResult:
    """The ``k`` smallest eigenpairs of the symmetric pencil ``(A, M)``.

    Parameters
    ----------
    method : {"auto", "lobpcg", "shift-invert", "dense"}
        ``auto`` runs LOBPCG and falls back to shift-invert when it
        stagnates.  Tiny problems (``n < 3 * block_size``) always go dense.
    dense : bool
        Force the dense oracle (only for ``n <= 2000``).
    shift : float, optional
        Hint for the shift-invert route: a value at or below the smallest
        eigenvalue.
    require_convergence : bool
        Raise :class:`NotConverged` (carrying the partial result) instead of
        returning an unconverged result.
    """
    if dense:
        method = "dense"
    if k < 1:
        raise ValueError("k must be positive")
    if method == "dense":
        result = dense_eigenpairs(A, M, k, seed=seed, tol=tol)
    elif method == "lobpcg":
        result = lobpcg(A, M, k, tol, block_size, maxiter, seed, x0)
    elif method == "shift-invert":
        result = shift_invert(A, M, k, tol, shift, block_size, seed, x0, inner=inner)
    elif method == "auto":
        try:
            result = lobpcg(A, M, k, tol, block_size, maxiter, seed, x0, raise_on_stall=True)
        except _Stagnation as st:
            log.info("LOBPCG stagnated after %d iterations; switching to shift-invert", st.iterations)
            guess = float(st.theta[0])
            hint = guess - 0.05 * max(1.0, abs(guess)) if shift is None else min(shift, guess)
            result = shift_invert(A, M, k, tol, hint, block_size, seed, st.X, inner=inner)
            result.iterations += st.iterations
    else:
        raise ValueError(f"unknown method {method!r}")
    if require_convergence and not result.converged:
        raise NotConverged(
            f"{result.method} did not reach tol={tol:.1e} (max residual "
            f"{float(np.max(result.residual_norms)):.2e})",
            residual=float(np.max(result.residual_norms)), result=result)
    return result
