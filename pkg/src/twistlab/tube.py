"""The straightened twisted tube ``(-L, L) x omega``.

The quadratic form ``||d1 psi - theta_dot d_tau psi||^2 + ||grad' psi||^2`` is
discretised with vertex nodes along x1 and the cross-section grid across.
Longitudinal derivatives live on edges (forward differences, Dirichlet ghosts
at ``x1 = -L, L``); the angular derivative is averaged from the two edge
endpoints and ``theta_dot`` is sampled at edge midpoints.  Writing the form as
a sum of squares keeps the assembled matrix symmetric and positive
semidefinite by construction, and for ``theta_dot = 0`` it reduces exactly to
the Kronecker sum of the 1D and 2D stiffness matrices.

With ``interface=True`` the node ``x1 = 0`` is split in two and no edge joins
the halves, which is the broken (Neumann-cut) form.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar

from .crosssec import CrossSectionGrid, TransverseGroundState, solve_transverse
from .errors import BranchCutInsideDomain, DimensionMismatch, NotConverged
from .profiles import TwistProfile
from .speclin import EigenResult, SparseSymMatrix, smallest_eigenpairs

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TubeDiscretization:
    L: float
    h1: float
    cross: CrossSectionGrid
    interface: bool = False

    def __post_init__(self):
        if not (self.L > 0 and self.h1 > 0):
            raise ValueError("L and h1 must be positive")
        ratio = 2 * self.L / self.h1
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 2:
            raise ValueError(f"2L/h1 must be an integer >= 2, got {ratio}")
        if self.interface and round(ratio) % 2:
            raise ValueError("the interface at x1 = 0 needs L/h1 integral")

    @property
    def n_intervals(self) -> int:
        return int(round(2 * self.L / self.h1))

    def longitudinal(self):
        """Nodes ``(x, w)`` and edges ``(left, right, midpoint)``; -1 marks a ghost."""
        N, h1, L = self.n_intervals, self.h1, self.L
        if not self.interface:
            x = -L + h1 * np.arange(1, N)
            w = np.full(N - 1, h1)
            left = np.arange(-1, N - 1)
            right = np.arange(0, N)
            right[-1] = -1
            mid = -L + h1 * (np.arange(N) + 0.5)
            return x, w, left, right, mid
        half = N // 2
        xl = -L + h1 * np.arange(1, half + 1)
        xr = h1 * np.arange(0, half)
        x = np.concatenate([xl, xr])
        w = np.full(x.size, h1)
        w[half - 1] = w[half] = h1 / 2
        ll = np.arange(-1, half - 1)
        rl = np.arange(0, half)
        lr = half + np.arange(0, half)
        rr = half + np.arange(1, half + 1)
        rr[-1] = -1
        left = np.concatenate([ll, lr])
        right = np.concatenate([rl, rr])
        mid = np.concatenate([-L + h1 * (np.arange(half) + 0.5), h1 * (np.arange(half) + 0.5)])
        return x, w, left, right, mid

    def to_dict(self) -> dict:
        return {"L": self.L, "h1": self.h1, "cross": self.cross.cs.to_dict(),
                "cross_h": self.cross.h, "interface": self.interface}


@dataclass(frozen=True, eq=False)
class AssembledTube:
    disc: TubeDiscretization
    profile: TwistProfile
    A: SparseSymMatrix
    M: SparseSymMatrix
    W: SparseSymMatrix
    lambda1_h: float
    ground: TransverseGroundState
    x1: np.ndarray
    w1: np.ndarray
    G1: sp.csr_matrix
    avg: sp.csr_matrix
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def m(self) -> int:
        return self.disc.cross.m

    def reshape(self, psi) -> np.ndarray:
        """View a 3D vector as (longitudinal node, cross node)."""
        return np.asarray(psi).reshape(self.x1.size, self.m)

    def product(self, phi, u) -> np.ndarray:
        """The separable vector ``phi(x1) u(x')``."""
        return np.outer(np.asarray(phi, dtype=float), np.asarray(u, dtype=float)).ravel()


def _edge_ops(disc: TubeDiscretization):
    x, w, left, right, mid = disc.longitudinal()
    n1, E, h1 = x.size, mid.size, disc.h1
    rows, cols, g, av = [], [], [], []
    for end, sgn in ((left, -1.0), (right, 1.0)):
        ok = end >= 0
        rows.append(np.nonzero(ok)[0])
        cols.append(end[ok])
        g.append(np.full(ok.sum(), sgn / h1))
        av.append(np.full(ok.sum(), 0.5))
    r, c = np.concatenate(rows), np.concatenate(cols)
    G1 = sp.coo_matrix((np.concatenate(g), (r, c)), shape=(E, n1)).tocsr()
    avg = sp.coo_matrix((np.concatenate(av), (r, c)), shape=(E, n1)).tocsr()
    return x, w, mid, G1, avg


def assemble(disc: TubeDiscretization, profile: TwistProfile, tol: float = 1e-10,
             ground: TransverseGroundState = None) -> AssembledTube:
    """Stiffness ``A``, mass ``M`` and Hardy-weight mass ``W`` of the tube form.

    ``lambda1_h`` is the transverse threshold on the same cross grid and beta.
    """
    grid = disc.cross
    x, w, mid, G1, avg = _edge_ops(disc)
    h1 = disc.h1
    theta = np.asarray(profile.theta_dot(mid), dtype=float)
    Wp = sp.diags(grid.weights)
    K = grid.stiffness_csr()
    S = (Wp @ grid.d_tau).tocsr()
    T = grid.tau_form_csr()
    He = sp.diags(np.full(mid.size, h1))
    long_stiff = (G1.T @ He @ G1).tocsr()
    mixed = (G1.T @ He @ sp.diags(theta) @ avg).tocsr()
    tt = (avg.T @ He @ sp.diags(theta * theta) @ avg).tocsr()
    A = sp.kron(long_stiff, Wp) + sp.kron(sp.diags(w), K)
    if np.any(theta != 0.0):
        X = sp.kron(mixed, S)
        A = A - X - X.T + sp.kron(tt, T)
    A = SparseSymMatrix.from_scipy(A.tocsr(), symmetrize=True)
    M = SparseSymMatrix.diagonal_matrix(np.kron(w, grid.weights))
    W = SparseSymMatrix.diagonal_matrix(np.kron(w / (1.0 + x * x), grid.weights))
    if ground is None or ground.beta ** 2 != profile.beta ** 2:
        ground = solve_transverse(grid, profile.beta, tol=tol)
    return AssembledTube(disc, profile, A, M, W, ground.lambda1, ground, x, w, G1, avg)


def lowest_mode(t: AssembledTube, k: int = 1, tol: float = 1e-9, shift: float = None,
                x0=None, seed: int = None, method: str = "shift-invert",
                require_convergence: bool = True) -> EigenResult:
    """Lowest ``k`` eigenpairs of the tube; the default shift hint sits below lambda1_h."""
    if shift is None:
        shift = t.lambda1_h - 0.5
    if x0 is None:
        x0 = t.product(np.cos(np.pi * t.x1 / (2 * t.disc.L)), t.ground.chi)
    kw = {} if seed is None else {"seed": seed}
    return smallest_eigenpairs(t.A, t.M, k=k, tol=tol, method=method, shift=shift, x0=x0,
                               require_convergence=require_convergence, **kw)


def evaluate_Q(t: AssembledTube, psi) -> float:
    """``Q[psi] = h[psi] - lambda1_h ||psi||^2``."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (t.n,):
        raise DimensionMismatch(f"psi has shape {psi.shape}, tube has {t.n} unknowns")
    return t.A.quadratic_form(psi) - t.lambda1_h * t.M.quadratic_form(psi)


def Q_bilinear(t: AssembledTube, psi, phi) -> float:
    return float(np.dot(psi, t.A @ phi) - t.lambda1_h * np.dot(psi, t.M @ phi))


# sweeps ---------------------------------------------------------------------------


@dataclass
class SweepRow:
    alpha: float
    e0: float
    gap: float
    converged: bool
    iterations: int
    message: str = ""


@dataclass
class SweepTable:
    beta: float
    kind: str
    lambda1_h: float
    rows: list
    settings: dict = field(default_factory=dict)

    @property
    def crossings(self) -> list:
        """Interpolated alphas where the gap changes sign, in increasing alpha."""
        rows = sorted((r for r in self.rows if np.isfinite(r.gap)), key=lambda r: r.alpha)
        out = []
        for r0, r1 in zip(rows, rows[1:]):
            if r0.gap == 0.0:
                continue
            if r0.gap * r1.gap < 0:
                t = r0.gap / (r0.gap - r1.gap)
                out.append((r0.alpha + t * (r1.alpha - r0.alpha), "down" if r0.gap > 0 else "up"))
        return out

    @property
    def alpha_star(self) -> float:
        """First crossing from above to below the threshold (nan if none)."""
        for a, direction in self.crossings:
            if direction == "down":
                return a
        return math.nan

    def to_csv(self, path, header_comment: str = None) -> None:
        with open(path, "w", encoding="ascii") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("alpha,e0,gap,converged,iterations\n")
            for r in self.rows:
                fh.write(f"{r.alpha!r},{r.e0!r},{r.gap!r},{int(r.converged)},{r.iterations}\n")


def _solve_row(disc, profile, alpha, tol, ground, shift, x0):
    t = assemble(disc, profile.with_alpha(alpha), ground=ground)
    try:
        res = lowest_mode(t, 1, tol, shift=shift, x0=x0)
        return SweepRow(alpha, res.value, res.value - t.lambda1_h, True, res.iterations), res
    except NotConverged as exc:
        part = exc.result
        e0 = part.value if part is not None else math.nan
        it = part.iterations if part is not None else 0
        return SweepRow(alpha, e0, e0 - t.lambda1_h, False, it, str(exc)), part


def sweep_alpha(disc: TubeDiscretization, beta: float, kind: str, alphas, tol: float = 1e-9,
                threads: int = 1, support: float = 1.0, warm_start: bool = True) -> SweepTable:
    """Lowest tube eigenvalue for each coupling in ``alphas`` (rows in input order).

    Single-threaded runs visit the alphas in increasing order and warm-start
    each solve from the previous eigenvector and eigenvalue.
    """
    alphas = [float(a) for a in alphas]
    profile = TwistProfile(beta, 0.0, kind, support)
    ground = solve_transverse(disc.cross, beta)
    rows = [None] * len(alphas)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_solve_row, disc, profile, a, tol, ground, None, None)
                       for a in alphas]
            for i, f in enumerate(futures):
                rows[i] = f.result()[0]
    else:
        order = np.argsort(alphas, kind="stable")
        prev = None
        for i in order:
            shift = x0 = None
            if warm_start and prev is not None and prev.converged:
                x0 = prev.vector
                shift = min(prev.value, ground.lambda1) - 0.25
            row, res = _solve_row(disc, profile, alphas[i], tol, ground, shift, x0)
            rows[i] = row
            prev = res
            log.info("alpha=%g e0=%.10g gap=%.3e", row.alpha, row.e0, row.gap)
    settings = {"tol": tol, "threads": threads, "support": support, **disc.to_dict()}
    return SweepTable(beta, kind, ground.lambda1, rows, settings)


# Hardy constants ------------------------------------------------------------------------


@dataclass
class HardyEstimate:
    c_num: float
    raw: float
    shift: float
    converged: bool
    residual: float
    vector: np.ndarray = field(default=None, repr=False)


def estimate_hardy_constant(t: AssembledTube, tol: float = 1e-9, shift: float = 1e-6,
                            x0=None) -> HardyEstimate:
    """Smallest eigenvalue of the pencil ``(A - lambda1_h M, W)``.

    The pencil is solved with ``A - (lambda1_h - shift) M`` (positive definite
    when ``H >= lambda1``); ``raw`` is that eigenvalue and ``c_num`` the
    Rayleigh quotient of its eigenvector without the shift.
    """
    B = t.A.combine(t.M, 1.0, -(t.lambda1_h - shift))
    if x0 is None:
        x0 = t.product(1.0 / (1.0 + t.x1 ** 2), t.ground.chi)
    res = smallest_eigenpairs(B, t.W, 1, tol, method="shift-invert", shift=-0.05, x0=x0,
                              require_convergence=False)
    v = res.vector
    c = evaluate_Q(t, v) / t.W.quadratic_form(v)
    return HardyEstimate(c, res.value, shift, res.converged, float(res.residual_norms[0]), v)


def hardy_classical_check(t: AssembledTube, I, x1_0: float, psi):
    """Both sides of ``||rho psi||^2 <= 16 ||d1 psi||^2 + (2 + 64/|I|^2) ||psi||^2_{I x omega}``
    with ``rho(x) = (1 + (x1 - x1_0)^2)^(-1/2)``."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (t.n,):
        raise DimensionMismatch(f"psi has shape {psi.shape}, tube has {t.n} unknowns")
    a, b = I
    P = t.reshape(psi)
    wp = t.disc.cross.weights
    node_mass = (P * P) @ wp
    lhs = float(np.sum(t.w1 * node_mass / (1.0 + (t.x1 - x1_0) ** 2)))
    D = t.G1 @ P
    d1 = float(t.disc.h1 * np.sum((D * D) @ wp))
    inside = (t.x1 >= a) & (t.x1 <= b)
    local = float(np.sum(t.w1[inside] * node_mass[inside]))
    rhs = 16.0 * d1 + (2.0 + 64.0 / (b - a) ** 2) * local
    return lhs, rhs


# broken (Neumann-cut) form -------------------------------------------------------------


def smooth_step(s):
    """C-infinity transition equal to 0 for s <= 0 and 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    f = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    g = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return f / (f + g)


def plateau(x, n: float = 1.0):
    """Smooth cut-off: 1 on ``|x| <= n``, 0 on ``|x| >= 2n``."""
    return smooth_step(2.0 - np.abs(np.asarray(x, dtype=float)) / n)


def check_branch_cut(grid: CrossSectionGrid) -> None:
    """Raise if the half-line ``{x3 = 0, x2 <= 0}`` meets the cross-section."""
    cs = grid.cs
    reach = grid.a + 1.0
    ray = np.linspace(-reach, 0.0, 200001)
    hit = cs.contains(ray, np.zeros_like(ray))
    if np.any(hit) or np.any((grid.x2 <= 0) & (np.abs(grid.x3) < 0.5 * grid.h)):
        raise BranchCutInsideDomain(
            f"the angle -arctan(x3/x2) is not single-valued on {cs.label()}; "
            "offset the section so that it avoids {x3 = 0, x2 <= 0}")


@dataclass
class NeumannCheck:
    e0_N: float
    lambda1_h: float
    Q_test: float
    mixed: float
    mixed_target: float
    delta: float
    Q_plateau: float
    Q_corrector: float
    converged: bool

    @property
    def drop(self) -> float:
        return self.lambda1_h - self.e0_N

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["drop"] = self.drop
        return d


def neumann_test_function(t: AssembledTube, n: float = 8.0, decay: float = 4.0):
    """Pieces of ``psi = phi_n chi + delta rho tau chi`` on a cut tube.

    ``rho = -beta sinh(decay (x1 + 1)) / sinh(decay)`` on ``[-1, 0]`` of the left
    half only, so ``rho(0-) = -beta`` and ``rho(-1) = 0``; ``tau`` is the angle
    ``-arctan(x3/x2)``.  Concentrating ``rho`` near the cut keeps ``Q[rho tau chi]``
    small enough that the mixed term wins already at ``n = 8``.
    """
    grid = t.disc.cross
    check_branch_cut(grid)
    beta = t.profile.beta
    chi = t.ground.chi
    tau = -np.arctan(grid.x3 / grid.x2)
    half = t.x1.size // 2
    left = np.arange(t.x1.size) < half
    xl = t.x1
    s = np.clip(xl, -1.0, 0.0) + 1.0
    rho = np.where(left & (xl >= -1.0), -beta * np.sinh(decay * s) / np.sinh(decay), 0.0)
    base = t.product(plateau(t.x1, n), chi)
    corr = t.product(rho, tau * chi)
    return base, corr


def neumann_interface_check(disc: TubeDiscretization, beta: float = 1.0, n: float = 8.0,
                            delta: float = None, tol: float = 1e-9) -> NeumannCheck:
    """Spectrum of the cut tube against lambda1_h, plus the explicit test function.

    ``delta=None`` minimises ``Q[psi]`` over ``(0, 1]``.
    """
    if not disc.interface:
        disc = TubeDiscretization(disc.L, disc.h1, disc.cross, interface=True)
    t = assemble(disc, TwistProfile(beta, 0.0, "zero"))
    res = lowest_mode(t, 1, tol, require_convergence=False)
    if beta != 0.0:
        base, corr = neumann_test_function(t, n)
        qb, qc = evaluate_Q(t, base), evaluate_Q(t, corr)
        mixed = Q_bilinear(t, base, corr)

        def q(d):
            return qb + 2 * d * mixed + d * d * qc

        if delta is None:
            opt = minimize_scalar(q, bounds=(1e-12, 1.0), method="bounded",
                                  options={"xatol": 1e-12})
            delta = float(opt.x)
        q_test = q(delta)
    else:
        qb = qc = mixed = q_test = 0.0
        delta = 0.0 if delta is None else delta
    return NeumannCheck(res.value, t.lambda1_h, q_test, mixed, -beta * beta / 2, delta,
                        qb, qc, res.converged)
