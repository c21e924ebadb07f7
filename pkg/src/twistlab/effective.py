"""The thin-width effective model ``H_alpha = -d^2/dx1^2 + C_omega (alpha^2 eps^2 + 2 alpha beta eps)``
and its Neumann bracketing.

All problems here are one-dimensional and solved with LAPACK's symmetric
tridiagonal eigensolver (P1 elements, lumped mass).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.linalg import eigh_tridiagonal

from .crosssec import CrossSection, build_grid, solve_transverse
from .errors import BadInterval, PlanInvalid
from .profiles import TwistProfile
from .speclin import EigenResult

_SUBSAMPLES = 16


@dataclass(frozen=True)
class Effective1D:
    C_omega: float
    beta: float
    kind: str = "indicator"
    support: float = 1.0
    samples: tuple = None
    L1: float = 40.0
    spacing: float = 1.0 / 32
    bc: str = "dirichlet"

    def __post_init__(self):
        if self.C_omega < 0:
            raise ValueError("C_omega must be nonnegative")
        if self.bc not in ("dirichlet", "neumann"):
            raise ValueError("bc must be 'dirichlet' or 'neumann'")
        lo, hi = self.profile(0.0).support_interval
        if not (-self.L1 < lo and hi < self.L1):
            raise ValueError("the support of eps must lie inside (-L1, L1)")

    def profile(self, alpha: float) -> TwistProfile:
        return TwistProfile(self.beta, alpha, self.kind, self.support, self.samples)

    def potential(self, alpha: float, x1):
        """``C_omega * ((alpha eps + beta)^2 - beta^2)``."""
        e = np.asarray(self.profile(alpha).eps(x1))
        return self.C_omega * (alpha * alpha * e * e + 2.0 * alpha * self.beta * e)

    def with_beta(self, beta: float) -> "Effective1D":
        return Effective1D(self.C_omega, beta, self.kind, self.support, self.samples,
                           self.L1, self.spacing, self.bc)


def discrete_condition(beta: float, alpha: float, kind="indicator", support: float = 1.0,
                       samples=None) -> float:
    """``int (theta_dot^2 - beta^2) = alpha^2 int eps^2 + 2 alpha beta int eps``.

    ``kind`` may also be a :class:`TwistProfile`.  A negative value means a
    discrete eigenvalue below the threshold exists.

    >>> discrete_condition(1.0, -1.0, "indicator")
    -2.0
    """
    prof = kind if isinstance(kind, TwistProfile) else TwistProfile(beta, alpha, kind, support, samples)
    m1, m2 = prof.moments()
    return alpha * alpha * m2 + 2.0 * alpha * beta * m1


def discrete_condition_quadrature(profile: TwistProfile) -> float:
    """The same integral by adaptive quadrature, split at the profile breakpoints."""
    if profile.kind == "zero":
        return 0.0
    lo, hi = profile.support_interval
    pts = np.unique(np.concatenate([[lo, hi], profile.breakpoints]))
    pts = pts[(pts >= lo) & (pts <= hi)]
    b = profile.beta
    total = 0.0
    with warnings.catch_warnings():
        # the integrand is polynomial on each piece; roundoff notices are spurious
        warnings.simplefilter("ignore", IntegrationWarning)
        for a0, a1 in zip(pts[:-1], pts[1:]):
            val, _ = quad(lambda x: profile.theta_dot(x) ** 2 - b * b, a0, a1,
                          epsabs=1e-14, epsrel=1e-14)
            total += val
    return total


# 1D finite elements ---------------------------------------------------------------


def _p1_lowest(nodes, elem_potential, left_dirichlet=False, right_dirichlet=False,
               node_potential=None, k=1):
    """Lowest eigenpairs of ``-u'' + V`` with P1 elements and lumped mass.

    ``elem_potential`` is V on each element (lumped to its two ends);
    Dirichlet ends remove the corresponding node.
    """
    x = np.asarray(nodes, dtype=float)
    he = np.diff(x)
    if np.any(he <= 0):
        raise BadInterval("nodes must be strictly increasing")
    n = x.size
    mass = np.zeros(n)
    diag = np.zeros(n)
    np.add.at(mass, np.arange(n - 1), he / 2)
    np.add.at(mass, np.arange(1, n), he / 2)
    np.add.at(diag, np.arange(n - 1), 1 / he)
    np.add.at(diag, np.arange(1, n), 1 / he)
    vlump = np.asarray(elem_potential, dtype=float) * he / 2
    np.add.at(diag, np.arange(n - 1), vlump)
    np.add.at(diag, np.arange(1, n), vlump)
    if node_potential is not None:
        diag = diag + mass * node_potential
    off = -1 / he
    lo = 1 if left_dirichlet else 0
    hi = n - 1 if right_dirichlet else n
    d, e, w = diag[lo:hi], off[lo:hi - 1], mass[lo:hi]
    s = 1 / np.sqrt(w)
    k = min(k, d.size)
    if d.size == 1:
        return np.array([d[0] * s[0] ** 2]), np.array([[s[0]]])
    vals, vecs = eigh_tridiagonal(d * s * s, e * s[:-1] * s[1:], select="i",
                                  select_range=(0, k - 1))
    return vals, vecs * s[:, None]


def _cell_average(f, x, hx):
    """Mean of ``f`` over ``[x - hx/2, x + hx/2]`` by a composite midpoint rule."""
    offs = (np.arange(_SUBSAMPLES) + 0.5) / _SUBSAMPLES - 0.5
    return np.mean(f(x[:, None] + hx * offs[None, :]), axis=1)


def solve_effective(e: Effective1D, alpha: float, k: int = 1) -> EigenResult:
    """Ground energy of ``H_alpha`` on ``(-L1, L1)``.

    The potential is averaged over each element, so jumps of the indicator
    profile are integrated exactly up to the sub-sampling.
    """
    n = int(round(2 * e.L1 / e.spacing))
    x = np.linspace(-e.L1, e.L1, n + 1)
    mids = 0.5 * (x[1:] + x[:-1])
    V = _cell_average(lambda t: e.potential(alpha, t), mids, e.spacing)
    dir_ = e.bc == "dirichlet"
    vals, vecs = _p1_lowest(x, V, dir_, dir_, k=k)
    return EigenResult(eigenvalues=vals, eigenvectors=vecs,
                       residual_norms=np.zeros(vals.size), iterations=1, converged=True,
                       method="tridiagonal")


def free_dirichlet_energy(L1: float) -> float:
    return (math.pi / (2 * L1)) ** 2


# Neumann boxes -------------------------------------------------------------------


def _box_nodes(cuts, spacing):
    """Vertex grid through all cut points with spacing at most ``spacing``."""
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        k = max(1, int(math.ceil((b - a) / spacing - 1e-12)))
        pieces.append(np.linspace(a, b, k + 1)[:-1])
    return np.concatenate(pieces + [[cuts[-1]]])


def neumann_box_eigen(a: float, a_in: float, b_in: float, b: float, alpha: float,
                      spacing: float = 1e-3) -> float:
    """Lowest eigenvalue of ``-d^2/dx^2 + alpha * 1_(a_in, b_in)`` on ``(a, b)``, Neumann ends.

    The grid passes through ``a_in`` and ``b_in`` so the barrier edges fall on
    nodes (each gets half the barrier weight).
    """
    if not (a < a_in < b_in < b):
        raise BadInterval(f"need a < a' < b' < b, got {(a, a_in, b_in, b)}")
    if alpha < 0:
        raise ValueError("barrier height must be nonnegative")
    x = _box_nodes([a, a_in, b_in, b], spacing)
    mids = 0.5 * (x[1:] + x[:-1])
    V = np.where((mids > a_in) & (mids < b_in), alpha, 0.0)
    vals, _ = _p1_lowest(x, V)
    return max(float(vals[0]), 0.0) if alpha == 0 else float(vals[0])


def neumann_box_limit(a: float, a_in: float, b_in: float, b: float) -> float:
    """Infinite-barrier limit: the smaller of the two Neumann-Dirichlet box energies."""
    if not (a < a_in < b_in < b):
        raise BadInterval(f"need a < a' < b' < b, got {(a, a_in, b_in, b)}")
    return min((math.pi / (2 * (a_in - a))) ** 2, (math.pi / (2 * (b - b_in))) ** 2)


# bracketing -----------------------------------------------------------------------


@dataclass
class BracketingPlan:
    intervals: list
    inner: list
    c: list
    alpha_n: list
    beta_eff: float
    C_omega: float
    kappa: float = 0.0
    eta: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def bound_energy(self, alpha: float, spacing: float = 1e-3) -> float:
        """min over n of the lowest eigenvalue of the per-interval lower bound operator
        ``-Delta_N + c_n C alpha^2 1_{I'} - C beta^2 1_{I \\ I'}``."""
        out = math.inf
        for (a, b), (ai, bi), cn in zip(self.intervals, self.inner, self.c):
            cuts = sorted({a, ai, bi, b})
            x = _box_nodes(cuts, spacing)
            mids = 0.5 * (x[1:] + x[:-1])
            inside = (mids > ai) & (mids < bi)
            V = np.where(inside, cn * self.C_omega * alpha * alpha,
                         -self.C_omega * self.beta_eff ** 2)
            vals, _ = _p1_lowest(x, V)
            out = min(out, float(vals[0]))
        return out


def _support_pieces(profile: TwistProfile):
    if profile.kind in ("indicator", "tent"):
        s = profile.support
        return [(-s, s)]
    if profile.kind == "zero":
        return []
    x, e = (np.asarray(v) for v in profile.samples)
    nz = e != 0
    pieces, start = [], None
    for i in range(x.size):
        if nz[i] and start is None:
            start = x[max(i - 1, 0)]
        if not nz[i] and start is not None:
            pieces.append((start, x[i]))
            start = None
    if start is not None:
        pieces.append((start, x[-1]))
    return pieces


def make_plan(e: Effective1D, sign: int = 1, kappa: float = 0.5, eta: float = 0.1,
              verify_spacing: float = 1e-3) -> BracketingPlan:
    """Bracketing plan for couplings ``sign * alpha`` with ``alpha >= 0``.

    Each support piece ``I`` gets ``I' = I`` where eps is bounded away from
    zero on all of ``I`` and ``I'`` shrunk by ``eta * |I|`` at ends where eps
    vanishes.  With ``b = sign * beta`` and ``e_min = min |eps|`` on ``I'``:

    * ``b eps >= 0`` on ``I'``: ``c = e_min^2``, ``alpha_n = 0``;
    * otherwise: ``c = kappa e_min^2``, ``alpha_n = 2|b| / ((1 - kappa) e_min)``.
    """
    if not 0 < kappa < 1:
        raise PlanInvalid("kappa must lie in (0, 1)")
    prof = e.profile(1.0)
    b_eff = sign * e.beta
    intervals, inner, cs, alphas = [], [], [], []
    for a, b in _support_pieces(prof):
        left = eta if abs(prof.eps(a + 1e-12)) < 1e-9 else 0.0
        right = eta if abs(prof.eps(b - 1e-12)) < 1e-9 else 0.0
        ai, bi = a + left * (b - a), b - right * (b - a)
        if not ai < bi:
            raise PlanInvalid("inner interval is empty; decrease eta")
        sample = np.linspace(ai, bi, 20001)
        vals = np.asarray(prof.eps(sample))
        e_min = float(np.min(np.abs(vals)))
        if e_min <= 0:
            raise PlanInvalid(f"eps vanishes inside I' = ({ai}, {bi})")
        same_sign = np.all(b_eff * vals >= 0)
        if same_sign:
            cn, an = e_min ** 2, 0.0
        else:
            cn, an = kappa * e_min ** 2, 2 * abs(b_eff) / ((1 - kappa) * e_min)
        intervals.append((float(a), float(b)))
        inner.append((float(ai), float(bi)))
        cs.append(float(cn))
        alphas.append(float(an))
    plan = BracketingPlan(intervals, inner, cs, alphas, b_eff, e.C_omega, kappa, eta)
    verify_plan(e, plan, sign, verify_spacing)
    return plan


def verify_plan(e: Effective1D, plan: BracketingPlan, sign: int = 1, spacing: float = 1e-3) -> None:
    """Check ``V >= c_n C alpha^2`` on each ``I_n'`` for several ``alpha >= alpha_n``."""
    for (a, b), (ai, bi), cn, an in zip(plan.intervals, plan.inner, plan.c, plan.alpha_n):
        if not (a <= ai < bi <= b):
            raise PlanInvalid(f"inner interval ({ai}, {bi}) not inside ({a}, {b})")
        n = max(11, int(10 * (bi - ai) / spacing))
        xs = np.linspace(ai, bi, n)
        if ai > a or bi < b:
            xs = xs[(xs > ai) & (xs < bi)]
            xs = np.concatenate([[ai + 1e-12, bi - 1e-12], xs])
        for alpha in (max(an, 1e-3), 2 * max(an, 1e-3), 10 * max(an, 1e-3)):
            V = e.potential(sign * alpha, xs)
            need = cn * e.C_omega * alpha * alpha
            if np.any(V < need * (1 - 1e-12) - 1e-14):
                raise PlanInvalid(f"V_alpha >= c_n alpha^2 fails on ({ai}, {bi}) at alpha={alpha}")
    for (a0, b0), (a1, b1) in zip(plan.intervals, plan.intervals[1:]):
        if a1 < b0:
            raise PlanInvalid("bracketing intervals overlap")


@dataclass
class Alpha0Result:
    alpha0: float
    plan: BracketingPlan
    sign: int
    e_at_alpha0: float = math.nan
    e_at_2alpha0: float = math.nan
    validated: bool = True
    scans: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["plan"] = asdict(self.plan)
        return d


def _bisect_bound(plan: BracketingPlan, tol: float, spacing: float) -> float:
    lo = max(plan.alpha_n) if plan.alpha_n else 0.0
    if plan.bound_energy(lo, spacing) >= 0:
        return lo
    hi = max(2 * lo, 1.0)
    for _ in range(200):
        if plan.bound_energy(hi, spacing) >= 0:
            break
        lo, hi = hi, 2 * hi
    else:
        raise PlanInvalid("bound operator never becomes nonnegative; shrink the outer pieces")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if plan.bound_energy(mid, spacing) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def alpha0_search(e: Effective1D, plan: BracketingPlan = None, tol: float = 1e-6, sign: int = 1,
                  kappas=(0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8),
                  eta: float = 0.1, spacing: float = 2e-3, check_tol: float = 1e-8) -> Alpha0Result:
    """Smallest coupling beyond which the bracketing bound certifies ``H >= 0``.

    Couplings are ``sign * alpha`` with ``alpha >= 0``.  Without an explicit
    plan, ``kappa`` is scanned and the best resulting threshold kept.  The
    answer is cross-checked with :func:`solve_effective` at ``alpha0`` and
    ``2 alpha0``.
    """
    if e.beta == 0.0 or e.C_omega == 0.0:
        p = plan or BracketingPlan([], [], [], [], 0.0, e.C_omega)
        return Alpha0Result(0.0, p, sign, 0.0, 0.0, True)
    candidates = []
    if plan is not None:
        candidates.append((_bisect_bound(plan, tol, spacing), plan))
    else:
        for kappa in kappas:
            p = make_plan(e, sign, kappa, eta)
            candidates.append((_bisect_bound(p, tol, spacing), p))
    alpha0, best = min(candidates, key=lambda c: c[0])
    e0 = solve_effective(e, sign * alpha0).value
    e2 = solve_effective(e, sign * 2 * alpha0).value
    ok = e0 >= -check_tol and e2 >= -check_tol
    return Alpha0Result(alpha0, best, sign, e0, e2, ok,
                        [(p.kappa, a) for a, p in candidates])


# thin-width comparison ---------------------------------------------------------------


@dataclass
class ThinWidthRow:
    delta: float
    gap_3d: float
    gap_effective: float
    lambda1: float
    E1_scaled: float
    remainder: float

    @property
    def discrepancy(self) -> float:
        return abs(self.gap_3d - self.gap_effective)


def thin_width_compare(cs: CrossSection, delta_list, profile: TwistProfile, alpha: float = None,
                       L: float = 20.0, h1: float = 0.25, cross_h: float = 1.0 / 8,
                       L1: float = None, tol: float = 1e-9) -> list:
    """Tube gap ``e0 - lambda1(delta)`` against the effective ground energy.

    The cross grid is scaled with ``delta`` (spacing ``delta * cross_h``) so the
    discrete ``E1`` scales exactly as ``delta^-2``.  ``remainder`` is
    ``lambda1(delta) - delta^-2 E1 - C_omega beta^2``, expected ``O(delta^2)``.
    """
    from .tube import TubeDiscretization, assemble, lowest_mode

    if alpha is not None:
        profile = profile.with_alpha(alpha)
    beta = profile.beta
    base = solve_transverse(build_grid(cs, cross_h), beta)
    C = base.C_omega
    eff = Effective1D(C, beta, profile.kind, profile.support, profile.samples,
                      L1=L if L1 is None else L1, spacing=h1)
    eff_gap = solve_effective(eff, profile.alpha).value
    rows = []
    for delta in delta_list:
        grid = build_grid(cs.scaled(delta), cross_h * delta)
        t = assemble(TubeDiscretization(L, h1, grid), profile, tol=1e-11)
        res = lowest_mode(t, 1, tol)
        lam = t.lambda1_h
        E1s = t.ground.E1
        rows.append(ThinWidthRow(delta, res.value - lam, eff_gap, lam, E1s,
                                 lam - E1s - C * beta * beta))
    return rows
