"""Cross-section discretisation and the transverse eigenproblem.

Two grid families share :class:`CrossSectionGrid`:

* Cartesian masked grids (rectangles, off-centre discs and annuli), with
  Dirichlet ghost nodes wherever a 5-point neighbour falls outside the shape;
* polar finite-volume grids for discs and annuli centred at the rotation
  origin.  A staircase mask would break rotational symmetry at the discrete
  level, giving spurious C_omega of order 1e-3 and first-order energies.

Every grid stores the same data: node coordinates measured from the rotation
origin, quadrature weights, an edge list for the Dirichlet form and a
discrete angular derivative ``d_tau`` (``x3 d/dx2 - x2 d/dx3``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.linalg import eigh_tridiagonal

from .errors import DisconnectedGrid, EmptyGrid, NonPositiveGroundState, ZeroDistance
from .speclin import SparseSymMatrix, smallest_eigenpairs

SHAPES = ("rectangle", "disc", "annulus")
_GEOM_TOL = 1e-12


@dataclass(frozen=True)
class CrossSection:
    """A rectangle, disc or annulus whose centre sits at ``offset``."""

    shape: str = "rectangle"
    width: float = 1.0
    height: float = 1.0
    radius: float = 0.5
    r_inner: float = 0.25
    r_outer: float = 0.5
    offset: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.shape == "rectangle" and not (self.width > 0 and self.height > 0):
            raise ValueError("rectangle sides must be positive")
        if self.shape == "disc" and not self.radius > 0:
            raise ValueError("disc radius must be positive")
        if self.shape == "annulus" and not 0 < self.r_inner < self.r_outer:
            raise ValueError("annulus needs 0 < r_inner < r_outer")
        object.__setattr__(self, "offset", tuple(float(v) for v in self.offset))

    @classmethod
    def rectangle(cls, width=1.0, height=1.0, offset=(0.0, 0.0)):
        return cls("rectangle", width=width, height=height, offset=offset)

    @classmethod
    def square(cls, side=1.0, offset=(0.0, 0.0)):
        return cls("rectangle", width=side, height=side, offset=offset)

    @classmethod
    def disc(cls, radius=0.5, offset=(0.0, 0.0)):
        return cls("disc", radius=radius, offset=offset)

    @classmethod
    def annulus(cls, r_inner, r_outer, offset=(0.0, 0.0)):
        return cls("annulus", r_inner=r_inner, r_outer=r_outer, offset=offset)

    @property
    def centred(self) -> bool:
        return self.offset == (0.0, 0.0)

    @property
    def rotationally_symmetric(self) -> bool:
        return self.shape in ("disc", "annulus") and self.centred

    def sup_radius(self) -> float:
        """sup |x'| over the closure of the shape (x' from the rotation origin)."""
        ox, oy = self.offset
        if self.shape == "rectangle":
            return max(math.hypot(ox + sx * self.width / 2, oy + sy * self.height / 2)
                       for sx in (-1, 1) for sy in (-1, 1))
        outer = self.radius if self.shape == "disc" else self.r_outer
        return math.hypot(ox, oy) + outer

    def local_distance(self, y2, y3):
        """Distance to the boundary for points given relative to the centre."""
        y2, y3 = np.asarray(y2, dtype=float), np.asarray(y3, dtype=float)
        if self.shape == "rectangle":
            return np.minimum(self.width / 2 - np.abs(y2), self.height / 2 - np.abs(y3))
        r = np.hypot(y2, y3)
        if self.shape == "disc":
            return self.radius - r
        return np.minimum(r - self.r_inner, self.r_outer - r)

    def contains(self, x2, x3):
        ox, oy = self.offset
        return self.local_distance(np.asarray(x2) - ox, np.asarray(x3) - oy) > _GEOM_TOL

    def scaled(self, delta: float) -> "CrossSection":
        """The shape ``delta * omega`` (offset scaled as well)."""
        return CrossSection(self.shape, self.width * delta, self.height * delta,
                            self.radius * delta, self.r_inner * delta, self.r_outer * delta,
                            (self.offset[0] * delta, self.offset[1] * delta))

    def label(self) -> str:
        if self.shape == "rectangle":
            core = f"rectangle({self.width:g}x{self.height:g})"
        elif self.shape == "disc":
            core = f"disc(r={self.radius:g})"
        else:
            core = f"annulus({self.r_inner:g},{self.r_outer:g})"
        return core if self.centred else f"{core}@({self.offset[0]:g},{self.offset[1]:g})"

    def to_dict(self) -> dict:
        d = {"shape": self.shape, "offset": list(self.offset)}
        if self.shape == "rectangle":
            d.update(width=self.width, height=self.height)
        elif self.shape == "disc":
            d.update(radius=self.radius)
        else:
            d.update(r_inner=self.r_inner, r_outer=self.r_outer)
        return d


@dataclass(frozen=True, eq=False)
class CrossSectionGrid:
    """Discretised cross-section.

    The Dirichlet form is ``sum c_e (psi_p - psi_q)^2 + sum c_b psi_p^2`` over
    interior edges ``(p, q, c_e)`` and ghost edges ``(p, c_b)``; the L2 inner
    product is ``sum w_p psi_p phi_p``.
    """

    cs: CrossSection
    h: float
    kind: str
    x2: np.ndarray
    x3: np.ndarray
    weights: np.ndarray
    edges: tuple
    ghost: tuple
    d_tau: sp.csr_matrix
    dist: np.ndarray
    a: float
    ij: np.ndarray = None
    d_tau_bnd: sp.csr_matrix = None
    bnd_weights: np.ndarray = None
    bnd_owner: np.ndarray = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def m(self) -> int:
        return self.x2.size

    @property
    def radius(self) -> np.ndarray:
        return np.hypot(self.x2, self.x3)

    def mass(self) -> SparseSymMatrix:
        return SparseSymMatrix.diagonal_matrix(self.weights)

    def stiffness_csr(self) -> sp.csr_matrix:
        """Matrix of the Dirichlet form (graph Laplacian plus ghost terms)."""
        if "K" not in self._cache:
            p, q, c = self.edges
            gp, gc = self.ghost
            m = self.m
            off = sp.coo_matrix((np.concatenate([-c, -c]),
                                 (np.concatenate([p, q]), np.concatenate([q, p]))), shape=(m, m))
            diag = (np.bincount(p, weights=c, minlength=m) + np.bincount(q, weights=c, minlength=m)
                    + np.bincount(gp, weights=gc, minlength=m))
            self._cache["K"] = (off + sp.diags(diag)).tocsr()
        return self._cache["K"]

    def tau_rows(self):
        """Angular derivative sampled at nodes and boundary points, with weights."""
        if self.d_tau_bnd is None:
            return self.d_tau, self.weights
        return sp.vstack([self.d_tau, self.d_tau_bnd]).tocsr(), np.concatenate(
            [self.weights, self.bnd_weights])

    def tau_form_csr(self) -> sp.csr_matrix:
        """Matrix of ``||d_tau psi||^2``, i.e. ``D^T W D`` (boundary rows included)."""
        if "T" not in self._cache:
            D, w = self.tau_rows()
            T = (D.T @ sp.diags(w) @ D).tocsr()
            self._cache["T"] = ((T + T.T) * 0.5).tocsr()
        return self._cache["T"]

    def tau_norm2(self, psi) -> float:
        D, w = self.tau_rows()
        return float(np.dot(w, (D @ psi) ** 2))

    def tau_sup(self, psi) -> float:
        D, _ = self.tau_rows()
        return float(np.max(np.abs(D @ psi)))

    def transverse_operator(self, beta: float) -> SparseSymMatrix:
        K = self.stiffness_csr()
        if beta == 0.0:
            return SparseSymMatrix.from_scipy(K)
        return SparseSymMatrix.from_scipy(K + beta * beta * self.tau_form_csr())

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f))

    def norm2(self, f) -> float:
        return float(np.dot(self.weights, np.asarray(f) ** 2))


# grid construction --------------------------------------------------------------


def build_grid(cs: CrossSection, h: float) -> CrossSectionGrid:
    """Discretise ``cs`` with spacing ``h``.

    Centred discs and annuli get a polar grid; everything else a Cartesian
    masked grid whose lattice is anchored at the shape centre (rectangles:
    at a corner, so sides are aligned with grid lines when ``h`` divides them).

    >>> g = build_grid(CrossSection.square(), 0.25)
    >>> sorted(set(g.x2.tolist()))
    [-0.25, 0.0, 0.25]
    """
    if not h > 0:
        raise ValueError("spacing must be positive")
    if cs.rotationally_symmetric:
        return _polar_grid(cs, h)
    return _cartesian_grid(cs, h)


def _cartesian_grid(cs: CrossSection, h: float) -> CrossSectionGrid:
    ox, oy = cs.offset
    if cs.shape == "rectangle":
        n2 = int(math.floor(cs.width / h + _GEOM_TOL))
        n3 = int(math.floor(cs.height / h + _GEOM_TOL))
        y2 = -cs.width / 2 + h * np.arange(0, n2 + 2)
        y3 = -cs.height / 2 + h * np.arange(0, n3 + 2)
    else:
        R = cs.radius if cs.shape == "disc" else cs.r_outer
        k = int(math.ceil(R / h)) + 1
        y2 = y3 = h * np.arange(-k, k + 1)
    Y2, Y3 = np.meshgrid(y2, y3, indexing="ij")
    mask = cs.local_distance(Y2, Y3) > _GEOM_TOL * max(1.0, h)
    if not mask.any():
        raise EmptyGrid(f"no grid nodes inside {cs.label()} at h={h:g}")
    labels, ncomp = ndimage.label(mask)
    if ncomp > 1:
        raise DisconnectedGrid(f"{cs.label()} at h={h:g} splits into {ncomp} components")

    index = -np.ones(mask.shape, dtype=np.int64)
    ij = np.argwhere(mask)
    index[mask] = np.arange(ij.shape[0])
    m = ij.shape[0]
    x2 = Y2[mask] + ox
    x3 = Y3[mask] + oy

    def neighbour(di, dj):
        ii, jj = ij[:, 0] + di, ij[:, 1] + dj
        inside = (ii >= 0) & (ii < mask.shape[0]) & (jj >= 0) & (jj < mask.shape[1])
        nb = -np.ones(m, dtype=np.int64)
        nb[inside] = index[ii[inside], jj[inside]]
        return nb

    east, north = neighbour(1, 0), neighbour(0, 1)
    west, south = neighbour(-1, 0), neighbour(0, -1)
    nodes = np.arange(m)
    p = np.concatenate([nodes[east >= 0], nodes[north >= 0]])
    q = np.concatenate([east[east >= 0], north[north >= 0]])
    ghost_counts = sum((nb < 0).astype(float) for nb in (east, north, west, south))
    gp = nodes[ghost_counts > 0]
    gc = ghost_counts[gp]

    # centred differences, ghosts contribute zero
    def centred(plus, minus):
        rows, cols, vals = [], [], []
        for nb, sign in ((plus, 1.0), (minus, -1.0)):
            ok = nb >= 0
            rows.append(nodes[ok])
            cols.append(nb[ok])
            vals.append(np.full(ok.sum(), sign / (2 * h)))
        return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(m, m)).tocsr()

    D2, D3 = centred(east, west), centred(north, south)
    d_tau = (sp.diags(x3) @ D2 - sp.diags(x2) @ D3).tocsr()
    dist = cs.local_distance(Y2[mask], Y3[mask])
    a = max(cs.sup_radius(), float(np.max(np.hypot(x2, x3))))
    bnd, bw, owner = (None, None, None)
    if cs.shape == "rectangle":
        bnd, bw, owner = _rectangle_boundary_rows(x2, x3, h, east, west, north, south)
    return CrossSectionGrid(cs, h, "cartesian", x2, x3, np.full(m, h * h),
                            (p, q, np.ones(p.size)), (gp, gc), d_tau, dist, a, ij=ij,
                            d_tau_bnd=bnd, bnd_weights=bw, bnd_owner=owner)


def _rectangle_boundary_rows(x2, x3, h, east, west, north, south):
    """d_tau at the boundary points reached by ghost edges.

    The solution vanishes on the boundary, so only the normal derivative
    survives; it is taken one-sided at second order.  Each boundary point
    carries the trapezoidal weight h^2/2.
    """
    m = x2.size
    nodes = np.arange(m)
    rows, cols, vals, owner = [], [], [], []
    count = 0
    # (ghost side, opposite neighbour, shift in x2, shift in x3, outward sign, axis)
    for ghost, back, s2, s3, sign, axis in ((east, west, h, 0, 1, 2), (west, east, -h, 0, -1, 2),
                                           (north, south, 0, h, 1, 3), (south, north, 0, -h, -1, 3)):
        sel = nodes[ghost < 0]
        k = sel.size
        if not k:
            continue
        # coefficient of d/dx_axis in d_tau = x3 d2 - x2 d3 at the boundary point
        coef = (x3[sel] + s3) if axis == 2 else -(x2[sel] + s2)
        nb = back[sel]
        two = nb >= 0
        r = count + np.arange(k)
        # derivative along the outward direction: (-4 psi_p + psi_back) / (2h), or -psi_p / h
        cp = np.where(two, -4.0 / (2 * h), -1.0 / h) * sign * coef
        rows.append(r), cols.append(sel), vals.append(cp)
        rows.append(r[two]), cols.append(nb[two]), vals.append((1.0 / (2 * h)) * sign * coef[two])
        owner.append(sel)
        count += k
    D = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(count, m)).tocsr()
    return D, np.full(count, h * h / 2), np.concatenate(owner)


def _polar_grid(cs: CrossSection, h: float) -> CrossSectionGrid:
    if cs.shape == "disc":
        r0, R = 0.0, cs.radius
        nr = max(1, int(round(R / h)))
        dr = R / nr
        radii = dr * np.arange(1, nr)
    else:
        r0, R = cs.r_inner, cs.r_outer
        nr = max(2, int(round((R - r0) / h)))
        dr = (R - r0) / nr
        radii = r0 + dr * np.arange(1, nr)
    nphi = 4 * max(1, int(math.ceil(2 * math.pi * R / (4 * h))))
    dphi = 2 * math.pi / nphi
    phi = dphi * np.arange(nphi)
    centre = 1 if cs.shape == "disc" else 0
    nring = radii.size
    m = centre + nring * nphi
    if m == 0:
        raise EmptyGrid(f"no grid nodes inside {cs.label()} at h={h:g}")

    def node(i, j):
        return centre + i * nphi + (j % nphi)

    rr = np.repeat(radii, nphi)
    pp = np.tile(phi, nring)
    x2 = np.concatenate([[0.0] * centre, rr * np.cos(pp)])
    x3 = np.concatenate([[0.0] * centre, rr * np.sin(pp)])
    weights = np.concatenate([[math.pi * (dr / 2) ** 2] * centre, rr * dr * dphi])

    P, Q, C = [], [], []
    gp, gc = [], []
    j = np.arange(nphi)
    for i, r in enumerate(radii):
        # angular edges
        P.append(node(i, j)), Q.append(node(i, j + 1)), C.append(np.full(nphi, dr / (r * dphi)))
        # radial edge outward
        if i + 1 < nring:
            P.append(node(i, j)), Q.append(node(i + 1, j))
            C.append(np.full(nphi, (r + dr / 2) * dphi / dr))
    if centre and nring:
        P.append(np.zeros(nphi, dtype=np.int64)), Q.append(node(0, j)), C.append(np.full(nphi, dphi / 2))
    if nring:
        gp.append(node(nring - 1, j)), gc.append(np.full(nphi, (radii[-1] + dr / 2) * dphi / dr))
        if cs.shape == "annulus":
            gp.append(node(0, j)), gc.append(np.full(nphi, (radii[0] - dr / 2) * dphi / dr))
    else:
        # lone centre node: every face is a ghost face
        gp.append(np.zeros(nphi, dtype=np.int64)), gc.append(np.full(nphi, dphi / 2))
    cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dtype=dt))
    p, q, c = cat(P, np.int64), cat(Q, np.int64), cat(C, float)
    gpa, gca = cat(gp, np.int64), cat(gc, float)
    # merge duplicate ghost entries on a node
    gsum = np.bincount(gpa, weights=gca, minlength=m)
    gnodes = np.nonzero(gsum)[0]

    # d_tau = -d/dphi, centred and periodic in each ring; zero at the centre
    rows, cols, vals = [], [], []
    for i in range(nring):
        rows += [node(i, j), node(i, j)]
        cols += [node(i, j + 1), node(i, j - 1)]
        vals += [np.full(nphi, -1 / (2 * dphi)), np.full(nphi, 1 / (2 * dphi))]
    if rows:
        d_tau = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(m, m)).tocsr()
    else:
        d_tau = sp.csr_matrix((m, m))
    rad = np.hypot(x2, x3)
    dist = cs.local_distance(x2, x3)
    a = max(cs.sup_radius(), float(rad.max()))
    return CrossSectionGrid(cs, h, "polar", x2, x3, weights, (p, q, c), (gnodes, gsum[gnodes]),
                            d_tau, dist, a)


# transverse ground state -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransverseGroundState:
    grid: CrossSectionGrid
    beta: float
    lambda1: float
    chi: np.ndarray
    E1: float
    J1: np.ndarray
    C_omega: float
    a: float
    residual: float = 0.0

    @property
    def tau_chi(self) -> np.ndarray:
        return self.grid.d_tau @ self.chi

    def rayleigh_quotient(self, psi=None) -> float:
        psi = self.chi if psi is None else psi
        op = self.grid.transverse_operator(self.beta)
        return op.quadratic_form(psi) / self.grid.norm2(psi)

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.grid.x2, self.grid.x3, self.chi]), delimiter=",",
                   header="x2,x3,chi", comments="", fmt="%.17g")


def _ground_pair(grid: CrossSectionGrid, beta: float, tol: float, method: str):
    key = ("ground", float(beta) ** 2, tol, method)
    if key in grid._cache:
        return grid._cache[key]
    A = grid.transverse_operator(beta)
    M = grid.mass()
    if grid.m <= 3:
        res = smallest_eigenpairs(A, M, k=1, tol=tol, method="dense")
    else:
        res = smallest_eigenpairs(A, M, k=1, tol=tol, method=method)
    vec = res.vector.copy()
    if np.dot(grid.weights, vec) < 0:
        vec = -vec
    vec /= math.sqrt(grid.norm2(vec))
    scale = np.max(np.abs(vec))
    if np.min(vec) < -1e-8 * scale:
        raise NonPositiveGroundState(
            f"ground state changes sign (min {np.min(vec):.3e}, max {scale:.3e}); "
            "refine the grid")
    out = (float(res.value), vec, float(np.max(res.residual_norms)))
    grid._cache[key] = out
    return out


def solve_transverse(grid: CrossSectionGrid, beta: float = 0.0, tol: float = 1e-10,
                     method: str = "shift-invert") -> TransverseGroundState:
    """Lowest eigenpair of ``-Laplacian - beta^2 d_tau^2`` on the grid.

    Also returns the ``beta = 0`` data (E1, J1), C_omega and ``a``.
    """
    lam, chi, res = _ground_pair(grid, beta, tol, method)
    if beta == 0.0:
        E1, J1 = lam, chi
    else:
        E1, J1, _ = _ground_pair(grid, 0.0, tol, method)
    C = _c_omega_of(grid, J1)
    return TransverseGroundState(grid, float(beta), lam, chi, E1, J1, C, grid.a, res)


def _c_omega_of(grid: CrossSectionGrid, J1) -> float:
    return grid.tau_norm2(J1)


def compute_C_omega(grid: CrossSectionGrid, tol: float = 1e-10) -> float:
    """``||d_tau J1||^2`` for the normalised ``beta = 0`` ground state J1."""
    _, J1, _ = _ground_pair(grid, 0.0, tol, "shift-invert")
    return _c_omega_of(grid, J1)


def richardson(coarse: float, fine: float, ratio: float = 2.0, order: int = 2) -> float:
    """Extrapolate two values computed at spacings ``h`` and ``h/ratio``."""
    f = ratio ** order
    return (f * fine - coarse) / (f - 1.0)


# weighted problem and lemma constants -------------------------------------------------


def mu_pencil(grid: CrossSectionGrid, chi, eps: float):
    """Stiffness and mass of ``||chi grad phi||^2 + eps^2 ||(d_tau chi) phi||^2`` on
    ``L2(chi^2)``; no boundary condition on phi."""
    chi = np.asarray(chi, dtype=float)
    p, q, c = grid.edges
    m = grid.m
    cw = c * chi[p] * chi[q]
    off = sp.coo_matrix((np.concatenate([-cw, -cw]), (np.concatenate([p, q]), np.concatenate([q, p]))),
                        shape=(m, m))
    diag = np.bincount(p, weights=cw, minlength=m) + np.bincount(q, weights=cw, minlength=m)
    tchi = grid.d_tau @ chi
    diag = diag + eps * eps * grid.weights * tchi ** 2
    if grid.d_tau_bnd is not None:
        # boundary half-cells, phi taken from the adjacent node
        tb = grid.d_tau_bnd @ chi
        diag = diag + eps * eps * np.bincount(grid.bnd_owner, weights=grid.bnd_weights * tb ** 2,
                                              minlength=m)
    K = SparseSymMatrix.from_scipy((off + sp.diags(diag)).tocsr(), symmetrize=True)
    M = SparseSymMatrix.diagonal_matrix(grid.weights * chi ** 2)
    return K, M


def solve_mu(grid: CrossSectionGrid, chi, eps: float, tol: float = 1e-10,
             method: str = "auto", dense: bool = False) -> float:
    """Smallest eigenvalue mu_eps of the chi^2-weighted transverse problem.

    ``mu_0 = 0`` exactly at the discrete level (constants are in the kernel).
    """
    if eps == 0.0:
        return 0.0
    K, M = mu_pencil(grid, chi, eps)
    if dense or grid.m <= 12:
        return max(0.0, smallest_eigenpairs(K, M, 1, tol, method="dense").value)
    res = smallest_eigenpairs(K, M, 1, tol, method=method)
    return max(0.0, res.value)


@dataclass(frozen=True)
class LemmaConstants:
    sup_laplacian_chi: float
    sup_tau_chi: float
    alpha0_lower: float
    c0: float
    epsilon0: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def estimate_lemma_constants(grid: CrossSectionGrid, chi, lambda1: float, beta: float,
                             c0: float = 0.25) -> LemmaConstants:
    """Grid-max estimates feeding the admissible-eps threshold.

    ``epsilon0 = sqrt(c0) * alpha0 / sup|d_tau chi|``; ``inf`` when the angular
    derivative vanishes (rotationally symmetric sections) and 0 when ``c0 = 0``.
    """
    chi = np.asarray(chi, dtype=float)
    if np.any(grid.dist <= 0):
        raise ZeroDistance("a grid node lies on the boundary")
    tchi = grid.d_tau @ chi
    lap = -lambda1 * chi - beta * beta * (grid.d_tau @ tchi)
    sup_tau = grid.tau_sup(chi)
    alpha0 = float(np.min(chi / grid.dist))
    if c0 == 0.0:
        eps0 = 0.0
    elif sup_tau <= 1e-7 * float(np.max(np.abs(chi))):
        eps0 = math.inf
    else:
        eps0 = math.sqrt(c0) * alpha0 / sup_tau
    return LemmaConstants(float(np.max(np.abs(lap))), sup_tau, alpha0, c0, eps0)


# one-dimensional Neumann problem ----------------------------------------------------------


def neumann_1d(potential, interval, coef: float = 1.0):
    """Lowest eigenpair of ``-coef d^2/dx^2 + V`` with Neumann ends on a vertex grid.

    ``potential`` holds V at ``n >= 2`` equispaced nodes including both ends;
    the mass is lumped (half weights at the ends).
    """
    V = np.asarray(potential, dtype=float)
    n = V.size
    a, b = interval
    if n < 2 or not b > a:
        raise ValueError("need at least two samples on a non-degenerate interval")
    dx = (b - a) / (n - 1)
    w = np.full(n, dx)
    w[[0, -1]] = dx / 2
    diag = np.full(n, 2 * coef / dx)
    diag[[0, -1]] = coef / dx
    diag = diag + w * V
    off = np.full(n - 1, -coef / dx)
    s = 1 / np.sqrt(w)
    d_s = diag * s * s
    e_s = off * s[:-1] * s[1:]
    val, vec = eigh_tridiagonal(d_s, e_s, select="i", select_range=(0, 0))
    phi = vec[:, 0] * s
    return float(val[0]), phi


def solve_nu(mu_values, interval=(-1.0, 1.0), quarter: bool = True) -> float:
    """Lowest eigenvalue of ``-(1/4) d^2/dx1^2 + mu`` on ``interval`` with Neumann ends.

    ``mu_values`` are samples on a uniform grid that includes both endpoints.
    With ``quarter=False`` the kinetic coefficient is 1.
    """
    mu = np.asarray(mu_values, dtype=float)
    if mu.size == 1:
        return float(mu[0])
    if np.ptp(mu) == 0.0:
        return float(mu[0])
    val, _ = neumann_1d(mu, interval, 0.25 if quarter else 1.0)
    return val
