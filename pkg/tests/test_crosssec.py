import math

import numpy as np
import pytest

from conftest import C_OMEGA_SQUARE, E1_DISC, E1_SQUARE
from twistlab.crosssec import (CrossSection, build_grid, compute_C_omega, estimate_lemma_constants,
                               mu_pencil, neumann_1d, richardson, solve_mu, solve_nu,
                               solve_transverse)
from twistlab.errors import DisconnectedGrid, EmptyGrid
from twistlab.speclin import smallest_eigenpairs


def test_shape_validation():
    with pytest.raises(ValueError):
        CrossSection("triangle")
    with pytest.raises(ValueError):
        CrossSection.annulus(0.5, 0.4)
    with pytest.raises(ValueError):
        build_grid(CrossSection.square(), 0.0)


def test_empty_and_disconnected_grids():
    with pytest.raises(EmptyGrid):
        build_grid(CrossSection.square(side=0.1), 0.5)
    with pytest.raises(DisconnectedGrid):
        build_grid(CrossSection.annulus(0.4, 0.5, offset=(0.05, 0.0)), 1 / 8)


def test_small_disc_single_node():
    g = build_grid(CrossSection.disc(0.5), 0.5)
    assert g.m == 1
    assert (g.x2[0], g.x3[0]) == (0.0, 0.0)


def test_grid_weights_cover_area(square32):
    # interior nodes carry h^2 each; the area of the node cells is (1 - h)^2
    assert square32.weights.sum() == pytest.approx((1 - 1 / 32) ** 2)
    disc = build_grid(CrossSection.disc(0.5), 1 / 32)
    # polar cells stop half a spacing short of the Dirichlet circle
    assert disc.weights.sum() == pytest.approx(math.pi * (0.5 - 1 / 64) ** 2, rel=1e-3)


def test_square_E1_richardson(square16, square32):
    e16 = solve_transverse(square16).E1
    e32 = solve_transverse(square32).E1
    assert e16 < e32 < E1_SQUARE
    assert richardson(e16, e32) == pytest.approx(E1_SQUARE, rel=1e-5)


def test_disc_E1_richardson():
    e = [solve_transverse(build_grid(CrossSection.disc(0.5), h)).E1 for h in (1 / 32, 1 / 64)]
    assert richardson(*e) == pytest.approx(E1_DISC, rel=1e-3)


def test_lambda1_is_E1_without_twist(square16):
    s = solve_transverse(square16, 0.0)
    assert s.lambda1 == s.E1


def test_threshold_bounds(square16, ground16):
    # E1 <= lambda1(beta) <= E1 + beta^2 C_omega (J1 as a test function)
    s = ground16
    assert s.E1 < s.lambda1 <= s.E1 + s.beta ** 2 * s.C_omega + 1e-9
    assert solve_transverse(square16, 0.5).lambda1 < s.lambda1


def test_threshold_even_in_beta(square16, ground16):
    assert solve_transverse(square16, -1.0).lambda1 == pytest.approx(ground16.lambda1, rel=1e-12)


def test_ground_state_normalised_positive(square16, ground16):
    chi = ground16.chi
    assert np.all(chi > 0)
    assert square16.norm2(chi) == pytest.approx(1.0, rel=1e-12)
    assert ground16.rayleigh_quotient() == pytest.approx(ground16.lambda1, rel=1e-9)


def test_square_C_omega_against_quadrature(square16, square32):
    c = [compute_C_omega(g) for g in (square16, square32)]
    assert richardson(*c) == pytest.approx(C_OMEGA_SQUARE, rel=5e-3)


@pytest.mark.parametrize("cs", [CrossSection.disc(0.5), CrossSection.annulus(0.25, 0.5)])
def test_rotation_invariant_sections(cs):
    g = build_grid(cs, 1 / 16)
    s = solve_transverse(g, 2.0)
    assert s.C_omega < 1e-12
    assert s.lambda1 == pytest.approx(s.E1, rel=1e-10)
    assert estimate_lemma_constants(g, s.chi, s.lambda1, 2.0).epsilon0 == math.inf


def test_offset_disc_C_omega():
    # translating by d along x2 gives d_tau J1 = -d sin(phi) J1', so C_omega = d^2 E1 / 2
    d = 0.2
    cs = CrossSection.disc(0.5, offset=(d, 0.0))
    c = [solve_transverse(build_grid(cs, h)).C_omega for h in (1 / 16, 1 / 32)]
    assert richardson(*c, order=1) == pytest.approx(d * d * E1_DISC / 2, rel=2e-2)


def test_mu_zero_and_monotone(square16, ground16):
    chi = ground16.chi
    assert solve_mu(square16, chi, 0.0) == 0.0
    vals = [solve_mu(square16, chi, e) for e in (0.1, 0.3, 0.6)]
    assert 0 < vals[0] < vals[1] < vals[2]


def test_mu_iterative_matches_dense(square16, ground16):
    K, M = mu_pencil(square16, ground16.chi, 0.3)
    it = smallest_eigenpairs(K, M, 1, 1e-11, method="auto").value
    dn = smallest_eigenpairs(K, M, 1, method="dense").value
    assert it == pytest.approx(dn, rel=1e-8)


def test_mu_bounded_by_constant_test_function(square16, ground16):
    # phi = 1 gives eps^2 ||d_tau chi||^2 / ||chi||^2
    chi = ground16.chi
    eps = 0.4
    bound = eps ** 2 * square16.tau_norm2(chi) / square16.norm2(chi)
    assert solve_mu(square16, chi, eps) <= bound * (1 + 1e-9)


def test_lemma_constants(square32, ground32_half):
    s = ground32_half
    lem = estimate_lemma_constants(square32, s.chi, s.lambda1, 0.5, 0.25)
    assert 0 < lem.epsilon0 < math.inf
    assert lem.epsilon0 == pytest.approx(0.5 * lem.alpha0_lower / lem.sup_tau_chi)
    assert estimate_lemma_constants(square32, s.chi, s.lambda1, 0.5, 0.0).epsilon0 == 0.0


def test_neumann_1d_constant_potential():
    val, phi = neumann_1d(np.full(11, 0.7), (-1, 1))
    assert val == pytest.approx(0.7, abs=1e-12)
    assert np.ptp(phi) < 1e-10


def test_neumann_1d_between_min_and_mean():
    x = np.linspace(-1, 1, 201)
    V = x ** 2
    val, _ = neumann_1d(V, (-1, 1))
    assert V.min() < val < np.trapezoid(V, x) / 2


def test_neumann_1d_second_mode_free():
    # pure Neumann Laplacian on (0, 1): only the ground value 0 is returned, but the
    # eigenvalue with a large constant shift must be that shift
    val, _ = neumann_1d(np.full(50, 3.0), (0, 1), coef=0.25)
    assert val == pytest.approx(3.0)


def test_solve_nu_kinetic_coefficient():
    x = np.linspace(-1, 1, 101)
    mu = np.cos(np.pi * x) + 1
    quarter = solve_nu(mu, (-1, 1), quarter=True)
    full = solve_nu(mu, (-1, 1), quarter=False)
    assert mu.min() < quarter < full < mu.mean()
    assert solve_nu([0.3], (-1, 1)) == 0.3


def test_richardson_exact_for_quadratic():
    f = lambda h: 2.0 + 5.0 * h * h
    assert richardson(f(0.1), f(0.05)) == pytest.approx(2.0, rel=1e-13)


def test_ground_state_csv(tmp_path, ground16):
    path = tmp_path / "chi.csv"
    ground16.to_csv(path)
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=1)
    assert data.shape[0] == ground16.grid.m


def test_eps0_finite_but_degrades_at_corners():
    # chi ~ dist^2 near a corner, so min chi/dist (and eps0) halves with h
    vals = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        g = build_grid(CrossSection.square(), h)
        s = solve_transverse(g, 0.5)
        vals.append(estimate_lemma_constants(g, s.chi, s.lambda1, 0.5, 0.25).epsilon0)
    assert all(0 < v < math.inf for v in vals)
    assert vals[0] / vals[1] == pytest.approx(2, rel=0.1)
    assert vals[1] / vals[2] == pytest.approx(2, rel=0.1)
