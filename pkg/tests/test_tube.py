import math

import numpy as np
import pytest

from twistlab.crosssec import CrossSection, build_grid, solve_transverse
from twistlab.errors import BranchCutInsideDomain, DimensionMismatch
from twistlab.profiles import TwistProfile
from twistlab.speclin import smallest_eigenpairs
from twistlab.tube import (SweepRow, SweepTable, TubeDiscretization, assemble,
                           check_branch_cut, estimate_hardy_constant, evaluate_Q,
                           hardy_classical_check, lowest_mode, neumann_interface_check, plateau,
                           smooth_step, sweep_alpha)


@pytest.fixture(scope="module")
def grid8():
    return build_grid(CrossSection.square(), 1 / 8)


def _dirichlet_1d(L, h1):
    # lowest eigenvalue of the 3-point Laplacian on (-L, L) with 2L/h1 cells
    N = round(2 * L / h1)
    return (2 - 2 * math.cos(math.pi / N)) / h1 ** 2


def test_discretization_validation(grid8):
    with pytest.raises(ValueError):
        TubeDiscretization(1.0, 0.3, grid8)
    with pytest.raises(ValueError):
        TubeDiscretization(0.75, 0.5, grid8, interface=True)
    with pytest.raises(ValueError):
        TubeDiscretization(-1.0, 0.25, grid8)


def test_straight_tube_is_kronecker_sum(grid8):
    disc = TubeDiscretization(3.0, 0.25, grid8)
    t = assemble(disc, TwistProfile(0.0))
    e0 = lowest_mode(t, tol=1e-11).value
    expected = solve_transverse(grid8).E1 + _dirichlet_1d(3.0, 0.25)
    assert e0 == pytest.approx(expected, rel=1e-10)


def test_straight_tube_interface_changes_nothing(grid8):
    # Dirichlet at -L, Neumann at 0-: same lowest value as the full interval
    t = assemble(TubeDiscretization(3.0, 0.25, grid8, interface=True), TwistProfile(0.0))
    expected = solve_transverse(grid8).E1 + _dirichlet_1d(3.0, 0.25)
    assert lowest_mode(t, tol=1e-11).value == pytest.approx(expected, rel=1e-10)


def test_interface_doubles_the_cut_nodes(grid8):
    plain = TubeDiscretization(2.0, 0.25, grid8)
    cut = TubeDiscretization(2.0, 0.25, grid8, interface=True)
    x_p, w_p, left_p, _, _ = plain.longitudinal()
    x_c, w_c, left_c, _, _ = cut.longitudinal()
    assert x_c.size == x_p.size + 1
    assert np.count_nonzero(x_c == 0.0) == 2
    # same total weight, same number of edges: the edge across the cut is gone
    assert w_c.sum() == pytest.approx(w_p.sum())
    assert left_c.size == left_p.size


def test_constant_twist_upper_bound(grid8):
    # phi(x1) chi is a test function with Q = ||phi'||^2
    t = assemble(TubeDiscretization(3.0, 0.25, grid8), TwistProfile(1.0))
    e0 = lowest_mode(t, tol=1e-11).value
    assert t.lambda1_h < e0 <= t.lambda1_h + _dirichlet_1d(3.0, 0.25) + 1e-9


def test_gauge_symmetry(grid8):
    disc = TubeDiscretization(3.0, 0.25, grid8)
    a = lowest_mode(assemble(disc, TwistProfile(1.0, -0.7, "tent"))).value
    b = lowest_mode(assemble(disc, TwistProfile(-1.0, 0.7, "tent"))).value
    assert a == pytest.approx(b, rel=1e-10)


def test_iterative_matches_dense_on_small_tube(grid8):
    t = assemble(TubeDiscretization(2.0, 0.25, grid8), TwistProfile(1.0, -1.0, "indicator"))
    assert t.n <= 2000
    it = lowest_mode(t, k=2, tol=1e-11).eigenvalues
    dn = smallest_eigenpairs(t.A, t.M, 2, method="dense").eigenvalues
    assert np.allclose(it, dn, rtol=1e-8)


def test_attractive_twist_binds(grid8):
    t = assemble(TubeDiscretization(8.0, 0.25, grid8), TwistProfile(1.0, -1.0, "indicator"))
    assert lowest_mode(t).value < t.lambda1_h


def test_repulsive_twist_does_not_bind(grid8):
    t = assemble(TubeDiscretization(8.0, 0.25, grid8), TwistProfile(1.0, 1.0, "indicator"))
    assert lowest_mode(t).value > t.lambda1_h


def test_evaluate_Q_checks_size(grid8):
    t = assemble(TubeDiscretization(1.0, 0.25, grid8), TwistProfile(1.0))
    with pytest.raises(DimensionMismatch):
        evaluate_Q(t, np.ones(3))
    with pytest.raises(DimensionMismatch):
        hardy_classical_check(t, (-1, 1), 0.0, np.ones(3))


def test_hardy_constant_decays_with_length(grid8):
    c = []
    for L in (5.0, 10.0):
        est = estimate_hardy_constant(assemble(TubeDiscretization(L, 0.25, grid8), TwistProfile(1.0)))
        assert est.converged
        c.append(est.c_num)
    assert 0 < c[1] < c[0]


def test_hardy_constant_positive_for_repulsive(grid8):
    t0 = assemble(TubeDiscretization(5.0, 0.25, grid8), TwistProfile(1.0))
    t1 = assemble(TubeDiscretization(5.0, 0.25, grid8), TwistProfile(1.0, 1.0, "indicator"))
    assert estimate_hardy_constant(t1).c_num > estimate_hardy_constant(t0).c_num


def test_sweep_rows_follow_input_order(grid8):
    disc = TubeDiscretization(4.0, 0.25, grid8)
    table = sweep_alpha(disc, 1.0, "indicator", [1.0, -1.0, 0.0])
    assert [r.alpha for r in table.rows] == [1.0, -1.0, 0.0]
    cold = sweep_alpha(disc, 1.0, "indicator", [1.0, -1.0, 0.0], warm_start=False)
    for a, b in zip(table.rows, cold.rows):
        assert a.e0 == pytest.approx(b.e0, rel=1e-9)


def test_sweep_threads_agree(grid8):
    disc = TubeDiscretization(2.0, 0.25, grid8)
    one = sweep_alpha(disc, 1.0, "tent", [-1.0, 0.5], threads=1)
    two = sweep_alpha(disc, 1.0, "tent", [-1.0, 0.5], threads=2)
    assert np.allclose([r.e0 for r in one.rows], [r.e0 for r in two.rows], rtol=1e-9)


def test_crossings_interpolate():
    rows = [SweepRow(a, 0.0, g, True, 1) for a, g in [(-3, 0.2), (-2, 0.1), (-1, -0.3), (0, 0.1)]]
    table = SweepTable(1.0, "indicator", 0.0, rows)
    assert table.crossings == [(pytest.approx(-1.75), "down"), (pytest.approx(-0.25), "up")]
    assert table.alpha_star == pytest.approx(-1.75)
    assert math.isnan(SweepTable(1.0, "indicator", 0.0, rows[:2]).alpha_star)


def test_sweep_csv(tmp_path):
    table = SweepTable(1.0, "tent", 0.0, [SweepRow(0.5, 1.0, 0.25, True, 3)])
    path = tmp_path / "s.csv"
    table.to_csv(path, "hash=abc")
    lines = path.read_text().splitlines()
    assert lines == ["# hash=abc", "alpha,e0,gap,converged,iterations", "0.5,1.0,0.25,1,3"]


def test_plateau_shape():
    x = np.array([0.0, 7.9, 8.0, 12.0, 16.0, 20.0])
    p = plateau(x, 8)
    assert p[0] == p[1] == p[2] == 1.0
    assert 0 < p[3] < 1
    assert p[4] == p[5] == 0.0
    assert smooth_step(0.5) == pytest.approx(0.5)


def test_branch_cut_detection(grid8):
    with pytest.raises(BranchCutInsideDomain):
        check_branch_cut(grid8)
    check_branch_cut(build_grid(CrossSection.square(offset=(1.0, 0.0)), 1 / 8))


def test_neumann_cut_lowers_spectrum():
    grid = build_grid(CrossSection.square(offset=(1.0, 0.0)), 1 / 8)
    res = neumann_interface_check(TubeDiscretization(30.0, 0.25, grid), 1.0, n=8)
    assert res.converged
    assert res.e0_N < res.lambda1_h
    assert res.Q_test < 0
    assert 0 < res.delta <= 1
    assert res.mixed == pytest.approx(-0.5, rel=0.1)


def test_neumann_straight_tube():
    grid = build_grid(CrossSection.square(offset=(1.0, 0.0)), 1 / 8)
    res = neumann_interface_check(TubeDiscretization(3.0, 0.25, grid), 0.0)
    assert res.e0_N > res.lambda1_h
    assert res.Q_test == 0.0


def test_zero_profile_ignores_alpha(grid8):
    disc = TubeDiscretization(4.0, 0.25, grid8)
    table = sweep_alpha(disc, 1.0, "zero", [-3.0, 0.0, 3.0])
    gaps = [r.gap for r in table.rows]
    assert min(gaps) >= -1e-9
    assert np.ptp(gaps) < 1e-9


def test_classical_hardy_local_support(grid8):
    # psi supported in I x omega: the local term alone dominates since rho <= 1
    t = assemble(TubeDiscretization(4.0, 0.25, grid8), TwistProfile(1.0))
    rng = np.random.default_rng(3)
    P = rng.standard_normal((t.x1.size, t.m))
    P[np.abs(t.x1) > 1.0] = 0.0
    lhs, rhs = hardy_classical_check(t, (-1.0, 1.0), 0.0, P.ravel())
    local = float(np.sum(t.w1 * ((P * P) @ grid8.weights)))
    assert lhs <= (2 + 64 / 4) * local <= rhs
