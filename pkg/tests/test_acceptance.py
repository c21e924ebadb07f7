"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or as a script.
"""

import math
import time

import numpy as np
import pytest

from conftest import C_OMEGA_SQUARE, E1_SQUARE
from twistlab.certify import CertifySettings, certify_pipeline, check_small_positivity, local_hardy_weight
from twistlab.crosssec import (CrossSection, build_grid, compute_C_omega, mu_pencil, richardson,
                               solve_transverse)
from twistlab.effective import (Effective1D, alpha0_search, discrete_condition,
                                discrete_condition_quadrature, neumann_box_eigen, solve_effective)
from twistlab.profiles import TwistProfile
from twistlab.speclin import SparseSymMatrix, smallest_eigenpairs
from twistlab.tube import (TubeDiscretization, assemble, estimate_hardy_constant, evaluate_Q,
                           hardy_classical_check, lowest_mode, neumann_interface_check,
                           sweep_alpha)

pytestmark = pytest.mark.acceptance

RESULTS = {}


def report(num, ok, detail):
    line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[num] = line
    print("\n" + line)
    return ok


def _rel(a, b):
    return abs(a - b) / abs(b)


# 1 -------------------------------------------------------------------------------------


def test_c01_transverse_threshold():
    e32 = solve_transverse(build_grid(CrossSection.square(), 1 / 32)).E1
    e64 = solve_transverse(build_grid(CrossSection.square(), 1 / 64)).E1
    ext = richardson(e32, e64)
    err = _rel(ext, E1_SQUARE)
    assert report(1, err <= 1e-3, f"E1 extrapolated {ext:.10f} vs 2 pi^2 {E1_SQUARE:.10f}, "
                                  f"rel err {err:.2e} (tol 1e-3)")


# 2 -------------------------------------------------------------------------------------


def test_c02_rotational_invariance_dichotomy():
    c_disc = compute_C_omega(build_grid(CrossSection.disc(0.5), 1 / 64))
    c_sq = compute_C_omega(build_grid(CrossSection.square(), 1 / 64))
    err = _rel(c_sq, C_OMEGA_SQUARE)
    ok = c_disc <= 1e-6 and err <= 0.01
    assert report(2, ok, f"disc C_omega {c_disc:.2e} (tol 1e-6); square C_omega {c_sq:.6f} vs "
                         f"quadrature {C_OMEGA_SQUARE:.6f}, rel err {err:.2%} (tol 1%)")


# 3 -------------------------------------------------------------------------------------


def test_c03_figure_crossings():
    grid = build_grid(CrossSection.square(), 1 / 16)
    disc = TubeDiscretization(30.0, 1 / 8, grid)
    alphas = list(np.arange(-4.0, 2.0 + 1e-9, 0.25)) + [5.0]
    checks = []
    details = []
    for kind, window, neg in (("indicator", (-2.6, -1.6), -1.0), ("tent", (-3.6, -2.6), -1.5)):
        t0 = time.time()
        table = sweep_alpha(disc, 1.0, kind, alphas)
        gap = {round(r.alpha, 6): r.gap for r in table.rows}
        star = table.alpha_star
        in_window = window[0] <= star <= window[1]
        above = all(gap[a] > 0 for a in (0.5, 1.0, 2.0, 5.0))
        below = gap[neg] < 0
        conv = all(r.converged for r in table.rows)
        checks += [in_window, above, below, conv]
        details.append(f"{kind}: alpha* {star:.3f} in {window} {in_window}, e0>lambda1 at "
                       f"0.5,1,2,5 {above}, e0<lambda1 at {neg} {below} "
                       f"({time.time() - t0:.0f}s)")
    assert report(3, all(checks), "; ".join(details))


# 4 -------------------------------------------------------------------------------------


def test_c04_discrete_condition_polynomials():
    worst = 0.0
    for a in np.linspace(-5, 5, 201):
        for kind, poly in (("indicator", 2 * a * a + 4 * a), ("tent", 2 / 3 * a * a + 2 * a)):
            q = discrete_condition_quadrature(TwistProfile(1.0, a, kind))
            worst = max(worst, abs(poly - q), abs(discrete_condition(1.0, a, kind) - q))
    assert report(4, worst <= 1e-10, f"max |polynomial - quadrature| {worst:.2e} over 201 alphas "
                                      f"(tol 1e-10)")


# 5 -------------------------------------------------------------------------------------


def test_c05_neumann_boxes():
    ladder = [0, 0.1, 1, 10, 100, 1e3, 1e4, 1e5, 1e6]
    vals = [neumann_box_eigen(0, 1, 2, 3, a) for a in ladder]
    mono = bool(np.all(np.diff(vals) >= 0))
    coarse = neumann_box_eigen(0, 1, 2, 3, 1e6, spacing=2e-3)
    fine = vals[-1]
    mesh_ok = _rel(coarse, fine) < 1e-3
    e3 = _rel(fine, math.pi ** 2 / 4)
    far = neumann_box_eigen(0, 1, 2, 5, 1e8)
    e5 = _rel(far, (math.pi / 6) ** 2)
    ok = mono and mesh_ok and e3 <= 0.02 and e5 <= 0.02
    assert report(5, ok, f"monotone {mono}; (0,1,2,3) at 1e6: {fine:.5f} vs pi^2/4, rel {e3:.2%}, "
                         f"mesh change {_rel(coarse, fine):.1e}; (0,1,2,5) at 1e8: {far:.5f} vs "
                         f"(pi/6)^2, rel {e5:.2%} (tol 2%)")


# 6 -------------------------------------------------------------------------------------


def test_c06_neumann_cut():
    cs = CrossSection.square(offset=(1.0, 0.0))
    runs = {}
    for h, h1 in ((1 / 8, 1 / 4), (1 / 16, 1 / 8)):
        disc = TubeDiscretization(30.0, h1, build_grid(cs, h), interface=True)
        runs[h] = neumann_interface_check(disc, 1.0, n=8)
    coarse, fine = runs[1 / 8], runs[1 / 16]
    # both spacings halve, so the second-order error of the fine drop is (fine - coarse)/3
    err = abs(fine.drop - coarse.drop) / 3
    margin_ok = fine.drop > 0 and fine.drop >= 3 * err
    q_ok = fine.Q_test < 0 and 0 < fine.delta <= 1
    mix = _rel(fine.mixed, fine.mixed_target)
    ok = margin_ok and q_ok and mix <= 0.1 and fine.converged
    assert report(6, ok, f"lambda1_h - inf sigma(H^N) = {fine.drop:.4f}, error estimate {err:.4f} "
                         f"(ratio {fine.drop / err:.1f} >= 3); Q[psi] {fine.Q_test:.4f} at delta "
                         f"{fine.delta:.3f}; mixed {fine.mixed:.4f} vs -1/2, rel {mix:.1%}")


# 7 -------------------------------------------------------------------------------------


def test_c07_criticality():
    grid = build_grid(CrossSection.square(), 1 / 16)
    c = {}
    for L in (10.0, 20.0, 40.0):
        est = estimate_hardy_constant(assemble(TubeDiscretization(L, 1 / 4, grid), TwistProfile(1.0)))
        c[L] = est.c_num if est.converged else math.nan
    ok = c[40.0] < c[20.0] < c[10.0] and c[40.0] < 0.05
    assert report(7, ok, "c_num " + ", ".join(f"L={L:g}: {v:.5f}" for L, v in c.items())
                  + " (decreasing, c(40) < 0.05)")


# 8 -------------------------------------------------------------------------------------


def test_c08_certificate_soundness():
    cert = certify_pipeline(CertifySettings(CrossSection.square(), 1 / 32, beta=0.5,
                                            kind="indicator", alpha=0.1))
    prof = TwistProfile(0.5, 0.1, "indicator")
    grid = build_grid(CrossSection.square(), 1 / 16)
    cnum = {}
    for L in (20.0, 30.0):
        est = estimate_hardy_constant(assemble(TubeDiscretization(L, 1 / 8, grid), prof))
        cnum[L] = est.c_num if est.converged else math.nan
    sound = all(v >= cert.c_global - 1e-6 for v in cnum.values())
    ok = cert.verdict == "global_hardy" and cert.c_global > 0 and sound
    assert report(8, ok, f"verdict {cert.verdict}, c_global {cert.c_global:.4e}; c_num "
                  + ", ".join(f"L={L:g}: {v:.5f}" for L, v in cnum.items()))


# 9 -------------------------------------------------------------------------------------


def _random_fields(t, rng, count):
    """Seeded test functions: noise, smooth products, low Fourier modes, perturbed ground modes."""
    ground = lowest_mode(t, k=1).vector
    x1 = t.x1
    L = t.disc.L
    chi = t.ground.chi
    g = t.disc.cross
    out = []
    for i in range(count):
        kind = i % 5
        if kind == 0:
            psi = rng.standard_normal(t.n)
        elif kind == 1:
            c = rng.uniform(-L / 2, L / 2)
            w = rng.uniform(0.3, L / 2)
            phi = np.exp(-((x1 - c) / w) ** 2) * np.cos(rng.uniform(0, 3) * x1)
            psi = t.product(phi, chi * (1 + 0.3 * rng.standard_normal(g.m)))
        elif kind == 2:
            P = np.zeros((x1.size, g.m))
            for _ in range(4):
                k1, k2, k3 = rng.integers(1, 4, 3)
                P += rng.standard_normal() * np.outer(
                    np.sin(k1 * np.pi * (x1 + L) / (2 * L)),
                    np.sin(k2 * np.pi * (g.x2 + 0.5)) * np.sin(k3 * np.pi * (g.x3 + 0.5)))
            psi = P.ravel()
        elif kind == 3:
            psi = t.product(np.cos(np.pi * x1 / (2 * L)) + 0.1 * rng.standard_normal(x1.size), chi)
        else:
            psi = ground + 1e-3 * np.max(np.abs(ground)) * rng.standard_normal(t.n)
        out.append(psi)
    return out


def _oracle_gap(it, dn):
    """Relative eigenvalue differences; exact zeros (the weighted problem on round
    sections) are measured against the largest returned eigenvalue instead."""
    scale = float(np.max(np.abs(dn)))
    null = np.abs(dn) < 1e-9 * scale
    denom = np.where(null, scale, np.abs(dn))
    return float(np.max(np.abs(it - dn) / denom))


@pytest.fixture(scope="module")
def repulsive_tube():
    grid = build_grid(CrossSection.square(), 1 / 8)
    return assemble(TubeDiscretization(4.0, 1 / 4, grid), TwistProfile(1.0, 1.0, "indicator"))


def test_c09_property_suites(repulsive_tube):
    t = repulsive_tube
    prof = t.profile
    rng = np.random.default_rng(20140611)
    eps_sup = abs(prof.alpha) * prof.eps_sup
    small, strict = check_small_positivity(prof.beta, eps_sup, t.ground.a)
    assert small and strict and np.all(prof.product_sign(t.x1) >= 0)

    # (a) positivity of Q
    qs = [evaluate_Q(t, psi) / t.M.quadratic_form(psi) for psi in _random_fields(t, rng, 100)]
    ok_a = min(qs) >= -1e-9

    # (b) classical Hardy inequality
    viol = 0
    for psi in _random_fields(t, rng, 100):
        lhs, rhs = hardy_classical_check(t, (-1.0, 1.0), 0.0, psi)
        viol += lhs > rhs * (1 + 1e-12)
    ok_b = viol == 0

    # (c) local Hardy weight is dominated by Q
    w = local_hardy_weight(prof.beta, prof.alpha * prof.eps(t.x1), t.ground.chi,
                           t.ground.tau_chi, abs(prof.beta) * eps_sup * t.ground.a ** 2)
    wdiag = (w * t.w1[:, None] * t.disc.cross.weights[None, :]).ravel()
    slack = []
    for psi in _random_fields(t, rng, 100):
        slack.append((evaluate_Q(t, psi) - np.dot(wdiag, psi * psi)) / t.M.quadratic_form(psi))
    ok_c = min(slack) >= -1e-9

    # (d) LOBPCG against the dense oracle
    worst = 0.0
    cases = 0
    for cs in (CrossSection.square(), CrossSection.disc(0.5), CrossSection.annulus(0.25, 0.5),
               CrossSection.disc(0.5, offset=(0.2, 0.1)), CrossSection.rectangle(1.0, 0.5)):
        grid = build_grid(cs, 1 / 16)
        for beta in (0.0, 1.0):
            pencils = [(grid.transverse_operator(beta), grid.mass())]
            if beta:
                chi = solve_transverse(grid, beta).chi
                pencils.append(mu_pencil(grid, chi, 0.3))
            for A, M in pencils:
                if A.n > 2000:
                    continue
                it = smallest_eigenpairs(A, M, 2, 1e-11, method="lobpcg", maxiter=3000).eigenvalues
                dn = smallest_eigenpairs(A, M, 2, method="dense").eigenvalues
                worst = max(worst, _oracle_gap(it, dn))
                cases += 1
    small_tube = assemble(TubeDiscretization(2.0, 1 / 4, build_grid(CrossSection.square(), 1 / 8)),
                          TwistProfile(1.0, -1.0, "tent"))
    it = smallest_eigenpairs(small_tube.A, small_tube.M, 2, 1e-11, method="lobpcg",
                             maxiter=3000).eigenvalues
    dn = smallest_eigenpairs(small_tube.A, small_tube.M, 2, method="dense").eigenvalues
    worst = max(worst, _oracle_gap(it, dn))
    cases += 1
    ok_d = worst <= 1e-8

    ok = ok_a and ok_b and ok_c and ok_d
    assert report(9, ok, f"(a) min Q/||psi||^2 {min(qs):.3e} {ok_a}; (b) violations {viol} {ok_b}; "
                         f"(c) min slack {min(slack):.3e} {ok_c}; (d) {cases} pencils, worst rel "
                         f"diff {worst:.1e} {ok_d}")


# 10 ------------------------------------------------------------------------------------


def test_c10_effective_model():
    C = compute_C_omega(build_grid(CrossSection.square(), 1 / 32))
    e = Effective1D(C, 1.0, "indicator")
    alphas = np.linspace(-3.0, 1.0, 81)
    energies = np.array([solve_effective(e, a).value for a in alphas])
    neg = np.nonzero(energies < 0)[0]
    contiguous = neg.size > 0 and np.all(np.diff(neg) == 1)
    inside = neg.size > 0 and alphas[neg[0]] > -2.0 and alphas[neg[-1]] < 0.0
    res = alpha0_search(e, sign=-1)
    beyond = [solve_effective(e, -res.alpha0 * f).value for f in (1, 1.1, 1.5, 2, 3, 5, 10)]
    ok_beyond = min(beyond) >= -1e-8
    ok = contiguous and inside and ok_beyond
    span = f"[{alphas[neg[0]]:.2f}, {alphas[neg[-1]]:.2f}]" if neg.size else "empty"
    assert report(10, ok, f"negative on {span} within (-2, 0): {contiguous and inside}; alpha0 "
                          f"{res.alpha0:.4f}, min energy for alpha <= -alpha0 {min(beyond):.2e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
