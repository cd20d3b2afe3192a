import math

import numpy as np
import pytest

from glauert_bem import (
    BracketError,
    CorrectionSpec,
    ElementGeometry,
    HypothesisError,
    ValidationError,
    bracket_via_psi0,
    check_appendix_conditions,
    check_existence,
    mu_G,
    residual,
    scan_roots,
    solve_bisection,
    solve_fixed_point,
    solve_newton,
    solve_usual,
    synthetic_polar,
)
from glauert_bem.model import mu_G_prime, mu_L, mu_L_c_prime
from glauert_bem.solvers import METHODS, SolveOptions, fixed_point_rate_bound

from conftest import make_geom, rng, trivial, wilson


def test_solve_options_validation():
    with pytest.raises(ValidationError):
        SolveOptions(tol=0.0)
    with pytest.raises(ValidationError):
        SolveOptions(epsilon=1.5)
    with pytest.raises(ValidationError):
        SolveOptions(bracket=(0.5, 0.1))


# ---------------------------------------------------------------------------
# usual procedure


def test_usual_first_iterate_is_theta(linear_polar):
    geom = make_geom(gamma=0.05)
    report = solve_usual(geom, linear_polar, wilson(), SolveOptions(max_iter=1))
    assert abs(report.phi_history[0] - geom.theta) < 1e-15


def test_usual_converges_on_guaranteed_case():
    polar = synthetic_polar("linear_lift", slope=2 * math.pi, cd0=0.0, beta=0.5)
    geom = ElementGeometry(lam=1.0, r=1.0, gamma=0.35, chord=0.0628)
    assert check_appendix_conditions(geom, polar).guaranteed
    report = solve_usual(geom, polar, trivial())
    assert report.converged
    assert abs(residual(geom, polar, trivial(), report.phi_star)) <= 1e-10
    roots = scan_roots(geom, polar, trivial())
    positive = [r for r in roots.records if r.phi > 0]
    assert len(positive) == 1  # unique solution under the guarantee conditions
    assert abs(report.phi_star - positive[0].phi) < 1e-8


def test_usual_oscillates_on_stall_polar(stall_polar):
    # period-two cycle: reported as non-convergence, never raised
    geom = make_geom(lam=2.0, gamma=0.1, chord=1.6)
    report = solve_usual(geom, stall_polar, trivial(), SolveOptions(max_iter=400))
    assert not report.converged
    assert report.iterations == 400
    assert "max_iter" in report.message
    # the same configuration is perfectly solvable by bracketing
    assert solve_bisection(geom, stall_polar, trivial()).converged


# ---------------------------------------------------------------------------
# damped fixed point


def test_fixed_point_zero_iterations_from_a_root(linear_polar):
    geom = make_geom(gamma=0.05)
    corr = wilson()
    star = solve_bisection(geom, linear_polar, corr).phi_star
    report = solve_fixed_point(geom, linear_polar, corr, SolveOptions(phi0=star))
    assert report.converged
    assert report.iterations == 0
    assert report.initial_residual is not None


@pytest.mark.parametrize("epsilon", [0.25, 0.5, 1.0])
def test_fixed_point_monotone_to_largest_root(epsilon, linear_polar):
    # no active correction, non-decreasing mu curves, phi0 = theta
    geom = make_geom(gamma=0.15, chord=0.3)
    corr = trivial()
    report = solve_fixed_point(geom, linear_polar, corr, SolveOptions(epsilon=epsilon))
    assert report.converged
    phis = report.phi_history
    assert phis[0] == geom.theta
    assert all(b <= a + 1e-12 for a, b in zip(phis, phis[1:]))
    assert report.monotone
    largest = max(r.phi for r in scan_roots(geom, linear_polar, corr).records)
    assert abs(report.phi_star - largest) < 1e-8


def test_fixed_point_rate_bound_case():
    # steep lift and small theta put the iteration in the geometric-rate regime
    polar = synthetic_polar("linear_lift", slope=2 * math.pi, cd0=0.01, beta=0.4)
    geom = make_geom(lam=5.0, gamma=0.05, chord=2 * math.pi * 0.16 / 3)
    corr = trivial()
    bound = fixed_point_rate_bound(geom, polar, corr)
    assert bound.applies
    assert 0.0 < bound.factor < 1.0
    report = solve_fixed_point(geom, polar, corr)
    assert report.converged
    star = report.phi_star
    for k, phi in enumerate(report.phi_history):
        assert abs(phi - star) <= bound.factor ** k * bound.initial + 1e-12


def test_fixed_point_hypothesis_error_is_named():
    # constant lift: max mu_L' = 0; no drag; below the mu_G crest the
    # damping denominator vanishes
    polar = synthetic_polar("constant", level=1.0, cd0=0.0)
    geom = make_geom(gamma=0.05, chord=0.1)
    with pytest.raises(HypothesisError, match="rho_eps"):
        solve_fixed_point(geom, polar, trivial(), SolveOptions(phi0=0.05))


# ---------------------------------------------------------------------------
# Newton


def test_newton_zero_steps_from_root(linear_polar):
    geom = make_geom(gamma=0.05)
    corr = wilson()
    star = solve_bisection(geom, linear_polar, corr).phi_star
    report = solve_newton(geom, linear_polar, corr, SolveOptions(phi0=star))
    assert report.converged and report.iterations == 0


def test_newton_quadratic_near_root(dragfree_polar):
    # exact residual slope here (no correction active): true Newton
    geom = make_geom(gamma=0.15, chord=0.3)
    corr = trivial()
    oracle = solve_bisection(geom, dragfree_polar, corr,
                             SolveOptions(tol=1e-13, phi_tol=5e-15)).phi_star
    report = solve_newton(geom, dragfree_polar, corr,
                          SolveOptions(phi0=oracle + 0.01))
    assert report.converged
    assert report.iterations <= 6
    assert abs(report.phi_star - oracle) < 1e-9
    errs = [abs(p - oracle) for p in report.phi_history]
    # quadratic contraction while above rounding noise
    for e_prev, e_next in zip(errs, errs[1:]):
        if e_prev > 1e-6:
            assert e_next <= 50.0 * e_prev ** 2


def test_newton_with_active_correction_still_converges(linear_polar):
    geom = make_geom(gamma=0.05, chord=0.3)
    corr = wilson()
    oracle = solve_bisection(geom, linear_polar, corr,
                             SolveOptions(tol=1e-13, phi_tol=5e-15)).phi_star
    report = solve_newton(geom, linear_polar, corr, SolveOptions(phi0=oracle + 0.01))
    assert report.converged
    assert abs(report.phi_star - oracle) < 1e-8


def test_newton_flat_slope_falls_back_to_bisection(dragfree_polar):
    geom = make_geom(gamma=0.15, chord=0.3)
    corr = trivial()
    slope = mu_L_c_prime(geom, dragfree_polar, corr, 0.3)
    lo, hi = 1e-4, 0.3
    for _ in range(60):  # phi where the residual slope vanishes
        mid = 0.5 * (lo + hi)
        if mu_G_prime(geom.theta, mid) > slope:
            lo = mid
        else:
            hi = mid
    report = solve_newton(geom, dragfree_polar, corr, SolveOptions(phi0=0.5 * (lo + hi)))
    assert report.converged
    assert "fallback" in report.message


# ---------------------------------------------------------------------------
# bisection


def test_bisection_iteration_count_matches_halving(linear_polar):
    geom = make_geom(gamma=0.05)
    corr = wilson()
    opts = SolveOptions()
    report = solve_bisection(geom, linear_polar, corr, opts)
    assert report.converged
    full_depth = math.ceil(math.log2((geom.theta - 1e-4) / opts.phi_tol))
    assert 20 <= report.iterations <= full_depth + 1


def test_bisection_same_sign_bracket_aborts(linear_polar):
    geom = make_geom(gamma=0.05)
    with pytest.raises(BracketError, match="wrong initial guess"):
        solve_bisection(geom, linear_polar, wilson(),
                        SolveOptions(bracket=(geom.theta - 0.02, geom.theta - 0.01)))


def test_bisection_width_halves_exactly(linear_polar):
    geom = make_geom(gamma=0.05)
    report = solve_bisection(geom, linear_polar, wilson())
    w0 = geom.theta - 1e-4
    for k, width in enumerate(report.native_err_history, start=1):
        assert width == w0 * 0.5 ** k  # exact float equality


def test_bisection_immediate_when_root_at_midpoint(linear_polar):
    geom = make_geom(gamma=0.05)
    corr = wilson()
    star = solve_bisection(geom, linear_polar, corr).phi_star
    report = solve_bisection(geom, linear_polar, corr,
                             SolveOptions(bracket=(star - 0.05, star + 0.05)))
    assert report.converged
    assert report.iterations <= 2


# ---------------------------------------------------------------------------
# bracketing via the psi-free subproblem


def test_bracket_psi0_degenerate_for_none(linear_polar):
    geom = make_geom(gamma=0.05)
    corr = trivial()
    lo, hi = bracket_via_psi0(geom, linear_polar, corr)
    assert abs(residual(geom, linear_polar, corr, lo)) < 1e-9
    assert hi == min(geom.theta, linear_polar.beta + geom.gamma)


def test_bracket_psi0_brackets_the_corrected_root(linear_polar):
    geom = make_geom(gamma=0.05, chord=0.6)
    corr = wilson()
    lo, hi = bracket_via_psi0(geom, linear_polar, corr)
    assert residual(geom, linear_polar, corr, lo) <= 1e-12
    report = solve_bisection(geom, linear_polar, corr, SolveOptions(bracket=(lo, hi)))
    assert report.converged


def test_bracket_psi0_empty_bracket_error():
    # constant lift tuned so the psi-free root sits exactly at max I+
    polar = synthetic_polar("constant", level=1.0, cd0=0.0, beta=0.3)
    target = mu_G(math.atan2(1.0, 1.0), 0.3)
    chord = 4.0 * target * 2.0 * math.pi / 3.0
    geom = ElementGeometry(lam=1.0, r=1.0, gamma=0.0, chord=chord)
    with pytest.raises(BracketError, match="empty bracket"):
        bracket_via_psi0(geom, polar, wilson())


# ---------------------------------------------------------------------------
# existence and appendix checks


def test_existence_auto_satisfied_when_window_reaches_theta(linear_polar):
    geom = make_geom(gamma=0.15)  # beta + gamma = 0.55 > theta = 0.519
    report = check_existence(geom, linear_polar, wilson())
    assert report.interval_ok
    assert report.upper_is_theta
    assert report.simplified_ok  # mu_G(theta) = 0 <= mu_L(theta)
    assert report.corrected_ok


def test_existence_interval_failure_reported(linear_polar):
    geom = make_geom(gamma=-1.5)
    report = check_existence(geom, linear_polar, wilson())
    assert not report.interval_ok
    assert report.interval_margin < 0.0


def test_existence_symmetric_profile_in_window(dragfree_polar):
    geom = make_geom(gamma=0.1, chord=0.3)
    report = check_existence(geom, dragfree_polar, trivial())
    assert report.simplified_ok
    roots = scan_roots(geom, dragfree_polar, trivial())
    hi = min(geom.theta, dragfree_polar.beta + geom.gamma)
    assert any(geom.gamma <= r.phi <= hi for r in roots.records)


def test_appendix_conditions_pass_and_fail():
    polar = synthetic_polar("linear_lift", slope=2 * math.pi, cd0=0.0, beta=0.5)
    good = ElementGeometry(lam=1.0, r=1.0, gamma=0.35, chord=0.0628)
    rep = check_appendix_conditions(good, polar)
    assert rep.applicable and rep.guaranteed

    bad = ElementGeometry(lam=1.0, r=1.0, gamma=0.35, chord=0.5)
    repf = check_appendix_conditions(bad, polar)
    assert repf.applicable and not repf.guaranteed
    assert repf.contraction2_value > 1.0

    tiny = ElementGeometry(lam=1.0, r=1.0, gamma=0.35, chord=1e-4)
    assert check_appendix_conditions(tiny, polar).guaranteed  # sigma -> 0 passes

    na = ElementGeometry(lam=1.0, r=1.0, gamma=-0.1, chord=0.1)
    assert not check_appendix_conditions(na, polar).applicable


def test_appendix_guarantee_backed_by_random_starts():
    polar = synthetic_polar("linear_lift", slope=2 * math.pi, cd0=0.0, beta=0.5)
    geom = ElementGeometry(lam=1.0, r=1.0, gamma=0.35, chord=0.0628)
    assert check_appendix_conditions(geom, polar).guaranteed
    gen = rng(11)
    reference = solve_bisection(geom, polar, trivial()).phi_star
    for phi0 in gen.uniform(geom.gamma, geom.theta, size=20):
        report = solve_usual(geom, polar, trivial(), SolveOptions(phi0=float(phi0)))
        assert report.converged
        assert abs(report.phi_star - reference) < 1e-8


# ---------------------------------------------------------------------------
# root scanning and taxonomy


def test_scan_requires_reasonable_grid(linear_polar):
    with pytest.raises(ValidationError):
        scan_roots(make_geom(), linear_polar, trivial(), grid_size=10)


def test_scan_category1_negative_lift_pair(dragfree_polar):
    geom = make_geom(gamma=0.15, chord=0.3)
    roots = scan_roots(geom, dragfree_polar, trivial())
    assert len(roots.records) == 2
    assert roots.categories.count("negative_lift_branch") == 1
    assert roots.categories.count("principal") == 1
    neg = roots.by_category("negative_lift_branch")[0]
    assert neg.state.lift_sign < 0


def test_scan_unique_root_for_monotone_lift(linear_polar):
    geom = make_geom(gamma=0.05, chord=0.2)
    corr = wilson()
    roots = scan_roots(geom, linear_polar, corr)
    assert len(roots.records) == 1
    assert roots.categories == ["principal"]


def test_scan_stall_branch_detected(stall_polar):
    geom = make_geom(lam=1.0, gamma=0.1, chord=0.8)
    roots = scan_roots(geom, stall_polar, trivial())
    cats = roots.categories
    assert "principal" in cats
    assert "stall_branch" in cats
    for rec in roots.by_category("stall_branch"):
        assert rec.phi - geom.gamma >= stall_polar.alpha_s - 1e-12


def test_scan_agrees_with_single_solvers(linear_polar):
    geom = make_geom(gamma=0.05)
    corr = wilson()
    scanned = scan_roots(geom, linear_polar, corr).phis
    for method in METHODS.values():
        report = method(geom, linear_polar, corr)
        if report.converged:
            assert min(abs(report.phi_star - p) for p in scanned) < 1e-8


# ---------------------------------------------------------------------------
# cross-method agreement


def test_methods_agree_on_shared_root(linear_polar):
    geom = make_geom(gamma=0.05)
    corr = wilson()
    stars = {}
    for name, method in METHODS.items():
        report = method(geom, linear_polar, corr)
        assert report.converged, name
        assert abs(report.state.residual) <= 1e-10
        stars[name] = report.phi_star
    values = list(stars.values())
    assert max(values) - min(values) < 1e-8
