"""Blade element design: closed-form optimum, adjoint gradients, sweeps.

The element power density

    J = F(phi) a' (1 - a) (1 - (C_D/C_L)(phi - gamma) cot(phi))

is maximized over the section design (gamma, chord), subject to the flow
equations.  Two routes are implemented: the classical closed-form optimum
of the drag-free model (phi* = 2 theta / 3), and gradient ascent under
the corrected model with the gradient obtained from a 3x3 adjoint system.

The rotor power coefficient is Cp = (8 / lambda_max^2) * integral of
lambda^3 J over [lambda_min, lambda_max]; the same scale 8 lambda^3 /
lambda_max^2 multiplies the adjoint right-hand side when a lambda_max is
supplied, so the reported gradient is the Cp-integrand gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (
    AdjointError,
    BemError,
    DesignEvaluationError,
    DomainError,
    NoPositiveLiftError,
    ValidationError,
)
from .model import (
    CorrectionSpec,
    ElementGeometry,
    FlowState,
    TurbineConfig,
    effective_tip_factor,
    effective_tip_factor_prime,
    mu_D_c,
    mu_D_c_prime,
    mu_G,
    mu_L_c,
    mu_L_c_prime,
    recover_induction,
    residual,
)
from .polar import PolarTable, best_glide_angle
from .solvers import _scan_domain, scan_roots


@dataclass(frozen=True)
class DesignPoint:
    """Twist/chord pair with its operating angle and power density."""

    gamma: float
    chord: float
    phi_opt: float
    J: float


@dataclass(frozen=True)
class AdjointState:
    """Multipliers and gradient of the constrained power density."""

    p: np.ndarray
    M: np.ndarray
    b: np.ndarray
    grad: np.ndarray
    grad_printed: np.ndarray
    scale: float
    at_threshold: bool


@dataclass
class OptimizeResult:
    gamma: float
    chord: float
    phi_opt: float
    J: float
    converged: bool
    iterations: int
    accepted_steps: int
    grad_norm: float
    j_history: list = None  # objective value after each accepted step
    message: str = ""

    @property
    def point(self) -> DesignPoint:
        return DesignPoint(self.gamma, self.chord, self.phi_opt, self.J)


@dataclass(frozen=True)
class ElementSolution:
    lam: float
    gamma: float
    chord: float
    state: Optional[FlowState]
    J: float
    ok: bool
    message: str = ""


@dataclass
class SweepResult:
    lambdas: np.ndarray
    elements: list
    cp: float
    failures: int


@dataclass
class LandscapeResult:
    gammas: np.ndarray
    chords: np.ndarray
    J: np.ndarray          # nan where no solvable design
    multiple: np.ndarray   # True where the scalar equation has several roots
    invalid: np.ndarray


# ---------------------------------------------------------------------------
# drag-free closed forms


def simplified_closed_forms(theta: float, phi: float):
    """(a, a', J) of the drag-free model expressed through phi alone.

    a  = 1 - sin(phi) cos(theta - phi)/sin(theta)
    a' = sin(phi) sin(theta - phi)/cos(theta)
    J  = sin^2(phi) sin(2 (theta - phi)) / sin(2 theta)
    """
    if not 0.0 < phi <= theta < math.pi / 2.0:
        raise DomainError(f"need 0 < phi <= theta < pi/2; got phi={phi:g}, theta={theta:g}")
    a = 1.0 - math.sin(phi) * math.cos(theta - phi) / math.sin(theta)
    a_prime = math.sin(phi) * math.sin(theta - phi) / math.cos(theta)
    j = math.sin(phi) ** 2 * math.sin(2.0 * (theta - phi)) / math.sin(2.0 * theta)
    return a, a_prime, j


def simplified_optimum(lam: float, polar: PolarTable, turbine: TurbineConfig) -> DesignPoint:
    """Closed-form optimum of the drag-free model at local speed ratio lam.

    phi* = (2/3) theta; the twist places the section at its best glide
    angle and the chord makes the blade curve meet the momentum curve:
    gamma* = phi* - alpha_bar, c* = 8 pi r mu_G(phi*) / (B C_L(alpha_bar)).
    """
    theta = math.atan2(1.0, lam)
    phi_star = 2.0 * theta / 3.0
    alpha_bar = best_glide_angle(polar)
    cl_bar = polar.cl(alpha_bar)
    if cl_bar <= 0.0:
        raise NoPositiveLiftError(f"C_L({alpha_bar:g}) <= 0")
    r = turbine.element_radius(lam)
    chord = 8.0 * math.pi * r * mu_G(theta, phi_star) / (turbine.blade_count * cl_bar)
    j = simplified_closed_forms(theta, phi_star)[2]
    return DesignPoint(gamma=phi_star - alpha_bar, chord=chord, phi_opt=phi_star, J=j)


# ---------------------------------------------------------------------------
# power density and a deterministic element solve


def J_lambda(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
             state: FlowState) -> float:
    """Element power density F a'(1-a)(1 - (C_D/C_L) cot(phi)) at a solved state."""
    alpha = state.phi - geom.gamma
    cl = polar.cl(alpha)
    if cl == 0.0:
        raise DesignEvaluationError(
            f"C_L vanishes at the operating angle alpha={alpha:g}; power density undefined")
    ratio = polar.cd(alpha) / cl
    cot = math.cos(state.phi) / math.sin(state.phi)
    return state.tip_factor * state.a_prime * (1.0 - state.a) * (1.0 - ratio * cot)


def solve_element(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                  phi_hint: float = None, grid_size: int = 240) -> FlowState:
    """Solve one element deterministically.

    With ``phi_hint`` the root nearest the hint is refined from a locally
    expanded sign-change bracket (this is what lets the optimizer follow
    one solution branch).  Otherwise the residual is scanned and the
    largest principal root is taken, falling back to the largest root.
    """
    lo_dom, hi_dom = _scan_domain(geom, polar, corr)
    if phi_hint is not None and lo_dom < phi_hint < hi_dom:
        delta = max(1e-4, 1e-3 * (hi_dom - lo_dom))
        while delta < (hi_dom - lo_dom):
            lo = max(lo_dom, phi_hint - delta)
            hi = min(hi_dom, phi_hint + delta)
            try:
                f_lo = residual(geom, polar, corr, lo)
                f_hi = residual(geom, polar, corr, hi)
            except DomainError:
                break
            if (f_lo < 0.0) != (f_hi < 0.0):
                phi = brentq(lambda p: residual(geom, polar, corr, p), lo, hi,
                             xtol=1e-14, rtol=8.9e-16)
                return recover_induction(geom, polar, corr, phi)
            delta *= 4.0
    roots = scan_roots(geom, polar, corr, grid_size=grid_size)
    if not roots.records:
        raise DomainError("no root of the scalar equation on the working interval")
    principals = roots.by_category("principal")
    chosen = (principals[-1] if principals else roots.records[-1])
    return chosen.state


# ---------------------------------------------------------------------------
# adjoint system


def _objective_pieces(geom, polar, corr, state):
    phi, a, ap = state.phi, state.a, state.a_prime
    alpha = phi - geom.gamma
    cl, cd = polar.cl(alpha), polar.cd(alpha)
    if cl == 0.0:
        raise DesignEvaluationError("C_L vanishes at the operating angle")
    dcl, dcd = polar.cl_prime(alpha), polar.cd_prime(alpha)
    cot = math.cos(phi) / math.sin(phi)
    ratio = cd / cl
    dratio = (dcd * cl - cd * dcl) / (cl * cl)
    return alpha, cl, cd, dcl, dcd, cot, ratio, dratio


def assemble_adjoint(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                     state: FlowState, lambda_max: float = None) -> AdjointState:
    """Build and solve the 3x3 adjoint system M p = b at a converged state.

    Rows of M differentiate the three flow constraints with respect to
    (phi, a, a'); b is the same derivative of the power objective, scaled
    by 8 lambda^3 / lambda_max^2 when ``lambda_max`` is given (the Cp
    integrand) and unscaled otherwise.  ``grad_printed`` keeps a variant
    of the phi-row right-hand side in which the drag term is not weighted
    by a'(1-a); both are reported since they disagree whenever drag is
    active (finite differences arbitrate in the tests).

    psi is differenced one-sidedly at a = a_c (derivative from below,
    i.e. zero); such states are flagged ``at_threshold``.
    """
    phi, a, ap = state.phi, state.a, state.a_prime
    lam, theta = geom.lam, geom.theta
    s, c = math.sin(phi), math.cos(phi)
    cot = c / s
    f = effective_tip_factor(geom, corr, phi)
    fp = effective_tip_factor_prime(geom, corr, phi)
    muL = mu_L_c(geom, polar, corr, phi)
    muD = mu_D_c(geom, polar, corr, phi)
    dmuL = mu_L_c_prime(geom, polar, corr, phi)
    dmuD = mu_D_c_prime(geom, polar, corr, phi)
    nu = 1.0 - a
    excess = a - corr.a_c
    psi = corr.psi(excess, f)
    dpsi = corr.psi_prime(excess, f)
    psi_f = corr.psi_tip_grad(excess, f)

    m = np.empty((3, 3))
    # column 1: geometric relation tan(phi) - (1-a)/(lam (1+a'))
    m[0, 0] = 1.0 / (c * c)
    m[1, 0] = 1.0 / (lam * (1.0 + ap))
    m[2, 0] = nu / (lam * (1.0 + ap) ** 2)
    # column 2: thrust balance
    m[0, 1] = ((muD - dmuL) * cot / s + (muL * (1.0 + 2.0 * cot * cot) - dmuD) / s
               + psi_f * fp / (nu * nu))
    m[1, 1] = (1.0 + dpsi) / (nu * nu) + 2.0 * psi / (nu ** 3)
    m[2, 1] = 0.0
    # column 3: torque balance
    m[0, 2] = (muL + dmuD) * cot / (lam * s) - (dmuL + muD * (1.0 + 2.0 * cot * cot)) / (lam * s)
    m[1, 2] = ap / (nu * nu)
    m[2, 2] = 1.0 / nu

    _, cl, cd, dcl, dcd, _, ratio, dratio = _objective_pieces(geom, polar, corr, state)
    scale = 1.0 if lambda_max is None else 8.0 * lam ** 3 / lambda_max ** 2
    drag_gain = 1.0 - ratio * cot
    b = np.array([
        fp * ap * nu * drag_gain + f * ap * nu * (-dratio * cot + ratio / (s * s)),
        -f * ap * drag_gain,
        f * nu * drag_gain,
    ]) * scale
    b_printed = b.copy()
    b_printed[0] = (f * (ap * nu * (-dratio) * cot + ratio / (s * s))
                    + fp * ap * nu * drag_gain) * scale

    norm = float(np.linalg.norm(m))
    det = float(np.linalg.det(m))
    if abs(det) < 1e-14 * max(norm, 1e-300):
        raise AdjointError(f"adjoint matrix numerically singular (det={det:g})")
    p = np.linalg.solve(m, b)
    p_printed = np.linalg.solve(m, b_printed)

    grad = _design_gradient(geom, polar, corr, state, p, scale)
    grad_printed = _design_gradient(geom, polar, corr, state, p_printed, scale)
    return AdjointState(p=p, M=m, b=b, grad=grad, grad_printed=grad_printed,
                        scale=scale, at_threshold=abs(excess) < 1e-9)


def _design_gradient(geom, polar, corr, state, p, scale):
    phi, a, ap = state.phi, state.a, state.a_prime
    lam = geom.lam
    s, c = math.sin(phi), math.cos(phi)
    f = effective_tip_factor(geom, corr, phi)
    _, cl, cd, dcl, dcd, cot, ratio, dratio = _objective_pieces(geom, polar, corr, state)
    # alpha-derivatives of mu^c at fixed phi (twist enters through alpha only)
    quarter = 0.25 * geom.solidity / f
    muL_a, muD_a = quarter * dcl, quarter * dcd
    muL, muD = quarter * cl, quarter * cd

    dj_dgamma = scale * f * ap * (1.0 - a) * dratio * cot
    dg2_dgamma = (muL_a * c + muD_a * s) / (s * s)
    dg3_dgamma = (muL_a * s - muD_a * c) / (lam * s * s)
    dl_dgamma = dj_dgamma - p[1] * dg2_dgamma - p[2] * dg3_dgamma

    dg2_dchord = -(muL * c + muD * s) / (geom.chord * s * s)
    dg3_dchord = -(muL * s - muD * c) / (geom.chord * lam * s * s)
    dl_dchord = -p[1] * dg2_dchord - p[2] * dg3_dchord
    return np.array([dl_dgamma, dl_dchord])


def gradient(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
             state: FlowState = None, lambda_max: float = None) -> np.ndarray:
    """Adjoint gradient of the power density with respect to (gamma, chord)."""
    if state is None:
        state = solve_element(geom, polar, corr)
    return assemble_adjoint(geom, polar, corr, state, lambda_max=lambda_max).grad


# ---------------------------------------------------------------------------
# optimization and sweeps


def optimize_element(geom0: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                     step: float = 1e-2, tol: float = 1e-6, max_steps: int = 10_000,
                     lambda_max: float = None) -> OptimizeResult:
    """Gradient ascent on (gamma, chord) with backtracking step halving.

    Every iteration retries from the base step ``step``, halving while the
    trial point is unsolvable or decreases the objective; accepted steps
    never decrease it.  Stops at ||grad|| <= tol, after ``max_steps``
    trials, or when no acceptable step remains; always returns the best
    point seen.
    """
    if step <= 0.0:
        raise ValidationError("step must be positive")
    gamma, chord = geom0.gamma, geom0.chord
    geom = geom0
    state = solve_element(geom, polar, corr)  # initial point must be solvable
    scale = 1.0 if lambda_max is None else 8.0 * geom.lam ** 3 / lambda_max ** 2
    j_cur = scale * J_lambda(geom, polar, corr, state)
    grad = assemble_adjoint(geom, polar, corr, state, lambda_max=lambda_max).grad
    best = (j_cur, gamma, chord, state)
    j_history = [j_cur]
    kappa = step
    accepted = 0
    message = ""
    iterations = 0
    while iterations < max_steps:
        iterations += 1
        gnorm = float(np.hypot(grad[0], grad[1]))
        if gnorm <= tol:
            message = "gradient below tolerance"
            break
        trial_gamma = gamma + kappa * grad[0]
        trial_chord = chord + kappa * grad[1]
        ok = trial_chord > 0.0 and abs(trial_gamma) < math.pi / 2.0
        if ok:
            try:
                trial_geom = replace(geom, gamma=trial_gamma, chord=trial_chord)
                trial_state = solve_element(trial_geom, polar, corr, phi_hint=state.phi)
                j_trial = scale * J_lambda(trial_geom, polar, corr, trial_state)
            except BemError:
                ok = False
        if not ok or j_trial < j_cur:
            kappa *= 0.5
            if kappa * gnorm < 1e-15 * max(1.0, abs(gamma), abs(chord)):
                message = "no acceptable ascent step"
                break
            continue
        gamma, chord, state, geom, j_cur = (trial_gamma, trial_chord, trial_state,
                                            trial_geom, j_trial)
        accepted += 1
        j_history.append(j_cur)
        kappa = step  # backtracking restarts from the base step
        try:
            grad = assemble_adjoint(geom, polar, corr, state, lambda_max=lambda_max).grad
        except (AdjointError, DesignEvaluationError) as exc:
            message = f"stopped: {exc}"
            break
        if j_cur > best[0]:
            best = (j_cur, gamma, chord, state)
    else:
        message = "max_steps reached"
    j_best, gamma_b, chord_b, state_b = best
    converged = message == "gradient below tolerance"
    return OptimizeResult(gamma=gamma_b, chord=chord_b, phi_opt=state_b.phi,
                          J=j_best / scale, converged=converged, iterations=iterations,
                          accepted_steps=accepted,
                          grad_norm=float(np.hypot(grad[0], grad[1])),
                          j_history=j_history, message=message)


def cp_integral(lambdas, j_values, lambda_max: float) -> float:
    """Cp = (8/lambda_max^2) * trapezoid of lambda^3 J over the grid."""
    lambdas = np.asarray(lambdas, dtype=float)
    integrand = lambdas ** 3 * np.asarray(j_values, dtype=float)
    total = 0.0
    for k in range(len(lambdas) - 1):  # fixed left-to-right reduction order
        total += 0.5 * (lambdas[k + 1] - lambdas[k]) * (integrand[k] + integrand[k + 1])
    return 8.0 * total / lambda_max ** 2


def cp_sweep(turbine: TurbineConfig, polar: PolarTable, corr: CorrectionSpec,
             design: Callable[[float], tuple], grid_n: int = 50) -> SweepResult:
    """Solve every element of a design and integrate the power coefficient.

    ``design`` maps a local speed ratio to (gamma, chord).  Failed
    elements contribute J = 0 and are flagged; the sweep errors out only
    when every element fails.
    """
    if grid_n < 2:
        raise ValidationError("grid_n must be >= 2")
    lambdas = np.linspace(turbine.lambda_min, turbine.lambda_max, grid_n)
    elements = []
    for lam in lambdas:
        gamma, chord = design(float(lam))
        try:
            geom = ElementGeometry.from_turbine(turbine, float(lam), gamma, chord)
            state = solve_element(geom, polar, corr)
            j = J_lambda(geom, polar, corr, state)
            elements.append(ElementSolution(float(lam), gamma, chord, state, j, True))
        except BemError as exc:
            elements.append(ElementSolution(float(lam), gamma, chord, None, 0.0,
                                            False, message=str(exc)))
    failures = sum(1 for e in elements if not e.ok)
    if failures == len(elements):
        raise DomainError("every element of the sweep failed to solve")
    cp = cp_integral(lambdas, [e.J for e in elements], turbine.lambda_max)
    return SweepResult(lambdas=lambdas, elements=elements, cp=cp, failures=failures)


def landscape(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
              gamma_range: tuple, chord_range: tuple, resolution: int = 32,
              grid_size: int = 160) -> LandscapeResult:
    """Tabulate J over a (gamma, chord) grid, flagging multivalued cells."""
    if resolution < 16:
        raise ValidationError("resolution must be >= 16 per axis")
    gammas = np.linspace(gamma_range[0], gamma_range[1], resolution)
    chords = np.linspace(chord_range[0], chord_range[1], resolution)
    j = np.full((resolution, resolution), math.nan)
    multiple = np.zeros((resolution, resolution), dtype=bool)
    invalid = np.zeros((resolution, resolution), dtype=bool)
    for i, gam in enumerate(gammas):
        for k, ch in enumerate(chords):
            if ch <= 0.0 or abs(gam) >= math.pi / 2.0:
                invalid[i, k] = True
                continue
            cell = replace(geom, gamma=float(gam), chord=float(ch))
            try:
                roots = scan_roots(cell, polar, corr, grid_size=grid_size)
            except BemError:
                invalid[i, k] = True
                continue
            if not roots.records:
                invalid[i, k] = True
                continue
            multiple[i, k] = len(roots.records) > 1
            principals = roots.by_category("principal")
            chosen = principals[-1] if principals else roots.records[-1]
            try:
                j[i, k] = J_lambda(cell, polar, corr, chosen.state)
            except DesignEvaluationError:
                invalid[i, k] = True
                multiple[i, k] = True  # multivalued/undefined objective
    return LandscapeResult(gammas=gammas, chords=chords, J=j,
                           multiple=multiple, invalid=invalid)
