"""Solution algorithms for the scalar flow-angle equation.

Four methods are provided:

* :func:`solve_usual` -- the classical sequential fixed point on
  (phi, a, a_prime).
* :func:`solve_fixed_point` -- damped fixed point on the scalar residual
  with the adaptive coefficient rho_eps; monotone from phi0 = theta under
  the no-correction hypotheses.
* :func:`solve_newton` -- Newton steps on the scalar residual with a
  bracket-bisection safeguard.
* :func:`solve_bisection` -- plain interval halving.

All methods stop on the same unified criterion |residual(phi)| <= tol so
that iteration counts are comparable; each algorithm's native error
measure is kept in the report for diagnostics.  Non-convergence is
reported, never raised; only malformed inputs raise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DomainError, HypothesisError, ValidationError
from .model import (
    PHI_EPS,
    CorrectionSpec,
    ElementGeometry,
    FlowState,
    _axial_nu,
    effective_tip_factor,
    mu_D_c,
    mu_D_c_prime,
    mu_G,
    mu_G_prime,
    mu_L,
    mu_L_c,
    mu_L_c_prime,
    phi_upper,
    recover_induction,
    residual,
)
from .polar import PolarTable


@dataclass(frozen=True)
class SolveOptions:
    """Tolerances and initial data shared by the solvers."""

    tol: float = 1e-10
    max_iter: int = 10_000
    epsilon: float = 1.0
    phi0: Optional[float] = None           # default: theta
    bracket: Optional[tuple] = None        # default: (1e-4, theta)
    phi_tol: float = 1e-12
    a0: float = 0.0
    a_prime0: float = 0.0

    def __post_init__(self):
        if self.tol <= 0.0 or self.phi_tol <= 0.0:
            raise ValidationError("tolerances must be positive")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValidationError("epsilon must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")
        if self.bracket is not None:
            lo, hi = self.bracket
            if not lo < hi:
                raise ValidationError("bracket endpoints must satisfy lo < hi")


@dataclass
class SolveReport:
    """Outcome of one solve: final angle, state, and iteration diagnostics."""

    method: str
    phi_star: float
    state: Optional[FlowState]
    iterations: int
    converged: bool
    monotone: bool
    residual_history: list = field(default_factory=list)
    phi_history: list = field(default_factory=list)
    native_err_history: list = field(default_factory=list)
    initial_residual: Optional[float] = None
    message: str = ""


@dataclass(frozen=True)
class RootRecord:
    phi: float
    state: FlowState
    lift_sign: int
    category: str


@dataclass
class RootSet:
    records: list

    @property
    def phis(self):
        return [rec.phi for rec in self.records]

    @property
    def categories(self):
        return [rec.category for rec in self.records]

    def by_category(self, name):
        return [rec for rec in self.records if rec.category == name]


@dataclass(frozen=True)
class ExistenceReport:
    interval_ok: bool
    interval_margin: float
    phi_hi: float
    upper_is_theta: bool
    simplified_ok: bool
    simplified_margin: float
    corrected_ok: bool
    corrected_margin: float
    message: str = ""


@dataclass(frozen=True)
class AppendixReport:
    applicable: bool
    stability_ok: bool
    stability_margin: float
    contraction1_ok: bool
    contraction1_value: float
    contraction2_ok: bool
    contraction2_value: float
    guaranteed: bool
    message: str = ""


@dataclass(frozen=True)
class RateBound:
    applies: bool
    factor: float
    initial: float


# ---------------------------------------------------------------------------
# helpers


def _residual_safe(geom, polar, corr, phi):
    try:
        return residual(geom, polar, corr, phi)
    except DomainError:
        return math.nan


def _is_monotone_decreasing(values, slack=1e-12):
    return all(b <= a + slack for a, b in zip(values, values[1:]))


def _finish(geom, polar, corr, method, phi, opts, iters, res_hist, phi_hist,
            err_hist, initial_residual=None, message=""):
    state = None
    try:
        state = recover_induction(geom, polar, corr, phi)
        res = state.residual
    except DomainError as exc:
        res = math.nan
        message = (message + "; " if message else "") + f"state recovery failed: {exc}"
    converged = math.isfinite(res) and abs(res) <= opts.tol
    if converged:
        try:
            lo, hi = _scan_domain(geom, polar, corr)
        except ValidationError:
            lo, hi = phi, phi
        if not lo - 1e-9 <= phi <= hi + 1e-9:
            # a genuine solution, but beyond the trusted working interval
            message = (message + "; " if message else "") + \
                "converged outside the working interval"
    return SolveReport(method=method, phi_star=float(phi), state=state,
                       iterations=iters, converged=converged,
                       monotone=_is_monotone_decreasing(phi_hist),
                       residual_history=res_hist, phi_history=phi_hist,
                       native_err_history=err_hist,
                       initial_residual=initial_residual, message=message)


def grid_I_plus(geom: ElementGeometry, polar: PolarTable, n: int = 1000):
    """Sampling grid of the working interval I+, kept inside the polar window."""
    hi = phi_upper(geom, polar)
    lo = max(hi / n, geom.gamma + polar.alpha_min + 1e-12, PHI_EPS)
    if hi <= lo:
        raise ValidationError("working interval I+ is empty for this element")
    return np.linspace(lo, hi, n)


def _axial_from_momentum(geom, polar, corr, phi):
    """Inner step of the usual procedure: invert the thrust balance at phi."""
    s = math.sin(phi)
    lift = mu_L_c(geom, polar, corr, phi)
    drag = mu_D_c(geom, polar, corr, phi)
    rhs = (lift * math.cos(phi) + drag * s) / (s * s)
    f = effective_tip_factor(geom, corr, phi)
    nu = _axial_nu(rhs, 1.0, corr, f)
    return 1.0 - nu, nu, lift, drag


# ---------------------------------------------------------------------------
# the four algorithms


def solve_usual(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Classical sequential iteration: phi from (a, a'), then a, then a'.

    Starts from (a, a') = (opts.a0, opts.a_prime0); the first angle from
    the rest state (0, 0) is theta.  A given opts.phi0 replaces the first
    angle computation (useful to start the recursion at a chosen angle).
    Divergence (iterate leaving the domain) is flagged in the report, not
    raised.
    """
    a, ap = opts.a0, opts.a_prime0
    res_hist, phi_hist, err_hist = [], [], []
    phi = math.nan
    message = ""
    for k in range(opts.max_iter):
        denom = geom.lam * (1.0 + ap)
        if denom == 0.0:
            message = "diverged: 1 + a' reached zero"
            break
        if k == 0 and opts.phi0 is not None:
            phi_new = opts.phi0
        else:
            phi_new = math.atan2(1.0 - a, denom)
        if not 0.0 < phi_new < math.pi / 2.0:
            message = f"diverged: iterate phi={phi_new:g} left (0, pi/2)"
            break
        phi = phi_new
        phi_hist.append(phi)
        res = _residual_safe(geom, polar, corr, phi)
        res_hist.append(res)
        if math.isfinite(res) and abs(res) <= opts.tol:
            return _finish(geom, polar, corr, "usual", phi, opts, len(res_hist),
                           res_hist, phi_hist, err_hist)
        try:
            a, _, lift, drag = _axial_from_momentum(geom, polar, corr, phi)
        except DomainError as exc:
            message = f"diverged: {exc}"
            break
        s = math.sin(phi)
        ap = (1.0 - a) * (lift * s - drag * math.cos(phi)) / (geom.lam * s * s)
        err_hist.append(abs(math.tan(phi) - (1.0 - a) / (geom.lam * (1.0 + ap))))
    if not message:
        message = "max_iter reached"
    last = phi if phi_hist else (opts.phi0 if opts.phi0 is not None else geom.theta)
    return _finish(geom, polar, corr, "usual", last, opts, len(res_hist),
                   res_hist, phi_hist, err_hist, message=message)


def rho_eps_denominator(geom, polar, corr, phi, max_dmu_L):
    theta = geom.theta
    return (max(0.0, -mu_G_prime(theta, phi)) + max_dmu_L
            + (1.0 + math.tan(theta) ** 2) * mu_D_c(geom, polar, corr, phi))


def solve_fixed_point(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                      opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Damped fixed point phi <- phi - rho_eps(phi) * residual(phi).

    rho_eps(phi) = eps / (max(0, -mu_G') + max_{I+} mu_L^c' + (1 + tan^2
    theta) mu_D^c(phi)); the supremum of mu_L^c' is approximated on a
    1000-point grid of I+.  From phi0 = theta with no active correction
    and non-decreasing mu_L^c, mu_D^c, the iterates decrease monotonically
    to the largest root.
    """
    theta = geom.theta
    grid = grid_I_plus(geom, polar)
    max_dmu_L = max(mu_L_c_prime(geom, polar, corr, p) for p in grid)

    phi = opts.phi0 if opts.phi0 is not None else theta
    res = _residual_safe(geom, polar, corr, phi)
    res_hist, phi_hist, err_hist = [], [phi], []
    if math.isfinite(res) and abs(res) <= opts.tol:
        return _finish(geom, polar, corr, "fixed_point", phi, opts, 0,
                       res_hist, phi_hist, err_hist, initial_residual=res)
    message = ""
    for _ in range(opts.max_iter):
        if not math.isfinite(res):
            message = "diverged: residual undefined at iterate"
            break
        denom = rho_eps_denominator(geom, polar, corr, phi, max_dmu_L)
        if denom <= 0.0:
            raise HypothesisError(
                "rho_eps denominator <= 0: the non-decreasing mu_L^c/mu_D^c "
                f"hypothesis fails at phi={phi:g} (max mu_L^c' = {max_dmu_L:g})")
        rho = opts.epsilon / denom
        phi_next = phi - rho * res
        err_hist.append(abs(phi_next - phi))
        if not 0.0 < phi_next < math.pi / 2.0:
            message = f"diverged: iterate phi={phi_next:g} left (0, pi/2)"
            break
        phi = phi_next
        phi_hist.append(phi)
        res = _residual_safe(geom, polar, corr, phi)
        res_hist.append(res)
        if math.isfinite(res) and abs(res) <= opts.tol:
            return _finish(geom, polar, corr, "fixed_point", phi, opts,
                           len(res_hist), res_hist, phi_hist, err_hist,
                           initial_residual=None)
    if not message:
        message = "max_iter reached"
    return _finish(geom, polar, corr, "fixed_point", phi, opts, len(res_hist),
                   res_hist, phi_hist, err_hist, message=message)


def newton_denominator(geom, polar, corr, phi):
    """Approximate residual slope used by the Newton step (mu_G' in place of mu_G^c')."""
    theta = geom.theta
    t = math.tan(theta - phi)
    return (mu_G_prime(theta, phi) - mu_L_c_prime(geom, polar, corr, phi)
            - (1.0 + t * t) * mu_D_c(geom, polar, corr, phi)
            + t * mu_D_c_prime(geom, polar, corr, phi))


def solve_newton(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                 opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Newton iteration on the scalar residual, bisection-safeguarded.

    A step that would leave the current sign-change bracket, or a
    derivative below 1e-14, falls back to one bisection halving.  Without
    a sign change on the initial bracket the method runs unsafeguarded
    from phi0 (and reports divergence instead of crashing).
    """
    theta = geom.theta
    lo, hi = opts.bracket if opts.bracket is not None else (1e-4, theta)
    f_lo = _residual_safe(geom, polar, corr, lo)
    f_hi = _residual_safe(geom, polar, corr, hi)
    have_bracket = (math.isfinite(f_lo) and math.isfinite(f_hi)
                    and (f_lo < 0.0) != (f_hi < 0.0))

    phi = opts.phi0 if opts.phi0 is not None else (0.5 * (lo + hi) if have_bracket else theta)
    res = _residual_safe(geom, polar, corr, phi)
    res_hist, phi_hist, err_hist = [], [phi], []
    if math.isfinite(res) and abs(res) <= opts.tol:
        return _finish(geom, polar, corr, "newton", phi, opts, 0,
                       res_hist, phi_hist, err_hist, initial_residual=res)
    fallbacks = 0
    message = ""
    for _ in range(opts.max_iter):
        if not math.isfinite(res):
            message = "diverged: residual undefined at iterate"
            break
        try:
            deriv = newton_denominator(geom, polar, corr, phi)
        except DomainError:
            deriv = 0.0
        phi_next = phi + res / deriv if abs(deriv) >= 1e-14 else math.nan
        take_fallback = (not math.isfinite(phi_next)
                         or (have_bracket and not lo < phi_next < hi)
                         or not 0.0 < phi_next < math.pi / 2.0)
        if take_fallback:
            if not have_bracket:
                message = "diverged: unsafe Newton step and no bracket to fall back on"
                break
            phi_next = lo + 0.5 * (hi - lo)
            fallbacks += 1
        err_hist.append(abs(phi_next - phi))
        phi = phi_next
        phi_hist.append(phi)
        res = _residual_safe(geom, polar, corr, phi)
        res_hist.append(res)
        if have_bracket and math.isfinite(res) and lo < phi < hi:
            if (res < 0.0) == (f_lo < 0.0):
                lo, f_lo = phi, res
            else:
                hi, f_hi = phi, res
        if math.isfinite(res) and abs(res) <= opts.tol:
            note = f"{fallbacks} bisection fallback step(s)" if fallbacks else ""
            return _finish(geom, polar, corr, "newton", phi, opts, len(res_hist),
                           res_hist, phi_hist, err_hist, message=note)
    if not message:
        message = "max_iter reached"
    if fallbacks:
        message += f"; {fallbacks} bisection fallback step(s)"
    return _finish(geom, polar, corr, "newton", phi, opts, len(res_hist),
                   res_hist, phi_hist, err_hist, message=message)


def solve_bisection(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                    opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Interval halving on the scalar residual.

    Requires a sign change on the initial bracket, else raises
    :class:`BracketError` ("wrong initial guess").  The tracked bracket
    width is halved exactly each iteration, so after k iterations it
    equals the initial width times 2**-k.
    """
    lo, hi = opts.bracket if opts.bracket is not None else (1e-4, geom.theta)
    if not 0.0 < lo < hi < math.pi / 2.0:
        raise ValidationError(f"bracket ({lo:g}, {hi:g}) must sit inside (0, pi/2)")
    f_lo = residual(geom, polar, corr, lo)
    f_hi = residual(geom, polar, corr, hi)
    if f_lo == 0.0:
        return _finish(geom, polar, corr, "bisection", lo, opts, 0, [], [lo], [])
    if f_hi == 0.0:
        return _finish(geom, polar, corr, "bisection", hi, opts, 0, [], [hi], [])
    if (f_lo < 0.0) == (f_hi < 0.0):
        raise BracketError(
            f"wrong initial guess: residual has the same sign at both ends "
            f"({f_lo:g}, {f_hi:g})")

    width = hi - lo
    res_hist, phi_hist, err_hist = [], [], []
    res = math.inf
    mid = lo + 0.5 * width
    for _ in range(opts.max_iter):
        if width <= opts.phi_tol or (math.isfinite(res) and abs(res) <= opts.tol):
            break
        width *= 0.5  # exact in binary floating point
        mid = lo + width
        res = _residual_safe(geom, polar, corr, mid)
        phi_hist.append(mid)
        res_hist.append(res)
        err_hist.append(width)
        if math.isfinite(res) and (res < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, res
        # else keep lo: [lo, lo + width] is already the surviving half
    if math.isfinite(res) and abs(res) <= opts.tol:
        phi_star = mid
    else:
        phi_star = lo + 0.5 * width
    return _finish(geom, polar, corr, "bisection", phi_star, opts, len(res_hist),
                   res_hist, phi_hist, err_hist)


METHODS = {
    "usual": solve_usual,
    "fixed": solve_fixed_point,
    "newton": solve_newton,
    "bisect": solve_bisection,
}


def solve(geom, polar, corr, method="fixed", opts: SolveOptions = SolveOptions()):
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValidationError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    return fn(geom, polar, corr, opts)


# ---------------------------------------------------------------------------
# brackets, condition checks and scanning


def bracket_via_psi0(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                     opts: SolveOptions = SolveOptions()):
    """Bracket the corrected solution using the psi = 0 subproblem.

    Solves the model with the high-induction correction switched off (tip
    loss and drag kept); its root phi_0 has non-positive corrected
    residual, so (phi_0, max I+] brackets a corrected root whenever the
    existence criterion holds.  With variant 'none' the left end is
    itself a root (degenerate bracket).
    """
    base = replace(corr, variant="none", a_c=1.0)
    hi = phi_upper(geom, polar)
    sub_opts = replace(opts, bracket=(opts.bracket[0] if opts.bracket else 1e-4, hi))
    report = solve_bisection(geom, polar, base, sub_opts)
    phi0 = report.phi_star
    if corr.variant == "none":
        return (phi0, hi)
    if phi0 >= hi - max(1e-9, 10.0 * opts.phi_tol):
        raise BracketError("empty bracket: psi=0 root sits at the right endpoint")
    return (phi0, hi)


def check_existence(geom: ElementGeometry, polar: PolarTable,
                    corr: CorrectionSpec) -> ExistenceReport:
    """Numeric margins for the solvability criteria of both model versions."""
    theta = geom.theta
    interval_margin = (polar.beta + geom.gamma) - (theta - math.pi / 2.0)
    interval_ok = interval_margin >= 0.0
    hi = min(theta, polar.beta + geom.gamma)
    upper_is_theta = interval_ok and hi >= theta - 1e-12
    message = ""

    simplified_margin = math.nan
    corrected_margin = math.nan
    if interval_ok and hi > 0.0:
        try:
            simplified_margin = (mu_L(geom, polar, hi) - mu_G(theta, hi))
        except DomainError as exc:
            message = f"simplified criterion not evaluable: {exc}"
        try:
            corrected_margin = residual(geom, polar, corr, hi)
        except DomainError as exc:
            message = (message + "; " if message else "") + \
                f"corrected criterion not evaluable: {exc}"
    else:
        message = "working interval empty"
    simplified_ok = math.isfinite(simplified_margin) and simplified_margin >= 0.0
    corrected_ok = math.isfinite(corrected_margin) and corrected_margin >= 0.0
    return ExistenceReport(interval_ok=interval_ok, interval_margin=interval_margin,
                           phi_hi=hi, upper_is_theta=upper_is_theta,
                           simplified_ok=simplified_ok,
                           simplified_margin=simplified_margin,
                           corrected_ok=corrected_ok,
                           corrected_margin=corrected_margin, message=message)


def _h_map(lam, x):
    return (lam * math.cos(x) / math.sin(x) + 1.0) / math.sin(x)


def _h_map_prime(lam, x):
    s, c = math.sin(x), math.cos(x)
    return -(lam * (1.0 + c * c) + s * c) / s ** 3


def check_appendix_conditions(geom: ElementGeometry, polar: PolarTable) -> AppendixReport:
    """Guarantee check for the usual procedure on the drag-free model.

    Evaluates the stability condition mu_L(theta) <= mu_G(gamma) and the
    two contraction bounds sin(theta) max mu_L' h(gamma) <= 1 and
    sin(theta) max mu_L |h'(gamma)| <= 1.  Grid maxima over I+ stand in
    for the exact suprema.
    """
    theta = geom.theta
    not_applicable = AppendixReport(False, False, math.nan, False, math.nan,
                                    False, math.nan, False)
    if geom.gamma <= 0.0:
        return replace(not_applicable, message="needs gamma > 0 (h undefined at 0)")
    if phi_upper(geom, polar) < theta:
        return replace(not_applicable,
                       message="needs max I+ = theta (polar window too narrow)")
    trivial = CorrectionSpec(variant="none", tip_loss=False)
    grid = grid_I_plus(geom, polar)
    max_mu = max(mu_L(geom, polar, p) for p in grid)
    max_dmu = max(mu_L_c_prime(geom, polar, trivial, p) for p in grid)
    stability_margin = mu_G(theta, geom.gamma) - mu_L(geom, polar, theta)
    c1 = math.sin(theta) * max_dmu * _h_map(geom.lam, geom.gamma)
    c2 = math.sin(theta) * max_mu * abs(_h_map_prime(geom.lam, geom.gamma))
    stability_ok = stability_margin >= 0.0
    c1_ok, c2_ok = c1 <= 1.0, c2 <= 1.0
    return AppendixReport(applicable=True, stability_ok=stability_ok,
                          stability_margin=stability_margin,
                          contraction1_ok=c1_ok, contraction1_value=c1,
                          contraction2_ok=c2_ok, contraction2_value=c2,
                          guaranteed=stability_ok and c1_ok and c2_ok)


def fixed_point_rate_bound(geom: ElementGeometry, polar: PolarTable,
                           corr: CorrectionSpec, epsilon: float = 1.0) -> RateBound:
    """Geometric decay factor for the damped fixed point, when applicable.

    Applies when tan(theta) (1 + max mu_D^c') < min mu_L^c' over I+; the
    bound is |phi^k - phi*| <= factor**k * initial.
    """
    theta = geom.theta
    grid = grid_I_plus(geom, polar)
    dmu_L = [mu_L_c_prime(geom, polar, corr, p) for p in grid]
    dmu_D = [mu_D_c_prime(geom, polar, corr, p) for p in grid]
    lhs = math.tan(theta) * (1.0 + max(dmu_D))
    applies = lhs < min(dmu_L)
    mu_d_theta = mu_D_c(geom, polar, corr, theta)
    denom = max(dmu_L) + math.sin(theta) + (1.0 + math.tan(theta) ** 2) * mu_d_theta
    factor = 1.0 - (min(dmu_L) - lhs) / denom
    rho_theta = epsilon / rho_eps_denominator(geom, polar, corr, theta, max(dmu_L))
    initial = abs(theta - rho_theta * mu_L_c(geom, polar, corr, theta))
    return RateBound(applies=applies, factor=factor, initial=initial)


def classify_root(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                  phi: float, state: FlowState) -> str:
    """Tag a root: negative lift, stall, active correction, or principal."""
    if state.lift_sign < 0:
        return "negative_lift_branch"
    if phi - geom.gamma >= polar.alpha_s:
        return "stall_branch"
    if corr.variant != "none" and state.a > corr.a_c + 1e-12:
        return "correction_branch"
    return "principal"


def _scan_domain(geom, polar, corr):
    theta = geom.theta
    if corr.is_trivial:
        lo = max(geom.gamma + polar.alpha_min, theta - math.pi / 2.0 + 1e-6)
        hi = min(geom.gamma + polar.alpha_max, theta + math.pi / 2.0 - 1e-6,
                 math.pi / 2.0 - 1e-9)
    else:
        hi = phi_upper(geom, polar)
        lo = max(hi * 1e-4, geom.gamma + polar.alpha_min + 1e-12, PHI_EPS)
    if not lo < hi:
        raise ValidationError("scan domain is empty for this element")
    return lo, hi


def scan_roots(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
               grid_size: int = 400, tol: float = 1e-10) -> RootSet:
    """Find and classify all residual roots on a uniform scan grid.

    Sign changes between grid nodes are refined by bisection (brentq).
    The scan covers the full interval I for the trivial correction and
    I+ otherwise.  Roots closer than 1e-10 are merged.
    """
    if grid_size < 100:
        raise ValidationError("grid_size must be >= 100")
    lo, hi = _scan_domain(geom, polar, corr)
    grid = np.linspace(lo, hi, grid_size)
    vals = np.array([_residual_safe(geom, polar, corr, p) for p in grid])

    roots = []
    for k in range(grid_size - 1):
        a, b = vals[k], vals[k + 1]
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        if a == 0.0:
            roots.append(grid[k])
        elif a * b < 0.0:
            roots.append(brentq(lambda p: residual(geom, polar, corr, p),
                                grid[k], grid[k + 1], xtol=1e-14, rtol=8.9e-16))
    if math.isfinite(vals[-1]) and vals[-1] == 0.0:
        roots.append(grid[-1])

    records = []
    for phi in sorted(roots):
        if records and abs(phi - records[-1].phi) < 1e-10:
            continue
        try:
            state = recover_induction(geom, polar, corr, phi)
        except DomainError:
            continue  # root of the scalar form with no representable state
        if not math.isfinite(state.residual) or abs(state.residual) > tol:
            continue
        records.append(RootRecord(phi=float(phi), state=state,
                                  lift_sign=state.lift_sign,
                                  category=classify_root(geom, polar, corr, phi, state)))
    return RootSet(records=records)
