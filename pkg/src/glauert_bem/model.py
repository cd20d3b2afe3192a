"""Domain types and model functions for the blade element momentum system.

The flow through one annular element is described by three unknowns: the
relative flow angle ``phi``, the axial induction factor ``a`` and the
angular induction factor ``a_prime``, coupled by

    tan(phi) = (1 - a) / (lambda (1 + a_prime))                       (momentum/geometry)
    a/(1-a)  = (mu_L^c cos(phi) + mu_D^c sin(phi))/sin^2(phi)
               - psi((a - a_c)_+) / (1-a)^2                           (thrust balance)
    a'/(1-a) = (mu_L^c sin(phi) - mu_D^c cos(phi))/(lambda sin^2(phi))  (torque balance)

where mu_L^c = sigma C_L(phi - gamma) / (4 F(phi)) and likewise for drag.
Eliminating ``a`` and ``a_prime`` collapses the system to one scalar
equation in ``phi``,

    residual(phi) = mu_L^c(phi) - tan(theta - phi) mu_D^c(phi) - mu_G^c(phi) = 0,

whose ingredients (the universal curve ``mu_G``, the implicit axial map
``tau``, the Prandtl tip factor and the high-induction corrections) all
live here.  Everything is a pure function of immutable inputs, so model
evaluation is safe to run concurrently across elements.

Note on notation: the reciprocal 1/tan (cotangent) appears in several
formulas; helper code spells it ``_cot``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import brentq

from .errors import DomainError, TipSingularityError, ValidationError
from .polar import PolarTable

# Internal clamp keeping evaluations away from the singular angles 0 and
# the tangent poles; endpoint values are one-sided limits of the clamped
# evaluation.
PHI_EPS = 1e-9

CORRECTION_VARIANTS = ("none", "glauert3", "glauert_empirical", "buhl", "wilson_spera")

# high-induction threshold defaults per correction model
DEFAULT_A_C = {
    "none": 1.0,
    "glauert3": 1.0 / 3.0,
    "glauert_empirical": 0.4,
    "buhl": 0.4,
    "wilson_spera": 1.0 / 3.0,
}


def _cot(x):
    return math.cos(x) / math.sin(x)


@dataclass(frozen=True)
class TurbineConfig:
    """Global turbine and flow parameters."""

    radius: float
    upstream_speed: float
    rotation_speed: float
    blade_count: int = 3
    fluid_density: float = 1.225
    lambda_min: float = 0.5
    lambda_max: float = 3.0

    def __post_init__(self):
        if self.blade_count < 1:
            raise ValidationError("blade_count must be >= 1")
        for name in ("radius", "upstream_speed", "rotation_speed", "fluid_density"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"{name} must be positive")
        if not 0.0 < self.lambda_min < self.lambda_max:
            raise ValidationError("need 0 < lambda_min < lambda_max")
        if self.element_radius(self.lambda_max) > self.radius * (1.0 + 1e-12):
            raise ValidationError(
                "lambda_max maps outside the rotor: lambda_max * upstream_speed "
                "/ rotation_speed must not exceed radius")

    def element_radius(self, lam: float) -> float:
        """Radius of the element spinning at local speed ratio ``lam``."""
        return lam * self.upstream_speed / self.rotation_speed


@dataclass(frozen=True)
class ElementGeometry:
    """One blade element: local speed ratio, placement and section design."""

    lam: float
    r: float
    gamma: float
    chord: float
    blade_count: int = 3
    tip_radius: Optional[float] = None

    def __post_init__(self):
        if self.lam <= 0.0 or self.r <= 0.0 or self.chord <= 0.0:
            raise ValidationError("lam, r and chord must be positive")
        if abs(self.gamma) >= math.pi / 2.0:
            raise ValidationError("twist must satisfy |gamma| < pi/2")
        if self.blade_count < 1:
            raise ValidationError("blade_count must be >= 1")
        if self.tip_radius is not None and self.r > self.tip_radius * (1.0 + 1e-12):
            raise ValidationError("element radius exceeds tip radius")

    @classmethod
    def from_turbine(cls, turbine: TurbineConfig, lam: float, gamma: float,
                     chord: float) -> "ElementGeometry":
        return cls(lam=lam, r=turbine.element_radius(lam), gamma=gamma, chord=chord,
                   blade_count=turbine.blade_count, tip_radius=turbine.radius)

    @property
    def solidity(self) -> float:
        """sigma = B c / (2 pi r), the annulus fraction occupied by blades."""
        return self.blade_count * self.chord / (2.0 * math.pi * self.r)

    @property
    def theta(self) -> float:
        """theta = atan(1/lambda), the zero-induction relative angle."""
        return math.atan2(1.0, self.lam)


@dataclass(frozen=True)
class CorrectionSpec:
    """Which high-induction model applies, its threshold, and tip loss.

    ``variant='none'`` means the plain momentum law (acts like a_c = 1).
    ``strict_lemma_mode`` pins F = 1 inside the Glauert empirical formula,
    whose behavior with F != 1 is discontinuous at a = a_c; the other
    variants never depend on this flag.
    """

    variant: str = "none"
    a_c: Optional[float] = None
    tip_loss: bool = False
    strict_lemma_mode: bool = True

    def __post_init__(self):
        if self.variant not in CORRECTION_VARIANTS:
            raise ValidationError(
                f"unknown correction variant {self.variant!r}; choose from {CORRECTION_VARIANTS}")
        if self.a_c is None:
            object.__setattr__(self, "a_c", DEFAULT_A_C[self.variant])
        if not 0.0 < self.a_c <= 1.0:
            raise ValidationError("a_c must lie in (0, 1]")

    @property
    def is_trivial(self) -> bool:
        """True when no correction alters the plain momentum balance."""
        return self.variant == "none" and not self.tip_loss

    def _psi_tip(self, tip_factor: float) -> float:
        if self.variant == "glauert_empirical" and self.strict_lemma_mode:
            return 1.0
        return tip_factor

    def psi(self, excess: float, tip_factor: float = 1.0) -> float:
        """psi(x) with x = (a - a_c)_+, the additive thrust correction."""
        x = max(0.0, excess)
        if x == 0.0 or self.variant == "none":
            return 0.0
        if self.variant == "glauert3":
            return 0.25 * x * (x * x / self.a_c + 2.0 * x + self.a_c)
        if self.variant == "wilson_spera":
            return x * x
        f = self._psi_tip(tip_factor)
        if self.variant == "buhl":
            return (x / (1.0 - self.a_c)) ** 2 / (2.0 * f)
        # Glauert empirical, excess part only so that psi(0) = 0
        return x * (f * (x + 2.0 * self.a_c) - 0.286) * f / 2.5708

    def psi_prime(self, excess: float, tip_factor: float = 1.0) -> float:
        """One-sided d psi/da for a > a_c; zero at or below the threshold."""
        x = max(0.0, excess)
        if x == 0.0 or self.variant == "none":
            return 0.0
        if self.variant == "glauert3":
            return 0.75 * x * x / self.a_c + x + 0.25 * self.a_c
        if self.variant == "wilson_spera":
            return 2.0 * x
        f = self._psi_tip(tip_factor)
        if self.variant == "buhl":
            return x / (f * (1.0 - self.a_c) ** 2)
        return (2.0 * f * x + 2.0 * self.a_c * f - 0.286) * f / 2.5708

    def psi_tip_grad(self, excess: float, tip_factor: float = 1.0) -> float:
        """d psi/dF at fixed excess; nonzero only for F-dependent variants."""
        x = max(0.0, excess)
        if x == 0.0:
            return 0.0
        if self.variant == "buhl":
            return -((x / (1.0 - self.a_c)) ** 2) / (2.0 * tip_factor ** 2)
        if self.variant == "glauert_empirical" and not self.strict_lemma_mode:
            return x * (2.0 * tip_factor * (x + 2.0 * self.a_c) - 0.286) / 2.5708
        return 0.0


@dataclass(frozen=True)
class FlowState:
    """Solution triple plus diagnostics for one element."""

    phi: float
    a: float
    a_prime: float
    tip_factor: float
    residual: float
    lift_sign: int = 0
    note: str = ""


@dataclass(frozen=True)
class ResidualBreakdown:
    mu_L_c: float
    mu_D_c: float
    mu_G_c: float
    tip_factor: float
    value: float


@dataclass(frozen=True)
class LoadsReport:
    """Dimensional per-span loads and the local thrust coefficient."""

    thrust_per_span: float
    torque_per_span: float
    thrust_coefficient: float
    axial_speed: float
    wake_rotation: float


# ---------------------------------------------------------------------------
# tip loss


def _tip_exponent(geom: ElementGeometry) -> float:
    if geom.tip_radius is None:
        raise ValidationError("tip loss requires a tip_radius on the element geometry")
    ratio = geom.r / geom.tip_radius
    return 0.5 * geom.blade_count * (1.0 - ratio) / ratio


def tip_loss_factor(geom: ElementGeometry, phi: float) -> float:
    """Prandtl tip factor F = (2/pi) acos(exp(-(B/2)(1 - r/R)/((r/R) sin phi)))."""
    if math.sin(phi) <= 0.0:
        raise DomainError(f"tip loss undefined for sin(phi) <= 0 (phi={phi:g})")
    k = _tip_exponent(geom)
    decay = math.exp(-k / math.sin(phi))
    if decay >= 1.0:
        raise TipSingularityError("element at the blade tip: F = 0")
    return (2.0 / math.pi) * math.acos(decay)


def tip_loss_factor_prime(geom: ElementGeometry, phi: float) -> float:
    """Analytic dF/dphi of the Prandtl formula."""
    if math.sin(phi) <= 0.0:
        raise DomainError(f"tip loss undefined for sin(phi) <= 0 (phi={phi:g})")
    k = _tip_exponent(geom)
    s = math.sin(phi)
    decay = math.exp(-k / s)
    if decay >= 1.0:
        raise TipSingularityError("element at the blade tip: F = 0")
    d_decay = decay * k * math.cos(phi) / (s * s)
    return -(2.0 / math.pi) * d_decay / math.sqrt(max(1.0 - decay * decay, 1e-300))


def effective_tip_factor(geom: ElementGeometry, corr: CorrectionSpec, phi: float) -> float:
    return tip_loss_factor(geom, phi) if corr.tip_loss else 1.0


def effective_tip_factor_prime(geom: ElementGeometry, corr: CorrectionSpec, phi: float) -> float:
    return tip_loss_factor_prime(geom, phi) if corr.tip_loss else 0.0


# ---------------------------------------------------------------------------
# dimensionless blade functions


def mu_L(geom: ElementGeometry, polar: PolarTable, phi: float) -> float:
    """(sigma/4) C_L(phi - gamma), the uncorrected lift function."""
    return 0.25 * geom.solidity * polar.cl(phi - geom.gamma)


def mu_D(geom: ElementGeometry, polar: PolarTable, phi: float) -> float:
    """(sigma/4) C_D(phi - gamma), the uncorrected drag function."""
    return 0.25 * geom.solidity * polar.cd(phi - geom.gamma)


def mu_L_c(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec, phi: float) -> float:
    """(sigma / (4 F(phi))) C_L(phi - gamma); equals mu_L with tip loss off."""
    return mu_L(geom, polar, phi) / effective_tip_factor(geom, corr, phi)


def mu_D_c(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec, phi: float) -> float:
    """(sigma / (4 F(phi))) C_D(phi - gamma); equals mu_D with tip loss off."""
    return mu_D(geom, polar, phi) / effective_tip_factor(geom, corr, phi)


def mu_L_c_prime(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                 phi: float) -> float:
    """d mu_L^c/dphi using the interpolant derivative and analytic dF/dphi."""
    f = effective_tip_factor(geom, corr, phi)
    fp = effective_tip_factor_prime(geom, corr, phi)
    alpha = phi - geom.gamma
    quarter_sigma = 0.25 * geom.solidity
    return quarter_sigma * (polar.cl_prime(alpha) / f - polar.cl(alpha) * fp / (f * f))


def mu_D_c_prime(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                 phi: float) -> float:
    f = effective_tip_factor(geom, corr, phi)
    fp = effective_tip_factor_prime(geom, corr, phi)
    alpha = phi - geom.gamma
    quarter_sigma = 0.25 * geom.solidity
    return quarter_sigma * (polar.cd_prime(alpha) / f - polar.cd(alpha) * fp / (f * f))


def mu_G(theta: float, phi: float) -> float:
    """sin(phi) tan(theta - phi): the universal momentum-side curve."""
    if abs(math.cos(theta - phi)) < PHI_EPS:
        raise DomainError(f"mu_G pole at theta - phi = +-pi/2 (phi={phi:g})")
    return math.sin(phi) * math.tan(theta - phi)


def mu_G_prime(theta: float, phi: float) -> float:
    """d mu_G/dphi = cos(phi) tan(theta-phi) - sin(phi) (1 + tan^2(theta-phi))."""
    if abs(math.cos(theta - phi)) < PHI_EPS:
        raise DomainError(f"mu_G pole at theta - phi = +-pi/2 (phi={phi:g})")
    t = math.tan(theta - phi)
    return math.cos(phi) * t - math.sin(phi) * (1.0 + t * t)


def phi_upper(geom: ElementGeometry, polar: PolarTable) -> float:
    """max I+ = min(theta, beta + gamma), the right end of the working interval."""
    return min(geom.theta, polar.beta + geom.gamma)


def interval_nonempty(geom: ElementGeometry, polar: PolarTable) -> bool:
    """Angle-window compatibility: -pi/2 + theta <= beta + gamma."""
    return -math.pi / 2.0 + geom.theta <= polar.beta + geom.gamma


def _clamp_phi(phi: float) -> float:
    """Keep internal evaluations strictly inside (0, pi/2)."""
    if not 0.0 - PHI_EPS < phi < math.pi / 2.0 + PHI_EPS:
        raise DomainError(f"phi={phi:g} outside (0, pi/2)")
    return min(max(phi, PHI_EPS), math.pi / 2.0 - PHI_EPS)


def g_func(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
           phi: float) -> float:
    """Right-hand side of the implicit axial equation.

    g(phi) = cot(phi) tan(theta - phi)
             + (mu_D^c(phi)/sin(phi)) (1 + cot(phi) tan(theta - phi))
    """
    if phi <= 0.0 or phi > geom.theta + PHI_EPS:
        raise DomainError(f"g defined on (0, theta]; got phi={phi:g}")
    return _g_extended(geom, polar, corr, phi)


def _g_extended(geom, polar, corr, phi):
    phi = _clamp_phi(phi)
    ct = _cot(phi) * math.tan(geom.theta - phi)
    drag = mu_D_c(geom, polar, corr, phi)
    return ct + (drag / math.sin(phi)) * (1.0 + ct)


def _axial_nu(rhs: float, weight: float, corr: CorrectionSpec, tip_factor: float) -> float:
    """Solve a/(1-a) + weight * psi((a-a_c)_+)/(1-a)^2 = rhs for nu = 1 - a.

    The left side is strictly increasing in a, so the root is unique.  It
    is computed in nu-space to keep full precision as a approaches 1.
    Negative rhs down to -1 maps to the exact uncorrected branch (a < 0).
    """
    if rhs <= -1.0:
        raise DomainError(f"axial balance unsolvable: rhs={rhs:g} <= -1")
    nu0 = 1.0 / (1.0 + rhs)
    if rhs <= 0.0 or corr.variant == "none" or 1.0 - nu0 <= corr.a_c:
        return nu0

    cap = 1.0 - corr.a_c  # correction active: root lies in nu in [nu0, cap]

    def balance(nu):
        x = cap - nu
        return ((1.0 - nu) / nu - rhs
                + weight * corr.psi(x, tip_factor) / (nu * nu))

    if corr.variant == "wilson_spera":
        nu = _wilson_nu(rhs, weight, corr.a_c, nu0)
    else:
        f_lo, f_hi = balance(nu0), balance(cap)
        if f_lo == 0.0:
            return nu0
        if f_hi == 0.0:
            return cap
        if f_lo < 0.0 or f_hi > 0.0:
            raise DomainError(
                "axial balance lost monotonicity (psi < 0 under the current "
                "tip factor); use strict_lemma_mode or another variant")
        nu = brentq(balance, nu0, cap, xtol=1e-300, rtol=8.9e-16, maxiter=200)
    return _polish_nu(balance, corr, nu, nu0, cap, weight, tip_factor)


def _wilson_nu(rhs, weight, a_c, nu0):
    """Closed-form quadratic branch for psi(x) = x^2."""
    cap = 1.0 - a_c
    qa = weight - 1.0 - rhs
    qb = 1.0 - 2.0 * weight * cap
    qc = weight * cap * cap
    if qa == 0.0:
        return -qc / qb
    disc = math.sqrt(max(qb * qb - 4.0 * qa * qc, 0.0))
    q = -0.5 * (qb + math.copysign(disc, qb))
    roots = []
    if q != 0.0:
        roots.append(qc / q)
    roots.append(q / qa)
    good = [nu for nu in roots if nu0 * (1.0 - 1e-9) <= nu <= cap * (1.0 + 1e-9)]
    if not good:
        raise DomainError("no axial root in [a_c, 1); inconsistent inputs")
    return min(good, key=lambda nu: abs((1.0 - nu) / nu - rhs
                                        + weight * (cap - nu) ** 2 / (nu * nu)))


def _polish_nu(balance, corr, nu, nu0, cap, weight, tip_factor):
    # one Newton step in nu tightens closed-form roots to machine accuracy
    x = cap - nu
    slope = (-1.0 / (nu * nu)
             - weight * corr.psi_prime(x, tip_factor) / (nu * nu)
             - 2.0 * weight * corr.psi(x, tip_factor) / (nu * nu * nu))
    if slope != 0.0:
        step = balance(nu) / slope
        candidate = nu - step
        if nu0 <= candidate <= cap and abs(balance(candidate)) <= abs(balance(nu)):
            nu = candidate
    return nu


def tau_nu(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
           phi: float) -> float:
    """1 - tau(phi) at full floating-point precision (tau -> 1 as phi -> 0)."""
    phi = _clamp_phi(phi)
    theta = geom.theta
    rhs = _g_extended(geom, polar, corr, phi)
    weight = math.sin(theta) * math.sin(phi) / math.cos(theta - phi)
    f = effective_tip_factor(geom, corr, phi)
    return _axial_nu(rhs, weight, corr, f)


def solve_tau(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
              phi: float) -> float:
    """The implicit axial map: the unique a in [0,1) balancing g(phi).

    Defined for phi in I+; the Glauert empirical variant follows the
    ``strict_lemma_mode`` flag of ``corr`` for the tip factor inside psi.
    """
    if phi <= 0.0 or phi > geom.theta + PHI_EPS:
        raise DomainError(f"tau defined on (0, theta]; got phi={phi:g}")
    return 1.0 - tau_nu(geom, polar, corr, phi)


def mu_G_c(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
           phi: float) -> float:
    """Corrected momentum curve: mu_G plus the high-induction excess term."""
    phi_c = _clamp_phi(phi)
    theta = geom.theta
    base = mu_G(theta, phi_c)
    if corr.variant == "none":
        return base
    nu = tau_nu(geom, polar, corr, phi_c)
    excess = (1.0 - nu) - corr.a_c
    if excess <= 0.0:
        return base
    f = effective_tip_factor(geom, corr, phi_c)
    s = math.sin(phi_c)
    kern = math.cos(theta) * s * s / math.cos(theta - phi_c)
    return base + kern * corr.psi(excess, f) / (nu * nu)


def residual(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
             phi: float) -> float:
    """Signed scalar-model residual; zeros are the model's solutions.

    Sign convention: blade side minus momentum side,
    mu_L^c - tan(theta - phi) mu_D^c - mu_G^c.  With the trivial
    correction (no tip loss, variant 'none') the formula is evaluated on
    the full angular interval I, which admits negative-lift branches;
    otherwise it requires phi in (0, pi/2).
    """
    return residual_components(geom, polar, corr, phi).value


def residual_components(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                        phi: float) -> ResidualBreakdown:
    theta = geom.theta
    if corr.is_trivial:
        if not (theta - math.pi / 2.0 < phi < theta + math.pi / 2.0):
            raise DomainError(f"phi={phi:g} outside the momentum-side domain")
        lift = mu_L(geom, polar, phi)
        drag = mu_D(geom, polar, phi)
        value = lift - math.tan(theta - phi) * drag - mu_G(theta, phi)
        return ResidualBreakdown(lift, drag, mu_G(theta, phi), 1.0, value)
    phi_c = _clamp_phi(phi)
    lift = mu_L_c(geom, polar, corr, phi_c)
    drag = mu_D_c(geom, polar, corr, phi_c)
    momentum = mu_G_c(geom, polar, corr, phi_c)
    f = effective_tip_factor(geom, corr, phi_c)
    value = lift - math.tan(theta - phi_c) * drag - momentum
    return ResidualBreakdown(lift, drag, momentum, f, value)


def recover_induction(geom: ElementGeometry, polar: PolarTable, corr: CorrectionSpec,
                      phi: float) -> FlowState:
    """Post-compute (a, a_prime) from an angle solving the scalar equation.

    For the corrected model a = tau(phi); with the trivial correction the
    thrust balance is inverted directly, which also covers negative-lift
    roots outside (0, theta].
    """
    theta = geom.theta
    note = ""
    if abs(phi) < 1e-6 or abs(phi - math.pi / 2.0) < 1e-6:
        note = "phi near a singular angle of the original system"

    if corr.is_trivial:
        s = math.sin(phi)
        if s == 0.0:
            raise DomainError("phi = 0: original system undefined")
        lift = mu_L(geom, polar, phi)
        drag = mu_D(geom, polar, phi)
        rhs = (lift * math.cos(phi) + drag * s) / (s * s)
        if abs(1.0 + rhs) < 1e-300:
            raise DomainError(f"thrust balance degenerate (a -> inf) at phi={phi:g}")
        a = rhs / (1.0 + rhs)  # any a != 1, including negative-lift branches
        nu = 1.0 - a
        f = 1.0
    else:
        phi = _clamp_phi(phi)
        nu = tau_nu(geom, polar, corr, phi)
        a = 1.0 - nu
        s = math.sin(phi)
        lift = mu_L_c(geom, polar, corr, phi)
        drag = mu_D_c(geom, polar, corr, phi)
        f = effective_tip_factor(geom, corr, phi)
    a_prime = nu * (lift * s - drag * math.cos(phi)) / (geom.lam * s * s)
    res = residual(geom, polar, corr, phi)
    cl = polar.cl(phi - geom.gamma)
    lift_sign = (cl > 0.0) - (cl < 0.0)
    return FlowState(phi=float(phi), a=float(a), a_prime=float(a_prime), tip_factor=f,
                     residual=float(res), lift_sign=lift_sign, note=note)


def loads_diagnostics(config: TurbineConfig, geom: ElementGeometry, corr: CorrectionSpec,
                      state: FlowState) -> LoadsReport:
    """Dimensional thrust/torque per unit span and the thrust coefficient.

    C_T = 4 chi(a, a_c) F with chi = a(1-a) + psi((a-a_c)_+).
    """
    a, ap, f = state.a, state.a_prime, state.tip_factor
    chi = a * (1.0 - a) + corr.psi(a - corr.a_c, f)
    u, rho = config.upstream_speed, config.fluid_density
    ct = 4.0 * chi * f
    thrust = ct * u * u * rho * math.pi * geom.r
    torque = 4.0 * ap * (1.0 - a) * f * geom.lam * u * u * rho * math.pi * geom.r ** 2
    return LoadsReport(thrust_per_span=thrust, torque_per_span=torque,
                       thrust_coefficient=ct,
                       axial_speed=(1.0 - a) * u,
                       wake_rotation=2.0 * ap * config.rotation_speed)
