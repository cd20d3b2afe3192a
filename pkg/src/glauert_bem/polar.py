"""Airfoil polar ingestion and evaluation.

A polar is a table of lift/drag coefficients sampled against angle of
attack (radians).  Evaluation uses a monotone piecewise cubic (PCHIP)
interpolant, which is C1 and does not overshoot near stall; tables with
fewer than four samples fall back to piecewise linear interpolation.

Conventions:
  * ``cd`` is defined for every angle: outside the sampled range it is
    clamped to the nearest end value (constant extrapolation).
  * ``cl`` is only trusted inside the sampled range and raises
    :class:`DomainError` outside it, unless the table was built with
    ``clamp_cl=True``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NoPositiveLiftError, PolarFormatError, ValidationError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PolarSample:
    """One tabulated point: angle of attack (rad), lift and drag coefficient."""

    alpha: float
    cl: float
    cd: float


class _LinearInterp:
    """Piecewise-linear interpolant with the same call protocol as PCHIP."""

    def __init__(self, x, y):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.slopes = np.diff(self.y) / np.diff(self.x)

    def __call__(self, x):
        return np.interp(x, self.x, self.y)

    def derivative(self):
        return self._derivative

    def _derivative(self, x):
        idx = np.clip(np.searchsorted(self.x, x, side="right") - 1, 0, len(self.slopes) - 1)
        return self.slopes[idx]


class PolarTable:
    """Immutable polar table with C1 interpolation of cl and cd.

    Parameters
    ----------
    alpha, cl, cd : array_like
        Samples, strictly increasing in ``alpha``.  ``cd`` must be
        non-negative everywhere.
    beta : float, optional
        Half-width of the trusted lift window (0, beta].  Defaults to
        ``alpha_s``.
    alpha_s : float, optional
        Stall angle estimate.  Defaults to the sampled alpha that
        maximizes cl.
    label : str
        Identifier used in reports.
    clamp_cl : bool
        If true, cl evaluation outside the sampled range clamps instead
        of raising.
    """

    def __init__(self, alpha, cl, cd, *, beta=None, alpha_s=None, label="polar",
                 clamp_cl=False):
        alpha = np.asarray(alpha, dtype=float)
        cl = np.asarray(cl, dtype=float)
        cd = np.asarray(cd, dtype=float)
        if alpha.ndim != 1 or alpha.size < 2:
            raise ValidationError("polar needs at least two samples")
        if cl.shape != alpha.shape or cd.shape != alpha.shape:
            raise ValidationError("alpha, cl, cd must have matching lengths")
        dal = np.diff(alpha)
        if np.any(dal == 0.0):
            raise ValidationError("duplicate alpha abscissae in polar table")
        if np.any(dal < 0.0):
            raise ValidationError("polar samples must be sorted by alpha")
        if np.any(cd < 0.0):
            bad = alpha[np.argmin(cd)]
            raise ValidationError(f"negative drag coefficient at alpha={bad:g}")

        self._alpha = alpha
        self._cl = cl
        self._cd = cd
        self.label = label
        self.clamp_cl = bool(clamp_cl)

        if alpha_s is None:
            alpha_s = float(alpha[int(np.argmax(cl))])
        if not 0.0 < alpha_s < math.pi / 2.0:
            raise ValidationError(
                f"stall angle estimate {alpha_s:g} outside (0, pi/2); pass alpha_s explicitly")
        self.alpha_s = float(alpha_s)

        if beta is None:
            beta = self.alpha_s
        if not 0.0 < beta <= self.alpha_s:
            raise ValidationError(f"beta={beta:g} must satisfy 0 < beta <= alpha_s={self.alpha_s:g}")
        self.beta = float(beta)

        window = (alpha > 0.0) & (alpha <= self.beta)
        if np.any(cl[window] <= 0.0):
            bad = alpha[window][cl[window] <= 0.0][0]
            raise ValidationError(f"cl must be positive on (0, beta]; cl(alpha={bad:g}) <= 0")

        if alpha.size >= 4:
            self._cl_f = PchipInterpolator(alpha, cl, extrapolate=False)
            self._cd_f = PchipInterpolator(alpha, cd, extrapolate=False)
            self._cl_df = self._cl_f.derivative()
            self._cd_df = self._cd_f.derivative()
        else:
            lin_cl = _LinearInterp(alpha, cl)
            lin_cd = _LinearInterp(alpha, cd)
            self._cl_f, self._cl_df = lin_cl, lin_cl.derivative()
            self._cd_f, self._cd_df = lin_cd, lin_cd.derivative()

    # -- basic accessors -------------------------------------------------

    @property
    def samples(self):
        return tuple(PolarSample(float(a), float(l), float(d))
                     for a, l, d in zip(self._alpha, self._cl, self._cd))

    @property
    def alpha_min(self):
        return float(self._alpha[0])

    @property
    def alpha_max(self):
        return float(self._alpha[-1])

    def __repr__(self):
        return (f"PolarTable({self.label!r}, n={self._alpha.size}, "
                f"alpha=[{self.alpha_min:g}, {self.alpha_max:g}], "
                f"beta={self.beta:g}, alpha_s={self.alpha_s:g})")

    # -- evaluation ------------------------------------------------------

    def _check_cl_domain(self, alpha):
        arr = np.asarray(alpha, dtype=float)
        if np.any(arr < self._alpha[0]) or np.any(arr > self._alpha[-1]):
            raise DomainError(
                f"cl evaluation outside sampled range [{self.alpha_min:g}, {self.alpha_max:g}]")

    def cl(self, alpha):
        """Lift coefficient at angle of attack ``alpha`` (rad)."""
        if self.clamp_cl:
            alpha = np.clip(alpha, self._alpha[0], self._alpha[-1])
        else:
            self._check_cl_domain(alpha)
        out = self._cl_f(alpha)
        return float(out) if np.isscalar(alpha) or np.ndim(alpha) == 0 else out

    def cl_prime(self, alpha):
        """Derivative dcl/dalpha of the interpolant."""
        if self.clamp_cl:
            alpha = np.clip(alpha, self._alpha[0], self._alpha[-1])
        else:
            self._check_cl_domain(alpha)
        out = self._cl_df(alpha)
        return float(out) if np.isscalar(alpha) or np.ndim(alpha) == 0 else out

    def cd(self, alpha):
        """Drag coefficient; clamped to the nearest sample outside the range."""
        clipped = np.clip(alpha, self._alpha[0], self._alpha[-1])
        out = self._cd_f(clipped)
        return float(out) if np.isscalar(alpha) or np.ndim(alpha) == 0 else out

    def cd_prime(self, alpha):
        """Derivative dcd/dalpha; zero outside the sampled range (clamping)."""
        arr = np.asarray(alpha, dtype=float)
        inside = (arr >= self._alpha[0]) & (arr <= self._alpha[-1])
        clipped = np.clip(arr, self._alpha[0], self._alpha[-1])
        out = np.where(inside, self._cd_df(clipped), 0.0)
        return float(out) if np.isscalar(alpha) or np.ndim(alpha) == 0 else out

    def glide_ratio(self, alpha):
        """cd(alpha)/cl(alpha); raises when cl vanishes."""
        lift = self.cl(alpha)
        if lift == 0.0:
            raise DomainError(f"cl vanishes at alpha={float(alpha):g}")
        return self.cd(alpha) / lift


def load_polar(source, *, beta=None, alpha_s=None, label=None, clamp_cl=False) -> PolarTable:
    """Load a polar from CSV text: columns alpha_rad,cl,cd.

    ``source`` may be a filesystem path or any object with ``read()``
    (e.g. ``sys.stdin``).  Comment lines start with '#'; a single header
    line is allowed.  At least four data rows are required.
    """
    if hasattr(source, "read"):
        text = source.read()
        name = label or getattr(source, "name", "polar")
    else:
        path = Path(source)
        text = path.read_text()
        name = label or path.stem
    if isinstance(text, bytes):
        text = text.decode("utf-8")

    rows = []
    header_allowed = True
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            values = tuple(float(p) for p in parts)
        except ValueError:
            if header_allowed:
                header_allowed = False  # one non-numeric header line is fine
                continue
            raise PolarFormatError(f"line {lineno}: cannot parse row {line!r}")
        header_allowed = False
        if len(values) != 3:
            raise PolarFormatError(f"line {lineno}: expected 3 columns, got {len(values)}")
        rows.append(values)

    if len(rows) < 4:
        raise PolarFormatError(f"need at least 4 data rows, got {len(rows)}")

    rows.sort(key=lambda rec: rec[0])
    alpha = [rec[0] for rec in rows]
    for prev, cur in zip(alpha, alpha[1:]):
        if cur == prev:
            raise ValidationError(f"duplicate alpha abscissa {cur:g}")
    return PolarTable(alpha, [rec[1] for rec in rows], [rec[2] for rec in rows],
                      beta=beta, alpha_s=alpha_s, label=name, clamp_cl=clamp_cl)


def best_glide_angle(polar: PolarTable, *, grid=2048, tol=1e-10) -> float:
    """Angle in (0, beta] minimizing cd/cl, by grid scan + golden section.

    Raises :class:`NoPositiveLiftError` when cl <= 0 on the whole window.
    """
    lo = min(polar.beta, polar.alpha_max) / grid
    hi = min(polar.beta, polar.alpha_max)
    alphas = np.linspace(lo, hi, grid)
    lift = np.array([polar.cl(a) for a in alphas])
    positive = lift > 0.0
    if not np.any(positive):
        raise NoPositiveLiftError(f"cl <= 0 everywhere on (0, {polar.beta:g}]")
    ratios = np.full(alphas.shape, np.inf)
    ratios[positive] = np.array([polar.cd(a) for a in alphas[positive]]) / lift[positive]
    k = int(np.argmin(ratios))

    a = alphas[max(k - 1, 0)]
    b = alphas[min(k + 1, grid - 1)]

    def ratio(x):
        lift = polar.cl(x)
        return polar.cd(x) / lift if lift > 0.0 else math.inf

    # golden-section refinement on the bracketing cell pair
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = ratio(x1), ratio(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = ratio(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = ratio(x2)
    best = 0.5 * (a + b)
    return float(best if ratio(best) <= ratios[k] else alphas[k])


def dump_polar(polar: PolarTable, target) -> None:
    """Write a polar back to CSV (alpha_rad,cl,cd) with round-trip floats."""
    lines = ["alpha_rad,cl,cd"]
    for s in polar.samples:
        lines.append(f"{s.alpha!r},{s.cl!r},{s.cd!r}")
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)


def synthetic_polar(kind, **params) -> PolarTable:
    """Analytically defined tables used by tests and demos.

    Kinds:
      * ``linear_lift``: cl = slope*alpha, cd = cd0 + cd2*alpha**2.
      * ``linear_lift_with_stall``: linear up to ``alpha_s``, then a
        linear drop of fraction ``drop`` over ``transition``, constant
        beyond; mirrored for negative alpha.
      * ``constant``: cl = level everywhere, same drag law.
    """
    span = float(params.pop("span", 1.2))
    n = int(params.pop("n", 161))
    cd0 = float(params.pop("cd0", 0.01))
    cd2 = float(params.pop("cd2", 0.0))
    label = params.pop("label", kind)
    beta = params.pop("beta", None)
    if span <= 0.0 or n < 4:
        raise ValidationError("span must be positive and n >= 4")

    alphas = np.linspace(-span, span, n)

    if kind == "linear_lift":
        slope = float(params.pop("slope", 2.0 * math.pi))
        if slope <= 0.0:
            raise ValidationError("linear_lift needs slope > 0")
        _reject_extra(params)
        cl = slope * alphas
        alpha_s = span  # monotone lift: treat the window edge as the stall estimate
        if alpha_s >= math.pi / 2.0:
            raise ValidationError("span must stay below pi/2 for linear_lift")
    elif kind == "linear_lift_with_stall":
        slope = float(params.pop("slope", 2.0 * math.pi))
        alpha_s = float(params.pop("alpha_s", 0.3))
        drop = float(params.pop("drop", 0.5))
        transition = float(params.pop("transition", 0.05))
        _reject_extra(params)
        if not 0.0 < alpha_s < span or not 0.0 <= drop < 1.0 or transition <= 0.0:
            raise ValidationError("inconsistent stall parameters")
        breaks = np.array([alpha_s, alpha_s + transition])
        alphas = np.union1d(alphas, np.concatenate([breaks, -breaks]))

        def cl_of(a):
            mag, sign = abs(a), math.copysign(1.0, a)
            if mag <= alpha_s:
                return slope * a
            peak = slope * alpha_s
            frac = min(1.0, (mag - alpha_s) / transition)
            return sign * peak * (1.0 - drop * frac)

        cl = np.array([cl_of(a) for a in alphas])
    elif kind == "constant":
        level = float(params.pop("level", 1.0))
        alpha_s = float(params.pop("alpha_s", 0.75 * span))
        _reject_extra(params)
        if level <= 0.0:
            raise ValidationError("constant polar needs level > 0")
        cl = np.full(alphas.shape, level)
    else:
        raise ValidationError(f"unknown synthetic polar kind {kind!r}")

    cd = cd0 + cd2 * alphas ** 2
    if np.any(cd < 0.0):
        raise ValidationError("drag law goes negative; adjust cd0/cd2")
    return PolarTable(alphas, cl, cd, beta=beta, alpha_s=alpha_s, label=label)


def _reject_extra(params):
    if params:
        raise ValidationError(f"unknown synthetic polar parameters: {sorted(params)}")
