"""Initial-data profiles for shock-front problems.

A profile on ``[sigma0, inf)`` is an affine function plus a *deviation* that
decays (or vanishes) at infinity.  The deviation is attached either to the
value (``level=0``) or to the derivative (``level=1``, the natural way to
perturb the initial stretch).  Keeping the affine part separate lets the wave
solver evaluate differences of large affine values exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, ValidationError
from .material import NondimensionalParams
from .quadrature import CumulativeIntegral

__all__ = [
    "Perturbation",
    "ZeroPerturbation",
    "RationalBump",
    "CompactBump",
    "TabulatedPerturbation",
    "PerturbationKind",
    "PerturbationSpec",
    "Profile",
    "TailSpec",
    "InitialData",
    "ValidationFailure",
    "ValidationReport",
    "make_constant_stretch_data",
    "validate",
    "weighted_norm_B",
    "sigma1_infinity",
    "sup_grid",
]

PER_DECADE = 64
DEFAULT_MARGIN = 1e-9
# how far past sigma0 (relative) the sup-norm grid reaches for slowly decaying tails
FAR_FACTOR = 1e6


# --------------------------------------------------------------------------- #
# perturbation families
# --------------------------------------------------------------------------- #

class Perturbation:
    """Smooth function on the real line that vanishes or decays at infinity."""

    decay_order = math.inf
    support = None  # (lo, hi) when compactly supported

    def value(self, s):
        raise NotImplementedError

    def deriv(self, s):
        raise NotImplementedError

    def deriv2(self, s):
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0

    @property
    def extent(self) -> float:
        """Right-most characteristic point; the function is small beyond it."""
        raise NotImplementedError

    def features(self) -> np.ndarray:
        """Points where the shape changes character (centers, edges)."""
        return np.array([])

    def tail_bound(self, x: float) -> float:
        """Upper bound for ``|value(y)|`` over ``y >= x``."""
        raise NotImplementedError

    def deriv_tail_bound(self, x: float) -> float:
        """Upper bound for ``|deriv(y)|`` over ``y >= x``."""
        raise NotImplementedError

    def weighted_deriv_limit(self, power: float) -> float:
        """``lim_{y->inf} y**power * |deriv(y)|``."""
        return 0.0

    def scaled(self, lam: float) -> "Perturbation":
        raise NotImplementedError


class ZeroPerturbation(Perturbation):
    amplitude = 0.0

    def value(self, s):
        return np.zeros_like(np.asarray(s, dtype=float)) + 0.0

    deriv = deriv2 = value

    @property
    def extent(self):
        return 0.0

    def tail_bound(self, x):
        return 0.0

    deriv_tail_bound = tail_bound

    def scaled(self, lam):
        return self

    def __repr__(self):
        return "ZeroPerturbation()"


ZERO = ZeroPerturbation()


@dataclass(frozen=True)
class RationalBump(Perturbation):
    """``a * (1 + ((s - c)/w)**2) ** (-q/2)``; decays like ``s**-q``."""

    amplitude: float
    center: float
    width: float = 1.0
    order: float = 2.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")
        if not self.order > 0:
            raise ValueError("decay order must be positive")

    @property
    def decay_order(self):
        return self.order

    def _u(self, s):
        return (np.asarray(s, dtype=float) - self.center) / self.width

    def value(self, s):
        u = self._u(s)
        return self.amplitude * (1.0 + u * u) ** (-0.5 * self.order)

    def deriv(self, s):
        u = self._u(s)
        q = self.order
        return -self.amplitude * q * u * (1.0 + u * u) ** (-0.5 * q - 1.0) / self.width

    def deriv2(self, s):
        u = self._u(s)
        q = self.order
        return (-self.amplitude * q / self.width**2
                * (1.0 + u * u) ** (-0.5 * q - 2.0) * (1.0 - (q + 1.0) * u * u))

    @property
    def extent(self):
        return self.center + self.width

    def features(self):
        w = self.width
        return self.center + w * np.array([-1.0, -0.5, 0.0, 0.5, 1.0])

    def tail_bound(self, x):
        if x <= self.center:
            return abs(self.amplitude)
        return float(abs(self.value(x)))

    def deriv_tail_bound(self, x):
        u_star = 1.0 / math.sqrt(self.order + 1.0)
        peak = self.center + self.width * u_star
        if x <= peak:
            return float(abs(self.deriv(peak)))
        return float(abs(self.deriv(x)))

    def weighted_deriv_limit(self, power):
        q = self.order
        if self.amplitude == 0:
            return 0.0
        if power < q + 1:
            return 0.0
        if power > q + 1:
            return math.inf
        return abs(self.amplitude) * q * self.width**q

    def scaled(self, lam):
        return RationalBump(self.amplitude * lam, self.center, self.width, self.order)


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x * x)


def _smoothstep_d1(x):
    x = np.clip(x, 0.0, 1.0)
    return 30.0 * x * x * (1.0 - x) ** 2


def _smoothstep_d2(x):
    x = np.clip(x, 0.0, 1.0)
    return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)


@dataclass(frozen=True)
class CompactBump(Perturbation):
    """C^2 bump supported on ``[center - half_width, center + half_width]``.

    Equal to ``amplitude`` on ``[center - plateau, center + plateau]`` and
    joined to zero by quintic smoothstep ramps.  ``plateau = 0`` gives a
    single peak of height ``amplitude`` at ``center``.
    """

    amplitude: float
    center: float
    half_width: float
    plateau: float = 0.0

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if not 0 <= self.plateau < self.half_width:
            raise ValueError("plateau must satisfy 0 <= plateau < half_width")

    @property
    def support(self):
        return (self.center - self.half_width, self.center + self.half_width)

    @property
    def ramp(self):
        return self.half_width - self.plateau

    def _coords(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.support
        xl = (s - lo) / self.ramp
        xr = (hi - s) / self.ramp
        left = s < self.center - self.plateau
        right = s > self.center + self.plateau
        return s, xl, xr, left, right

    def value(self, s):
        s, xl, xr, left, right = self._coords(s)
        out = np.where(left, _smoothstep(xl), np.where(right, _smoothstep(xr), 1.0))
        return self.amplitude * out

    def deriv(self, s):
        s, xl, xr, left, right = self._coords(s)
        out = np.where(left, _smoothstep_d1(xl), np.where(right, -_smoothstep_d1(xr), 0.0))
        return self.amplitude * out / self.ramp

    def deriv2(self, s):
        s, xl, xr, left, right = self._coords(s)
        out = np.where(left, _smoothstep_d2(xl), np.where(right, _smoothstep_d2(xr), 0.0))
        return self.amplitude * out / self.ramp**2

    @property
    def extent(self):
        return self.support[1]

    def features(self):
        lo, hi = self.support
        c, p = self.center, self.plateau
        return np.unique(np.array([lo, 0.5 * (lo + c - p), c - p, c, c + p, 0.5 * (hi + c + p), hi]))

    def tail_bound(self, x):
        return 0.0 if x >= self.support[1] else abs(self.amplitude)

    def deriv_tail_bound(self, x):
        return 0.0 if x >= self.support[1] else 1.875 * abs(self.amplitude) / self.ramp

    def scaled(self, lam):
        return CompactBump(self.amplitude * lam, self.center, self.half_width, self.plateau)


class TabulatedPerturbation(Perturbation):
    """Cubic-spline deviation through samples; identically zero past the last sample.

    The spline is clamped to zero slope at the right end so it joins the zero
    tail with a continuous derivative.  Coefficients are computed once.
    """

    def __init__(self, s, values, scale=1.0):
        s = np.asarray(s, dtype=float)
        values = np.asarray(values, dtype=float)
        if s.ndim != 1 or s.shape != values.shape or len(s) < 4:
            raise ValueError("need at least four (s, value) samples")
        if np.any(np.diff(s) <= 0):
            raise ValueError("tabulated s must be strictly increasing")
        self.s = s
        self.samples = values
        self.scale = float(scale)
        self._spline = CubicSpline(s, values * scale, bc_type=("not-a-knot", (1, 0.0)))
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)
        self.amplitude = float(np.max(np.abs(values)) * scale)
        self.end_mismatch = float(abs(values[-1] * scale))

    @property
    def support(self):
        return (self.s[0], self.s[-1])

    def _eval(self, fn, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= self.s[-1], 0.0, fn(np.minimum(s, self.s[-1])))

    def value(self, s):
        return self._eval(self._spline, s)

    def deriv(self, s):
        return self._eval(self._d1, s)

    def deriv2(self, s):
        return self._eval(self._d2, s)

    @property
    def extent(self):
        return float(self.s[-1])

    def features(self):
        return self.s[:: max(1, len(self.s) // 64)]

    def tail_bound(self, x):
        if x >= self.s[-1]:
            return 0.0
        grid = self.s[self.s >= x]
        return float(max(self.amplitude, np.max(np.abs(self.value(grid)), initial=0.0)))

    def deriv_tail_bound(self, x):
        if x >= self.s[-1]:
            return 0.0
        dense = np.linspace(max(x, self.s[0]), self.s[-1], 8 * len(self.s))
        return float(1.05 * np.max(np.abs(self.deriv(dense))))

    def scaled(self, lam):
        return TabulatedPerturbation(self.s, self.samples, self.scale * lam)

    def __repr__(self):
        return f"TabulatedPerturbation(n={len(self.s)}, support={self.support})"


class PerturbationKind(str, Enum):
    NONE = "none"
    RATIONAL_BUMP = "rational_bump"
    COMPACT_BUMP = "compact_bump"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class PerturbationSpec:
    """Declarative description of a perturbation, as read from a run configuration.

    ``width`` is the half-width for compact bumps and the length scale for
    rational bumps.  Tabulated perturbations take ``table`` (a path to a
    two-column ``s value`` text file or an ``(s, value)`` array pair).
    """

    kind: PerturbationKind = PerturbationKind.NONE
    amplitude: float = 0.0
    center: float = 0.0
    width: float = 1.0
    order: float = 2.0
    plateau: float = 0.0
    table: object = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PerturbationKind(self.kind))

    def build(self) -> Perturbation:
        if self.kind is PerturbationKind.NONE:
            return ZERO
        if self.kind is PerturbationKind.RATIONAL_BUMP:
            return RationalBump(self.amplitude, self.center, self.width, self.order)
        if self.kind is PerturbationKind.COMPACT_BUMP:
            return CompactBump(self.amplitude, self.center, self.width, self.plateau)
        s, v = load_table(self.table)
        return TabulatedPerturbation(s, v, scale=self.amplitude if self.amplitude else 1.0)


def load_table(table):
    """Read a two-column numeric table from a path, or pass through an array pair."""
    if isinstance(table, (str, Path)):
        arr = np.loadtxt(table, dtype=float, ndmin=2)
        if arr.shape[1] != 2:
            raise ValueError(f"{table}: expected two columns, found {arr.shape[1]}")
        return arr[:, 0], arr[:, 1]
    s, v = table
    return np.asarray(s, dtype=float), np.asarray(v, dtype=float)


def _as_perturbation(p) -> Perturbation:
    if p is None:
        return ZERO
    if isinstance(p, PerturbationSpec):
        return p.build()
    return p


# --------------------------------------------------------------------------- #
# profiles
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class TailSpec:
    """Asymptotic form ``intercept + slope * s`` plus a deviation of the given decay order."""

    intercept: float
    slope: float
    decay_order: float


@dataclass(frozen=True, eq=False)
class Profile:
    """Affine function plus a decaying deviation on ``[anchor, inf)``.

    With ``level=0`` the deviation is added to the value; with ``level=1`` it
    is added to the derivative and the value carries its running integral.
    """

    anchor: float
    anchor_value: float
    slope: float
    perturbation: Perturbation = ZERO
    level: int = 0
    _cumulative: Optional[CumulativeIntegral] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.level not in (0, 1):
            raise ValueError("level must be 0 or 1")
        if self.level == 1 and not self.perturbation.is_zero:
            p = self.perturbation
            support = p.support
            cum = CumulativeIntegral(
                p.value, self.anchor, FAR_FACTOR * max(1.0, self.anchor, p.extent),
                breakpoints=p.features(),
                vanishes_beyond=None if support is None else support[1],
            )
            object.__setattr__(self, "_cumulative", cum)

    # -- affine / deviation split ------------------------------------------ #
    @property
    def domain_start(self) -> float:
        return self.anchor

    @property
    def tail(self) -> TailSpec:
        return TailSpec(
            intercept=self.anchor_value - self.slope * self.anchor + self.dev_limit,
            slope=self.slope,
            decay_order=self.perturbation.decay_order - self.level,
        )

    def affine(self, s):
        return self.anchor_value + self.slope * (np.asarray(s, dtype=float) - self.anchor)

    def dev(self, s):
        """``value - affine``."""
        if self.perturbation.is_zero:
            return np.zeros_like(np.asarray(s, dtype=float))
        if self.level == 0:
            return self.perturbation.value(s)
        return self._cumulative(s)

    def dev1(self, s):
        """``deriv - slope``."""
        p = self.perturbation
        return p.value(s) if self.level == 1 else p.deriv(s)

    def dev2(self, s):
        p = self.perturbation
        return p.deriv(s) if self.level == 1 else p.deriv2(s)

    @property
    def dev_limit(self) -> float:
        """Limit of ``dev`` at infinity (non-zero only for derivative-level deviations)."""
        if self.perturbation.is_zero or self.level == 0:
            return 0.0
        p = self.perturbation
        if p.support is not None:
            return float(self._cumulative(p.support[1]))
        if p.decay_order <= 1:
            return math.nan
        return float(self._cumulative(self._cumulative.knots[-1]))

    def dev1_tail_bound(self, x: float) -> float:
        p = self.perturbation
        return p.tail_bound(x) if self.level == 1 else p.deriv_tail_bound(x)

    def dev_tail_bound(self, x: float) -> float:
        if self.level != 0:
            raise DomainError("value tail bound only defined for value-level deviations")
        return self.perturbation.tail_bound(x)

    # -- evaluation --------------------------------------------------------- #
    def __call__(self, s):
        return self.affine(s) + self.dev(s)

    value = __call__

    def deriv(self, s):
        return self.slope + self.dev1(s)

    def deriv2(self, s):
        return 0.0 + self.dev2(s)

    def features(self) -> np.ndarray:
        return self.perturbation.features()

    def scaled(self, lam: float) -> "Profile":
        return Profile(self.anchor, self.anchor_value, self.slope,
                       self.perturbation.scaled(lam), self.level)

    def shifted(self, c: float) -> "Profile":
        return Profile(self.anchor, self.anchor_value + c, self.slope, self.perturbation, self.level)


# --------------------------------------------------------------------------- #
# initial data
# --------------------------------------------------------------------------- #

@dataclass(frozen=True, eq=False)
class InitialData:
    """Shock-front initial data: position and velocity profiles on ``[sigma0, inf)``.

    On ``[0, sigma0]`` the data are the inextensible extension: position
    ``nu1 * s``, zero velocity and the constant tension fixed by the jump
    condition.  ``reference_sigma1`` is the front speed of the reference
    constant-stretch motion used in weighted norms; it defaults to the speed
    derived from the profiles.
    """

    chi0: Profile
    chi1: Profile
    sigma0: float
    params: NondimensionalParams
    reference_sigma1: Optional[float] = None

    @property
    def N0_plus(self) -> float:
        return float(self.chi0.deriv(self.sigma0)) - self.params.offset

    @property
    def chit0_plus(self) -> float:
        return float(self.chi1(self.sigma0))

    @property
    def sigma1(self) -> float:
        return self.chit0_plus / (self.params.N1 - self.N0_plus)

    @property
    def N0_minus(self) -> float:
        N = self.N0_plus
        return N + self.sigma1**2 * (self.params.N1 - N)

    @property
    def base_sigma1(self) -> float:
        return self.sigma1 if self.reference_sigma1 is None else self.reference_sigma1

    @property
    def perturbations(self):
        return [p for p in (self.chi0.perturbation, self.chi1.perturbation) if not p.is_zero]

    @property
    def extent(self) -> float:
        """Right-most feature over both profiles (0 if unperturbed)."""
        return max([p.extent for p in self.perturbations], default=0.0)

    @property
    def compactly_perturbed(self) -> bool:
        return all(p.support is not None for p in self.perturbations)

    def chi0_full(self, s):
        s = np.asarray(s, dtype=float)
        inside = s <= self.sigma0
        out = np.where(inside, self.params.nu1 * s, self.chi0(np.maximum(s, self.sigma0)))
        return float(out) if out.ndim == 0 else out

    def chi1_full(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where(s <= self.sigma0, 0.0, self.chi1(np.maximum(s, self.sigma0)))
        return float(out) if out.ndim == 0 else out

    def N0_full(self, s):
        s = np.asarray(s, dtype=float)
        ext = self.chi0.deriv(np.maximum(s, self.sigma0)) - self.params.offset
        out = np.where(s <= self.sigma0, self.N0_minus, ext)
        return float(out) if out.ndim == 0 else out

    def scaled(self, lam: float) -> "InitialData":
        """Same data with both perturbation amplitudes multiplied by ``lam``."""
        return InitialData(self.chi0.scaled(lam), self.chi1.scaled(lam), self.sigma0,
                           self.params, self.reference_sigma1)


@dataclass
class ValidationFailure:
    item: int
    condition: str
    s: Optional[float]
    value: Optional[float]
    message: str


@dataclass
class ValidationReport:
    passed: bool
    sigma1: float
    N0_plus: float
    failures: list
    notes: list

    def __bool__(self):
        return self.passed


def sup_grid(start: float, stop: float, features=(), per_decade: int = PER_DECADE,
             uniform: int = 0, uniform_stop: float = None) -> np.ndarray:
    """Sampling grid on ``[start, stop]``: geometric in ``1 + (s - start)``,
    plus optional uniform points and the given feature points."""
    from .quadrature import geometric_knots

    pts = [geometric_knots(start, stop, per_decade)]
    if uniform:
        pts.append(np.linspace(start, min(stop, uniform_stop or stop), uniform))
    feats = np.asarray(list(features), dtype=float)
    if feats.size:
        pts.append(feats[(feats >= start) & (feats <= stop)])
    return np.unique(np.concatenate(pts))


def _validation_grid(data: InitialData):
    s0 = data.sigma0
    extent = max(data.extent, s0)
    stop = 10.0 * extent + 10.0
    feats = np.concatenate([p.features() for p in data.perturbations]) if data.perturbations else []
    dense = []
    for p in data.perturbations:
        f = p.features()
        if f.size > 1:
            dense.append(np.linspace(f.min(), f.max(), 2049))
    grid = sup_grid(s0, stop, np.concatenate([np.ravel(feats)] + dense) if dense else feats,
                    uniform=1025, uniform_stop=2.0 * extent)
    return grid, stop


def validate(data: InitialData, margin: float = DEFAULT_MARGIN) -> ValidationReport:
    """Check every shock-front data condition; never raises.

    Conditions are numbered 1-5: regularity, tension band on the extensible
    segment, far-field and front-continuity values, supersonic initial front
    speed, and the inextensible extension.
    """
    prm = data.params
    s0 = data.sigma0
    failures = []
    notes = []

    grid, stop = _validation_grid(data)
    N0 = data.chi0.deriv(grid) - prm.offset
    chi1 = data.chi1(grid)

    # 1: regularity (finite values of every evaluated derivative)
    vals = [N0, chi1, data.chi0.deriv2(grid), data.chi1.deriv(grid)]
    bad = ~np.all(np.isfinite(np.vstack(vals)), axis=0)
    if np.any(bad):
        i = int(np.argmax(bad))
        failures.append(ValidationFailure(1, "regularity", float(grid[i]), None,
                                          "non-finite profile value"))

    # 2: eta < N0 < N1 on [sigma0, inf)
    hi = np.nonzero(N0 >= prm.N1 - margin)[0]
    if hi.size:
        i = hi[np.argmax(N0[hi])]
        failures.append(ValidationFailure(2, "tension_band", float(grid[i]), float(N0[i]),
                                          f"tension reaches the inextensibility threshold N1={prm.N1}"))
    lo = np.nonzero(N0 <= prm.eta + margin)[0]
    if lo.size:
        i = lo[np.argmin(N0[lo])]
        failures.append(ValidationFailure(2, "tension_band", float(grid[i]), float(N0[i]),
                                          f"tension falls to the lower bound eta={prm.eta}"))
    far = data.chi0.dev1_tail_bound(stop)
    tail_tension = data.chi0.slope - prm.offset
    if not (prm.eta + margin < tail_tension - far and tail_tension + far < prm.N1 - margin):
        failures.append(ValidationFailure(2, "tension_band", math.inf, tail_tension,
                                          "far-field tension not strictly inside (eta, N1)"))

    # 3: far-field slopes and front continuity
    if abs(tail_tension - prm.tau) > 1e-12 * max(1.0, prm.tau):
        failures.append(ValidationFailure(3, "far_field", math.inf, tail_tension,
                                          f"initial stretch at infinity must give tension tau={prm.tau}"))
    if abs(data.chi1.slope - prm.zeta) > 1e-12 * max(1.0, prm.zeta):
        failures.append(ValidationFailure(3, "far_field", math.inf, data.chi1.slope,
                                          f"velocity slope at infinity must equal zeta={prm.zeta}"))
    chi0_s0 = float(data.chi0(s0))
    if abs(chi0_s0 - prm.nu1 * s0) > 1e-12 * max(1.0, prm.nu1 * s0):
        failures.append(ValidationFailure(3, "front_continuity", s0, chi0_s0,
                                          f"position at the front must equal nu1*sigma0={prm.nu1 * s0}"))

    # 4: supersonic initial front
    N0p = data.N0_plus
    sigma1 = data.sigma1 if N0p < prm.N1 else math.inf
    if not sigma1 > 1 + margin:
        failures.append(ValidationFailure(4, "lax_speed", s0, sigma1,
                                          "initial front speed must exceed the wave speed 1"))

    # 5: inextensible extension carries tension above N1
    if N0p < prm.N1 and not data.N0_minus > prm.N1:
        failures.append(ValidationFailure(5, "inextensible_extension", s0, data.N0_minus,
                                          "tension behind the front must exceed N1"))

    if any(isinstance(p, TabulatedPerturbation) for p in data.perturbations):
        notes.append("front uniqueness checked on the sample grid only")
        for p in data.perturbations:
            if isinstance(p, TabulatedPerturbation) and p.end_mismatch > 1e-9:
                notes.append(f"tabulated deviation does not vanish at its last sample ({p.end_mismatch:.3e})")

    return ValidationReport(passed=not failures, sigma1=sigma1, N0_plus=N0p,
                            failures=failures, notes=notes)


def make_constant_stretch_data(params: NondimensionalParams, sigma0: float, sigma1: float,
                               perturbation0=None, perturbation1=None,
                               check: bool = True, margin: float = DEFAULT_MARGIN) -> InitialData:
    """Constant-stretch shock data plus optional perturbations.

    ``perturbation0`` perturbs the initial stretch ``chi0'``; ``perturbation1``
    perturbs the initial velocity ``chi1``.  Raises :class:`ValidationError`
    naming the violated condition when ``check`` is set.
    """
    if not sigma0 > 0:
        raise ValueError("sigma0 must be positive")
    p0 = _as_perturbation(perturbation0)
    p1 = _as_perturbation(perturbation1)
    chi0 = Profile(sigma0, params.nu1 * sigma0, params.tau + params.offset, p0, level=1)
    chi1 = Profile(sigma0, sigma1 * (params.N1 - params.tau), params.zeta, p1, level=0)
    data = InitialData(chi0, chi1, sigma0, params, reference_sigma1=sigma1)
    if check:
        report = validate(data, margin)
        if not report.passed:
            first = report.failures[0]
            raise ValidationError(
                f"condition {first.item} ({first.condition}) violated at s={first.s}: {first.message}",
                report.failures,
            )
    return data


# --------------------------------------------------------------------------- #
# weighted norm and limiting front speed
# --------------------------------------------------------------------------- #

class WeightPower(str, Enum):
    R_PLUS_1 = "r_plus_1"
    R_PLUS_2 = "r_plus_2"


def _require_tail(data: InitialData):
    for prof in (data.chi0, data.chi1):
        if prof.tail is None or not np.isfinite(prof.slope):
            raise DomainError("profile has no declared tail")


def weighted_norm_B(data: InitialData, r: float, weight_power="r_plus_1") -> float:
    """Weighted sup-distance of the data from the constant-stretch family.

    Sums ``|chi0' - tau| + s**m |chi0''| + |chi1 - base| + s**m |chi1' - zeta|``
    with ``m = r + 1`` (``base`` constant) or ``m = r + 2`` (``base`` affine
    with slope ``zeta``), and takes the sup over ``[sigma0, inf)``: a
    geometric grid out to where the tails are resolved, plus the analytic
    limit of the sum at infinity.
    """
    _require_tail(data)
    wp = WeightPower(weight_power)
    m = r + (1.0 if wp is WeightPower.R_PLUS_1 else 2.0)
    prm = data.params
    s0 = data.sigma0
    base_c = data.base_sigma1 * (prm.N1 - prm.tau)

    c0, c1 = data.chi0, data.chi1
    # every term is assembled from the deviations plus exact affine mismatches;
    # subtracting the affine tails numerically would swamp the weighted terms
    slope1 = c1.slope - (prm.zeta if wp is WeightPower.R_PLUS_2 else 0.0)

    def chi1_dev(s):
        s = np.asarray(s, dtype=float)
        return (c1.anchor_value - base_c) + slope1 * (s - s0) + c1.slope * (s0 - c1.anchor) + c1.dev(s)

    def total(s):
        return (np.abs((c0.slope - prm.offset - prm.tau) + c0.dev1(s))
                + s**m * np.abs(c0.dev2(s))
                + np.abs(chi1_dev(s))
                + s**m * np.abs((c1.slope - prm.zeta) + c1.dev1(s)))

    if not data.perturbations:
        return float(np.max(total(np.array([s0, 2 * s0 + 1]))))

    feats = np.concatenate([p.features() for p in data.perturbations])
    dense = [np.linspace(f.min(), f.max(), 1025) for f in (p.features() for p in data.perturbations)
             if f.size > 1]
    extent = max(data.extent, s0)
    if data.compactly_perturbed:
        stop = extent
    else:
        stop = FAR_FACTOR * max(1.0, extent)
    grid = sup_grid(s0, stop, np.concatenate([feats] + dense), uniform=1025, uniform_stop=2 * extent)
    values = total(grid)
    best = float(np.max(values))
    if not data.compactly_perturbed:
        p0, p1 = data.chi0.perturbation, data.chi1.perturbation
        # at infinity only the weighted derivative terms survive
        lim = p0.weighted_deriv_limit(m) + p1.weighted_deriv_limit(m)
        # the velocity term tends to the offset between the data's and the reference speed
        lim += abs(data.chi1.anchor_value + data.chi1.dev_limit - base_c)
        best = max(best, lim)
    return best


def sigma1_infinity(data: InitialData) -> float:
    """Limiting front-speed parameter read from the velocity tail."""
    _require_tail(data)
    prm = data.params
    c1 = data.chi1
    # chi1(s) - zeta (s - sigma0) -> anchor value + slope mismatch * s + dev limit
    if abs(c1.slope - prm.zeta) > 1e-12 * max(1.0, prm.zeta):
        raise DomainError("velocity tail slope differs from zeta; limit is infinite")
    limit = c1.anchor_value + c1.slope * (data.sigma0 - c1.anchor) + c1.dev_limit
    return limit / (prm.N1 - prm.tau)
