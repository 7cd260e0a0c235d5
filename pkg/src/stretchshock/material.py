"""Material parameters and the stretch-limited constitutive relation.

Everything downstream of this module works in units where the mass density
and the stiffness are both one, so the extensible wave speed is one.  In the
default ``stretch_linear`` mode that also makes the tension threshold equal to
the maximal stretch.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import BelowLinearBandWarning, DomainError

__all__ = [
    "RelationMode",
    "MaterialParams",
    "NondimensionalParams",
    "stretch_from_tension",
    "nondimensionalize",
    "time_of_threshold",
]


class RelationMode(str, Enum):
    STRETCH_LINEAR = "stretch_linear"
    STRAIN_LINEAR = "strain_linear"


@dataclass(frozen=True)
class MaterialParams:
    """Dimensional description of a string and its end loading.

    Parameters
    ----------
    N1 : float
        Tension at which the string becomes inextensible.
    nu1 : float
        Maximal stretch, ``> 1``.
    eta : float
        Lower end of the linear constitutive band, ``0 <= eta < tau``.
    tau : float
        End tension at ``t = 0``.
    zeta : float
        Ramp rate of the end tension, ``>= 0``.
    gamma : float
        Mass per unit reference length.
    relation_mode : RelationMode
        Whether stretch (default) or strain is linear in tension.
    """

    N1: float
    nu1: float
    eta: float
    tau: float
    zeta: float = 0.0
    gamma: float = 1.0
    relation_mode: RelationMode = RelationMode.STRETCH_LINEAR

    def __post_init__(self):
        object.__setattr__(self, "relation_mode", RelationMode(self.relation_mode))
        if not self.nu1 > 1:
            raise ValueError(f"nu1 must exceed 1, got {self.nu1}")
        if not self.N1 > 0:
            raise ValueError(f"N1 must be positive, got {self.N1}")
        if not 0 <= self.eta < self.tau < self.N1:
            raise ValueError(
                f"need 0 <= eta < tau < N1, got eta={self.eta}, tau={self.tau}, N1={self.N1}"
            )
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.zeta >= 0:
            raise ValueError(f"zeta must be nonnegative, got {self.zeta}")

    @property
    def E(self) -> float:
        if self.relation_mode is RelationMode.STRETCH_LINEAR:
            return self.N1 / self.nu1
        return self.N1 / (self.nu1 - 1.0)

    @property
    def stretch_offset(self) -> float:
        """Stretch at zero tension on the linear branch (0 or 1)."""
        return 0.0 if self.relation_mode is RelationMode.STRETCH_LINEAR else 1.0


@dataclass(frozen=True)
class NondimensionalParams:
    """Parameters in units with ``gamma = E = 1``.

    ``offset`` is the stretch of the linear branch at zero tension, so that in
    the extensible region ``N = chi_s - offset``.  The scale factors record the
    force and time units so results can be mapped back.
    """

    N1: float
    nu1: float
    eta: float
    tau: float
    zeta: float = 0.0
    offset: float = 0.0
    force_unit: float = 1.0
    time_unit: float = 1.0
    length_unit: float = 1.0
    relation_mode: RelationMode = field(default=RelationMode.STRETCH_LINEAR)

    def __post_init__(self):
        object.__setattr__(self, "relation_mode", RelationMode(self.relation_mode))
        if not 0 <= self.eta < self.tau < self.N1:
            raise ValueError(
                f"need 0 <= eta < tau < N1, got eta={self.eta}, tau={self.tau}, N1={self.N1}"
            )
        if not self.zeta >= 0:
            raise ValueError(f"zeta must be nonnegative, got {self.zeta}")
        if abs(self.nu1 - self.offset - self.N1) > 1e-12 * max(1.0, self.N1):
            raise ValueError("nondimensional N1 must equal nu1 - offset")

    @classmethod
    def simple(cls, N1, tau, zeta=0.0, eta=None):
        """Stretch-linear parameters given directly in nondimensional form."""
        if eta is None:
            eta = 0.5 * tau
        return cls(N1=N1, nu1=N1, eta=eta, tau=tau, zeta=zeta)

    @property
    def T(self) -> float:
        return time_of_threshold(self)

    def to_dimensional(self, gamma: float = None) -> MaterialParams:
        """Invert :func:`nondimensionalize` using the recorded scale factors."""
        F, T = self.force_unit, self.time_unit
        E = F
        if gamma is None:
            # time_unit = length_unit * sqrt(gamma / E)
            gamma = E * (T / self.length_unit) ** 2
        return MaterialParams(
            N1=self.N1 * F,
            nu1=self.nu1,
            eta=self.eta * F,
            tau=self.tau * F,
            zeta=self.zeta * F / T,
            gamma=gamma,
            relation_mode=self.relation_mode,
        )


def stretch_from_tension(params: MaterialParams, N):
    """Stretch produced by tension ``N`` (dimensional, ``N > 0``).

    Tension below ``eta`` is evaluated by continuing the linear branch and
    raises :class:`BelowLinearBandWarning` instead of failing.
    """
    N_arr = np.asarray(N, dtype=float)
    if np.any(~(N_arr > 0)):
        raise DomainError("tension must be positive for a tensile configuration")
    if np.any(N_arr < params.eta):
        warnings.warn(
            f"tension below the linear band (eta={params.eta})",
            BelowLinearBandWarning,
            stacklevel=2,
        )
    E = params.E
    if params.relation_mode is RelationMode.STRETCH_LINEAR:
        out = np.minimum(N_arr / E, params.nu1)
        # N1/E can round away from nu1
        out = np.where(N_arr >= params.N1, params.nu1, out)
    else:
        out = 1.0 + np.minimum(N_arr / E, params.nu1 - 1.0)
        out = np.where(N_arr >= params.N1, params.nu1, out)
    return float(out) if np.ndim(out) == 0 else out


def nondimensionalize(params: MaterialParams) -> NondimensionalParams:
    """Rescale force by ``E`` and time by ``sqrt(gamma/E)``; length is kept."""
    E = params.E
    time_unit = math.sqrt(params.gamma / E)
    offset = params.stretch_offset
    return NondimensionalParams(
        # exact by construction rather than N1/E, which can differ in the last ulp
        N1=params.nu1 - offset,
        nu1=params.nu1,
        eta=params.eta / E,
        tau=params.tau / E,
        zeta=params.zeta * time_unit / E,
        offset=offset,
        force_unit=E,
        time_unit=time_unit,
        length_unit=1.0,
        relation_mode=params.relation_mode,
    )


def time_of_threshold(params) -> float:
    """Time at which the end tension reaches ``N1``; ``inf`` when ``zeta == 0``."""
    if params.zeta == 0:
        return math.inf
    return (params.N1 - params.tau) / params.zeta
