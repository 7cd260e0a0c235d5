"""Closed-form piece-wise constant stretch motions and deviations from them.

For constant-stretch data the front solves a linear ODE explicitly:
``sigma = sigma0 + sigma1 (N1 - tau) t / (N1 - zeta t - tau)``.  These
motions are the exact references for the tracker and the attractors of
perturbed runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, UsageError
from .material import NondimensionalParams
from .monitor import TensionMonitor
from .profiles import make_constant_stretch_data
from .state import Region, StateSample
from .tracker import Trajectory

__all__ = [
    "OracleMotion",
    "oracle_front",
    "oracle_state",
    "ComparatorForm",
    "DeviationRecord",
    "asymptotic_deviation",
]


@dataclass(frozen=True)
class OracleMotion:
    sigma0: float
    sigma1: float
    params: NondimensionalParams

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if not self.sigma1 > 1:
            raise ValueError("sigma1 must exceed 1")

    @property
    def T(self):
        return self.params.T

    def initial_data(self, **kw):
        """The constant-stretch initial data generating this motion."""
        return make_constant_stretch_data(self.params, self.sigma0, self.sigma1, **kw)

    def gap(self, t):
        """``N1 - (zeta t + tau)``, the distance of the far-field tension from threshold."""
        p = self.params
        return (p.N1 - p.tau) - p.zeta * t

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t >= self.T):
            raise DomainError(f"oracle motion defined for 0 <= t < T = {self.T!r}")


def oracle_front(motion: OracleMotion, t):
    """``(sigma, sigma_prime)`` of the closed-form motion."""
    motion._check(t)
    p = motion.params
    D0 = p.N1 - p.tau
    D = motion.gap(np.asarray(t, dtype=float))
    c = motion.sigma1 * D0
    sigma = motion.sigma0 + c * t / D
    sp = c * D0 / (D * D)
    if np.ndim(sigma) == 0:
        return float(sigma), float(sp)
    return sigma, sp


def oracle_state(motion: OracleMotion, s: float, t: float) -> StateSample:
    """Exact state variables of the closed-form motion at ``(s, t)``."""
    motion._check(t)
    if s < 0:
        raise DomainError("material coordinate must be nonnegative")
    p = motion.params
    sigma, sp = oracle_front(motion, t)
    s0 = motion.sigma0
    c = motion.sigma1 * (p.N1 - p.tau)
    N_far = p.zeta * t + p.tau
    if s >= sigma:
        chi = p.nu1 * s0 + (N_far + p.offset) * (s - s0) + c * t
        chit = p.zeta * (s - s0) + c
        return StateSample(float(s), float(t), Region.EXTENSIBLE, float(chi), float(N_far + p.offset),
                           float(N_far), float(chit))
    A = p.zeta * (sigma - s0) + c
    N = N_far + A * A / motion.gap(t)
    return StateSample(float(s), float(t), Region.INEXTENSIBLE, p.nu1 * float(s), p.nu1, float(N), 0.0)


class ComparatorForm(str, Enum):
    ZETA_ZERO = "zeta0"
    ZETA_POSITIVE = "zetapos"


@dataclass(frozen=True)
class DeviationRecord:
    """Distances of a tracked state from a reference closed-form motion.

    ``weighted_second`` is the weighted sup of the second derivatives,
    ``state`` the sup of the first-derivative deviations ahead of the front,
    ``chit`` its velocity part alone, ``speed`` the relative shock-speed
    deviation and ``tension`` the relative deviation of the tension behind
    the front.
    """

    t: float
    sigma: float
    weighted_second: float
    state: float
    chit: float
    speed: float
    tension: float
    form: str

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("t", "sigma", "weighted_second", "state", "chit", "speed", "tension", "form")}


def asymptotic_deviation(traj: Trajectory, motion_ref: OracleMotion, t: float, r: float = 1.0,
                         form=None, refine: bool = True) -> DeviationRecord:
    """Deviation of ``traj`` at time ``t`` from ``motion_ref``.

    ``motion_ref`` should carry the limiting front speed of the data as its
    ``sigma1``.  The comparator form (``zeta0`` or ``zetapos``) follows from the
    parameters unless given, and must agree with them.  Ratios are formed
    from the profile deviations directly, so they stay accurate when the
    front speed and the tension behind it are enormous.
    """
    prm = traj.params
    auto = ComparatorForm.ZETA_ZERO if prm.zeta == 0 else ComparatorForm.ZETA_POSITIVE
    form = auto if form is None else ComparatorForm(form)
    if form is not auto:
        raise UsageError(f"comparator form {form.value!r} does not match zeta={prm.zeta!r}")
    if motion_ref.params != prm:
        raise UsageError("reference motion has different parameters from the trajectory")

    f = traj.field
    st = traj.front_at(t)
    sigma = st.sigma
    s0 = motion_ref.sigma0
    D = (prm.N1 - prm.tau) - prm.zeta * t
    c_inf = motion_ref.sigma1 * (prm.N1 - prm.tau)
    tau_t = prm.tau + prm.zeta * t
    # affine mismatch between the data's tails and the reference (zero for matched data)
    ds0 = (f.k0 - prm.offset - prm.tau) + (f.k1 - prm.zeta) * t

    def chit_dev(s):
        _, e_t = f.deviation(s, t)
        s = np.asarray(s, dtype=float)
        return (f.v1 - c_inf) + f.k1 * (s - f.anchor1) - prm.zeta * (s - s0) + e_t

    def chis_dev(s):
        return ds0 + f.deviation(s, t)[0]

    m = r + (1.0 if form is ComparatorForm.ZETA_ZERO else 2.0)

    def weighted(s):
        ss, st_ = f.eval_second(s, t)
        return np.asarray(s, dtype=float) ** m * (np.abs(ss) + np.abs(st_ - prm.zeta))

    mon = TensionMonitor(f, L=traj.options.monitor_L, per_decade=traj.options.per_decade)
    _, w2 = mon.maximize(weighted, sigma, t, refine)
    _, dstate = mon.maximize(lambda s: np.abs(chis_dev(s)) + np.abs(chit_dev(s)), sigma, t, refine)
    _, dchit = mon.maximize(lambda s: np.abs(chit_dev(s)), sigma, t, refine)

    # shock speed ratio:  1 + delta = (1 + et/A) / (1 - y),  y = e_s / D
    e_s = float(chis_dev(sigma))
    e_t = float(chit_dev(sigma))
    A = prm.zeta * (sigma - s0) + c_inf
    y = e_s / D
    delta = (e_t / A + y) / (1.0 - y)
    if form is ComparatorForm.ZETA_ZERO:
        # reference tension tau + sigma_inf^2 (N1 - tau)
        si = motion_ref.sigma1
        N_ref = prm.tau + si * si * D
        diff = e_s + si * si * (D * delta * (2.0 + delta) - (1.0 + delta) ** 2 * e_s)
        tension = diff / N_ref
    else:
        # reference tension A^2 / D
        tension = delta * (2.0 + delta) * (1.0 - y) - y + (tau_t + e_s) * D / (A * A)
    return DeviationRecord(float(t), float(sigma), float(w2), float(dstate), float(dchit),
                           float(abs(delta)), float(abs(tension)), form.value)
