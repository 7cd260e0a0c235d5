"""Shock-front tracking.

The front obeys ``sigma' = chi_t(sigma, t) / (N1 - N(sigma, t))`` with the
extensible field known exactly from the initial data, so tracking reduces to
a scalar ODE.  It is integrated with an embedded Dormand-Prince 5(4) pair;
after every accepted step the solution contract is checked and any violation
is located by bisection on the step's cubic Hermite interpolant.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .dalembert import WaveField
from .errors import ConstitutiveBreakdown, DomainError, InsufficientDataError, StepSizeUnderflow
from .fitting import fit_decay
from .monitor import TensionMonitor
from .profiles import InitialData

__all__ = [
    "Termination",
    "ShockState",
    "EventRecord",
    "TrackerOptions",
    "Trajectory",
    "ContinuationReport",
    "step_rhs",
    "front_traces",
    "integrate",
    "continuation_check",
]


class Termination(str, Enum):
    REACHED_HORIZON = "reached_horizon"
    LAX_FAILURE = "lax_failure"
    SECOND_SHOCK = "second_shock"
    TENSION_FLOOR = "tension_floor"
    THRESHOLD_TIME_REACHED = "threshold_time_reached"
    BLOW_UP_CERTIFIED = "blow_up_certified"

    @property
    def is_event(self) -> bool:
        return self in (Termination.LAX_FAILURE, Termination.SECOND_SHOCK, Termination.TENSION_FLOOR)


@dataclass(frozen=True)
class ShockState:
    t: float
    sigma: float
    sigma_prime: float
    N_plus: float
    chit_plus: float
    drift: float = 0.0
    sup_N: float = math.nan
    inf_N: float = math.nan


@dataclass(frozen=True)
class EventRecord:
    kind: str
    t: float
    sigma: float
    value: float
    location: Optional[float]
    bracket: float

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TrackerOptions:
    """Integrator and event settings.

    ``guard_rel`` sets the stopping distance ``guard_rel * T`` before the
    threshold time; ``blow_up_factor`` the radius ``blow_up_factor * sigma0``.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    margin: float = 1e-9
    blow_up_factor: float = 1e6
    guard_rel: float = 1e-9
    h_init: Optional[float] = None
    h_max: float = math.inf
    max_steps: int = 2_000_000
    event_tol: float = 1e-12
    monitor_L: Optional[float] = None
    per_decade: int = 64
    refine_monitor: bool = True


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def step_rhs(field: WaveField, t: float, sigma: float) -> float:
    """Front speed ``chi_t / (N1 - N)`` evaluated on the extensible side."""
    gap = float(field.gap(sigma, t))
    if not gap > 0:
        raise ConstitutiveBreakdown(f"tension at the front reached N1 at t={t!r}, sigma={sigma!r}")
    _, chi_t = field.derivs(sigma, t)
    return float(chi_t) / gap


def front_traces(field: WaveField, t: float, sigma: float):
    """``(sigma_prime, N_plus, chit_plus)`` at a front position."""
    e_s, e_t = field.deviation(sigma, t)
    a_s, a_t = field.affine_derivs(sigma, t)
    gap = float(field._gap0 - field.k1 * t - e_s)
    N_plus = float(a_s + e_s - field.params.offset)
    chit = float(a_t + e_t)
    if not gap > 0:
        raise ConstitutiveBreakdown(f"tension at the front reached N1 at t={t!r}, sigma={sigma!r}")
    return chit / gap, N_plus, chit


def _hermite(t0, y0, f0, t1, y1, f1, t):
    h = t1 - t0
    x = (t - t0) / h
    h00 = (1 + 2 * x) * (1 - x) ** 2
    h10 = x * (1 - x) ** 2
    h01 = x * x * (3 - 2 * x)
    h11 = x * x * (x - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


class Trajectory:
    """Accepted front states plus termination information."""

    def __init__(self, data: InitialData, field: WaveField, options: TrackerOptions):
        self.data = data
        self.params = data.params
        self.field = field
        self.options = options
        self.states: list = []
        self.termination: Optional[Termination] = None
        self.event: Optional[EventRecord] = None
        self.growth_law = None
        self.stats = {"accepted": 0, "rejected": 0, "rhs_evals": 0, "stage_failures": 0}
        self._arrays = None

    def _append(self, state: ShockState):
        self.states.append(state)
        self._arrays = None

    def _cols(self):
        if self._arrays is None:
            names = ("t", "sigma", "sigma_prime", "N_plus", "chit_plus", "drift", "sup_N", "inf_N")
            self._arrays = {n: np.array([getattr(s, n) for s in self.states]) for n in names}
        return self._arrays

    @property
    def t(self):
        return self._cols()["t"]

    @property
    def sigma(self):
        return self._cols()["sigma"]

    @property
    def sigma_prime(self):
        return self._cols()["sigma_prime"]

    @property
    def N_plus(self):
        return self._cols()["N_plus"]

    @property
    def chit_plus(self):
        return self._cols()["chit_plus"]

    @property
    def drift(self):
        return self._cols()["drift"]

    def __len__(self):
        return len(self.states)

    @property
    def final(self) -> ShockState:
        return self.states[-1]

    @property
    def t_range(self):
        return self.states[0].t, self.states[-1].t

    def _check_t(self, t):
        t0, t1 = self.t_range
        span = max(1.0, abs(t1))
        if not (t0 - 1e-14 * span <= t <= t1 + 1e-14 * span):
            raise DomainError(f"t={t!r} outside the trajectory range [{t0!r}, {t1!r}]")

    def sigma_at(self, t: float) -> float:
        """Cubic Hermite interpolation of the front through the stored speeds."""
        self._check_t(t)
        ts = self.t
        k = int(np.searchsorted(ts, t, side="right")) - 1
        k = min(max(k, 0), len(ts) - 2)
        if len(ts) == 1:
            return float(self.sigma[0])
        a, b = self.states[k], self.states[k + 1]
        return float(_hermite(a.t, a.sigma, a.sigma_prime, b.t, b.sigma, b.sigma_prime, min(max(t, a.t), b.t)))

    def front_at(self, t: float, refine: bool = True) -> ShockState:
        """Front state at ``t``.

        The interpolated position is corrected by Newton iterations on the
        continuity condition ``chi(sigma, t) = nu1 * sigma`` when ``refine`` is
        set; traces and speed are then evaluated from the exact field.
        """
        sigma = self.sigma_at(t)
        f = self.field
        nu1 = self.params.nu1
        if refine:
            for _ in range(3):
                gap = float(f.gap(sigma, t))
                step = (float(f.chi(sigma, t)) - nu1 * sigma) / gap
                sigma = sigma + step
                if abs(step) <= 1e-15 * max(1.0, abs(sigma)):
                    break
        sp, N_plus, chit = front_traces(f, t, sigma)
        drift = float(f.chi(sigma, t)) - nu1 * sigma
        return ShockState(t, sigma, sp, N_plus, chit, drift)

    def summary(self) -> dict:
        fin = self.final
        out = {
            "termination": self.termination.value if self.termination else None,
            "final": {"t": fin.t, "sigma": fin.sigma, "sigma_prime": fin.sigma_prime},
            "n_steps": len(self.states),
            "stats": dict(self.stats),
            "max_drift": float(np.max(np.abs(self.drift))),
            "min_lax_margin": float(np.min(self.sigma_prime) - 1.0),
        }
        out["event"] = self.event.as_dict() if self.event else None
        out["growth_law"] = self.growth_law
        return out


class _Integrator:
    def __init__(self, data, field, options):
        self.data = data
        self.field = field
        self.opt = options
        prm = data.params
        self.prm = prm
        self.monitor = TensionMonitor(field, L=options.monitor_L, per_decade=options.per_decade)
        T = prm.T
        self.T = T
        self.t_stop = T - options.guard_rel * T if math.isfinite(T) else math.inf
        self.R = options.blow_up_factor * data.sigma0
        self.n_rhs = 0

    def rhs(self, t, y):
        self.n_rhs += 1
        return step_rhs(self.field, t, y)

    # -- event functions: positive while the solution contract holds -------- #
    def state_and_events(self, t, y, refine):
        sp, N_plus, chit = front_traces(self.field, t, y)
        ext = self.monitor.extrema(y, t, refine=refine)
        prm, m = self.prm, self.opt.margin
        g = {
            Termination.LAX_FAILURE: (sp - (1.0 + m), y),
            Termination.SECOND_SHOCK: ((prm.N1 - m) - ext.sup_bound, ext.s_sup),
            Termination.TENSION_FLOOR: (ext.inf_bound - (prm.eta + m), ext.s_inf),
            Termination.BLOW_UP_CERTIFIED: (self.R - y, y),
        }
        return (sp, N_plus, chit, ext), g

    def project(self, t, y):
        """Newton-correct an interpolated front onto ``chi(sigma, t) = nu1 * sigma``.

        Dense output is only cubic, so event states are projected onto the
        continuity condition instead of being taken from the interpolant.
        """
        f, nu1 = self.field, self.prm.nu1
        for _ in range(4):
            step = (float(f.chi(y, t)) - nu1 * y) / float(f.gap(y, t))
            y = y + step
            if abs(step) <= 1e-15 * max(1.0, abs(y)):
                break
        return y

    def make_state(self, t, y, info):
        sp, N_plus, chit, ext = info
        drift = float(self.field.chi(y, t)) - self.prm.nu1 * y
        return ShockState(float(t), float(y), sp, N_plus, chit, drift, ext.sup_N, ext.inf_N)

    def initial_step(self, t0, y0, f0, t_end):
        if self.opt.h_init is not None:
            return self.opt.h_init
        sc = self.opt.atol + self.opt.rtol * abs(y0)
        d0, d1 = abs(y0) / sc, abs(f0) / sc
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, 0.1 * (t_end - t0) if math.isfinite(t_end) else h0)
        try:
            f1 = self.rhs(t0 + h0, y0 + h0 * f0)
            d2 = abs(f1 - f0) / sc / h0
        except (DomainError, ConstitutiveBreakdown):
            return 0.1 * h0
        h1 = (0.01 / max(d1, d2)) ** 0.2 if max(d1, d2) > 1e-15 else max(1e-6, 1e-3 * h0)
        return min(100 * h0, h1)

    def dp_step(self, t, y, f0, h):
        k = [f0]
        for i in range(1, 7):
            yi = y + h * sum(a * kk for a, kk in zip(_A[i], k))
            k.append(self.rhs(t + _C[i] * h, yi))
        y_new = y + h * sum(b * kk for b, kk in zip(_B, k))
        err = h * sum(e * kk for e, kk in zip(_E, k))
        return y_new, k[6], err

    def locate(self, kind, t0, y0, f0, t1, y1, f1):
        """Bisect the event function of ``kind`` on ``[t0, t1]``."""
        lo, hi = t0, t1
        g_hi = None
        tol = self.opt.event_tol
        while hi - lo > tol * max(1.0, abs(hi)):
            mid = 0.5 * (lo + hi)
            if not lo < mid < hi:
                break
            try:
                ym = self.project(mid, _hermite(t0, y0, f0, t1, y1, f1, mid))
                _, g = self.state_and_events(mid, ym, True)
                val = g[kind][0]
            except (DomainError, ConstitutiveBreakdown):
                val = -math.inf
            if val <= 0:
                hi, g_hi = mid, val
            else:
                lo = mid
        return hi, lo, g_hi

    def run(self, horizon, start=None) -> Trajectory:
        opt = self.opt
        traj = Trajectory(self.data, self.field, opt)
        t, y = (0.0, float(self.data.sigma0)) if start is None else (float(start[0]), float(start[1]))
        t_end = min(horizon, self.t_stop)
        if not t_end > t:
            raise ValueError(f"horizon {horizon!r} must exceed the start time {t!r}")
        hit_threshold = self.t_stop <= horizon

        f = self.rhs(t, y)
        info, g = self.state_and_events(t, y, opt.refine_monitor)
        traj._append(self.make_state(t, y, info))
        for kind, (val, loc) in g.items():
            if val <= 0:
                traj.termination = kind
                traj.event = EventRecord(kind.value, t, y, val, loc, 0.0)
                return self._finish(traj)

        h = self.initial_step(t, y, f, t_end)
        h_floor = 1e-15
        for _ in range(opt.max_steps):
            if t >= t_end:
                break
            h = min(h, opt.h_max)
            last = t + h >= t_end or t_end - (t + h) < 1e-12 * max(1.0, abs(t_end))
            if last:
                h = t_end - t
            try:
                y_new, f_new, err = self.dp_step(t, y, f, h)
            except (DomainError, ConstitutiveBreakdown):
                # a stage left the dependence domain or saturated: shrink and retry
                traj.stats["stage_failures"] += 1
                traj.stats["rejected"] += 1
                h *= 0.25
                if h < h_floor * max(1.0, abs(t)):
                    raise StepSizeUnderflow(f"step size underflow at t={t!r}", traj.final)
                continue
            sc = opt.atol + opt.rtol * max(abs(y), abs(y_new))
            errn = abs(err) / sc
            if not errn <= 1.0:
                traj.stats["rejected"] += 1
                h *= max(0.2, 0.9 * errn ** -0.2) if np.isfinite(errn) else 0.2
                if h < h_floor * max(1.0, abs(t)):
                    raise StepSizeUnderflow(f"step size underflow at t={t!r}", traj.final)
                continue

            t_new = t_end if last else t + h
            try:
                info, g = self.state_and_events(t_new, y_new, opt.refine_monitor)
            except ConstitutiveBreakdown:
                traj.stats["rejected"] += 1
                h *= 0.25
                continue
            fired = [kind for kind, (val, _) in g.items() if val <= 0]
            if fired:
                best = None
                for kind in fired:
                    t_hit, t_ok, val = self.locate(kind, t, y, f, t_new, y_new, f_new)
                    if best is None or t_hit < best[1]:
                        best = (kind, t_hit, t_ok, val)
                kind, t_hit, t_ok, val = best
                y_hit = self.project(t_hit, _hermite(t, y, f, t_new, y_new, f_new, t_hit))
                info_hit, g_hit = self.state_and_events(t_hit, y_hit, True)
                traj._append(self.make_state(t_hit, y_hit, info_hit))
                traj.stats["accepted"] += 1
                loc = g_hit[kind][1]
                traj.termination = kind
                traj.event = EventRecord(kind.value, float(t_hit), float(y_hit), float(g_hit[kind][0]),
                                         float(loc), float(t_hit - t_ok))
                return self._finish(traj)

            traj._append(self.make_state(t_new, y_new, info))
            traj.stats["accepted"] += 1
            t, y, f = t_new, y_new, f_new
            fac = 5.0 if errn == 0 else min(5.0, max(0.2, 0.9 * errn ** -0.2))
            h *= fac
        else:
            raise StepSizeUnderflow("maximum number of steps exceeded", traj.final)

        traj.termination = Termination.THRESHOLD_TIME_REACHED if hit_threshold else Termination.REACHED_HORIZON
        return self._finish(traj)

    def _finish(self, traj):
        traj.stats["rhs_evals"] = self.n_rhs
        if traj.termination in (Termination.BLOW_UP_CERTIFIED, Termination.THRESHOLD_TIME_REACHED) \
                and math.isfinite(self.T):
            traj.growth_law = _growth_law(traj, self.T)
        return traj


def _growth_law(traj, T):
    """Fit ``sigma ~ C (T - t)**p`` over the final decade of ``T - t``."""
    t, s = traj.t, traj.sigma
    gap = T - t[-1]
    sel = (T - t) <= 10.0 * gap if gap > 0 else np.zeros_like(t, dtype=bool)
    if np.count_nonzero(sel) < 5:
        sel = np.arange(len(t)) >= max(0, len(t) - 20)
    try:
        fit = fit_decay(t[sel], s[sel], mode="power_in_T_minus_t", T=T, min_points=5)
    except InsufficientDataError:
        return None
    return {"exponent": fit.exponent, "log_C": fit.intercept, "r2": fit.r2, "n_points": fit.n_points}


def integrate(data: InitialData, horizon: float = math.inf, options: TrackerOptions = None,
              start=None, field: WaveField = None, **overrides) -> Trajectory:
    """Track the shock front from ``sigma0`` (or from ``start = (t, sigma)``).

    Stops at ``horizon``, just before the threshold time, at the blow-up
    radius, or at the first violation of the solution contract, whichever
    comes first.  Keyword overrides update fields of ``options``.
    """
    opt = options or TrackerOptions()
    if overrides:
        opt = TrackerOptions(**{**asdict(opt), **overrides})
    if field is None:
        field = WaveField(data)
    if not math.isfinite(horizon) and not math.isfinite(data.params.T) and opt.blow_up_factor == math.inf:
        raise ValueError("an infinite horizon needs a finite threshold time or blow-up radius")
    return _Integrator(data, field, opt).run(horizon, start)


@dataclass(frozen=True)
class ContinuationReport:
    t: float
    sigma: float
    sigma_finite: bool
    tension_band: bool
    lax: bool
    sup_N: float
    inf_N: float
    sigma_prime: float
    upper_margin: float
    lower_margin: float
    lax_margin: float

    @property
    def passed(self):
        return self.sigma_finite and self.tension_band and self.lax


def continuation_check(traj: Trajectory, t: float) -> ContinuationReport:
    """Evaluate the three conditions under which the front can be continued past ``t``.

    Strict inequalities are tested with the tracker's event margin, so a
    state at a certified event fails the corresponding condition.
    """
    st = traj.front_at(t)
    mon = TensionMonitor(traj.field, L=traj.options.monitor_L, per_decade=traj.options.per_decade)
    ext = mon.extrema(st.sigma, t, refine=True, n_candidates=5)
    prm = traj.params
    m = traj.options.margin
    up = prm.N1 - m - ext.sup_bound
    lo = ext.inf_bound - prm.eta - m
    return ContinuationReport(
        t=float(t), sigma=st.sigma,
        sigma_finite=bool(np.isfinite(st.sigma)),
        tension_band=bool(up > 0 and lo > 0),
        lax=bool(st.sigma_prime > 1.0 + m),
        sup_N=ext.sup_N, inf_N=ext.inf_N, sigma_prime=st.sigma_prime,
        upper_margin=float(up), lower_margin=float(lo), lax_margin=st.sigma_prime - 1.0,
    )
