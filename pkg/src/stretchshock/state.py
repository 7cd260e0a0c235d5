"""State reconstruction on both segments, jump residuals and the energy audit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import UsageError
from .tracker import Trajectory, _hermite

__all__ = [
    "Region",
    "StateSample",
    "EnergyLedger",
    "EnergyReport",
    "sample_state",
    "sample_states",
    "rh_residual",
    "heat_power",
    "energy_audit",
    "composite_gauss",
]


class Region(str, Enum):
    INEXTENSIBLE = "inextensible"
    EXTENSIBLE = "extensible"


@dataclass(frozen=True)
class StateSample:
    s: float
    t: float
    region: Region
    chi: float
    nu: float
    N: float
    chit: float


def sample_states(traj: Trajectory, s, t: float):
    """State at the material points ``s`` (array) at time ``t``.

    Points with ``s >= sigma(t)`` are extensible and come from the exact wave
    field; points behind the front use the inextensible-segment formulas.
    """
    st = traj.front_at(t)
    prm = traj.params
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s < 0):
        raise UsageError("material coordinate must be nonnegative")
    out = []
    ext = s >= st.sigma
    if np.any(ext):
        se = s[ext]
        chi = traj.field.chi(se, t)
        chi_s, chi_t = traj.field.derivs(se, t)
        ext_vals = iter(zip(se, np.broadcast_to(chi, se.shape), np.broadcast_to(chi_s, se.shape),
                            np.broadcast_to(chi_t, se.shape)))
    # sigma'^2 (N1 - N+) written as sigma' * chit+ avoids a small difference
    N_minus = st.N_plus + st.sigma_prime * st.chit_plus
    for si, is_ext in zip(s, ext):
        if is_ext:
            _, c, cs, ct = next(ext_vals)
            out.append(StateSample(float(si), float(t), Region.EXTENSIBLE, float(c), float(cs),
                                   float(cs - prm.offset), float(ct)))
        else:
            out.append(StateSample(float(si), float(t), Region.INEXTENSIBLE, prm.nu1 * float(si),
                                   prm.nu1, float(N_minus), 0.0))
    return out


def sample_state(traj: Trajectory, s: float, t: float) -> StateSample:
    """Single-point version of :func:`sample_states`."""
    return sample_states(traj, [s], t)[0]


def _interp_speed(traj: Trajectory, t: float):
    """Position and speed of the trajectory's Hermite interpolant at ``t``."""
    traj._check_t(t)
    ts = traj.t
    if len(ts) == 1:
        return traj.sigma[0], traj.sigma_prime[0]
    k = int(np.searchsorted(ts, t, side="right")) - 1
    k = min(max(k, 0), len(ts) - 2)
    a, b = traj.states[k], traj.states[k + 1]
    if t == a.t:
        return a.sigma, a.sigma_prime
    if t == b.t:
        return b.sigma, b.sigma_prime
    y = _hermite(a.t, a.sigma, a.sigma_prime, b.t, b.sigma, b.sigma_prime, t)
    h = b.t - a.t
    x = (t - a.t) / h
    dy = ((6 * x * x - 6 * x) * (a.sigma - b.sigma) / h
          + (3 * x * x - 4 * x + 1) * a.sigma_prime + (3 * x * x - 2 * x) * b.sigma_prime)
    return float(y), float(dy)


def rh_residual(traj: Trajectory, t: float) -> float:
    """Jump-condition residual ``[N] + sigma' [chi_t]`` across the tracked front.

    The front position and speed come from the trajectory (exact at stored
    steps, Hermite interpolation between them); the extensible traces come
    from the wave field and the tension behind the front from the
    inextensible-segment formula.  Jumps are ``(+) - (-)``.
    """
    sigma, sp = _interp_speed(traj, t)
    f = traj.field
    _, chit = f.derivs(sigma, t)
    gap = float(f.gap(sigma, t))
    # [N] = N+ - N- = -sp^2 * gap ; [chi_t] = chit+ - 0
    return float(sp * (float(chit) - sp * gap))


def heat_power(sigma_prime, N_plus, N1):
    """Rate of energy lost at the front; negative for admissible fronts."""
    return -0.5 * sigma_prime * (N1 - N_plus) ** 2 * (sigma_prime**2 - 1.0)


# --------------------------------------------------------------------------- #
# quadrature for the energy integrals
# --------------------------------------------------------------------------- #

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (10, 20)}


def composite_gauss(g, lo, hi, breaks=(), max_width=math.inf, order=20):
    """Integrate vectorized ``g`` over ``[lo, hi]`` by panel Gauss-Legendre.

    Panels end at every breakpoint inside the interval and are no wider than
    ``max_width``.  Returns ``(value, error_estimate)`` where the estimate is
    the difference from a half-order rule on the same panels.
    """
    edges = np.unique(np.concatenate([[lo, hi], [b for b in breaks if lo < b < hi]]))
    parts = []
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(math.ceil((b - a) / max_width))) if math.isfinite(max_width) else 1
        parts.append(np.linspace(a, b, n + 1)[:-1])
    left = np.concatenate(parts)
    right = np.append(left[1:], hi)
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)

    def rule(n):
        x, w = _GL[n]
        pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        vals = np.asarray(g(pts)).reshape(len(mid), n, -1)
        return np.einsum("pnk,n,p->k", vals, w, half)

    hi_val = rule(order)
    lo_val = rule(10 if order != 10 else 20)
    return hi_val, np.abs(hi_val - lo_val)


def _quad_scale(traj: Trajectory) -> float:
    scales = []
    for p in traj.data.perturbations:
        for name in ("width", "ramp"):
            v = getattr(p, name, None)
            if v is not None:
                scales.append(float(v))
        if hasattr(p, "s") and not hasattr(p, "width"):
            scales.append(float(np.min(np.diff(p.s))))
    return 0.25 * min(scales) if scales else math.inf


def _breaks(traj: Trajectory, t):
    feats = [p.features() for p in traj.data.perturbations]
    if not feats:
        return np.array([])
    f = np.concatenate(feats)
    return np.concatenate([f - t, f + t])


# --------------------------------------------------------------------------- #
# energy audit
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class EnergyLedger:
    t: float
    K: float
    E_stored: float
    P: float
    Q: float
    a: float
    b: float
    dKE_dt: float
    balance_defect: float
    quad_error: float


@dataclass
class EnergyReport:
    rows: list
    max_defect: float
    max_relative_defect: float
    all_Q_negative: bool
    smooth: bool

    def as_dict(self):
        return {
            "max_balance_defect": self.max_defect,
            "max_relative_defect": self.max_relative_defect,
            "all_Q_negative": self.all_Q_negative,
            "smooth_segment": self.smooth,
            "n_times": len(self.rows),
        }


class _EnergyEvaluator:
    def __init__(self, traj: Trajectory, a, b):
        self.traj = traj
        self.a, self.b = float(a), float(b)
        self.width = min(_quad_scale(traj), max(1e-3, (self.b - self.a) / 64.0))

    def energies(self, t, sigma):
        """``(K, E_stored, quad_error)`` on ``[a, b]`` at time ``t``."""
        f = self.traj.field
        prm = self.traj.params
        lo = max(sigma, self.a)

        def g(s):
            chi_s, chi_t = f.derivs(s, t)
            N = chi_s - prm.offset
            return np.stack([0.5 * chi_t * chi_t, 0.5 * N * N], axis=-1)

        val, err = composite_gauss(g, lo, self.b, _breaks(self.traj, t), self.width)
        K, E = float(val[0]), float(val[1])
        if self.a < sigma:
            # the inextensible part is at rest with stored energy N1^2 / 2 per unit length
            E += 0.5 * prm.N1**2 * (sigma - self.a)
        return K, E, float(np.max(err))

    def power(self, t, sigma, sp, N_plus, smooth):
        f = self.traj.field
        prm = self.traj.params
        chi_s_b, chi_t_b = f.derivs(self.b, t)
        P = float((chi_s_b - prm.offset) * chi_t_b)
        if smooth:
            chi_s_a, chi_t_a = f.derivs(self.a, t)
            P -= float((chi_s_a - prm.offset) * chi_t_a)
            Q = 0.0
        else:
            Q = float(heat_power(sp, N_plus, prm.N1))
        return P, Q


def energy_audit(traj: Trajectory, a: float, b: float, t_grid, h: float = None) -> EnergyReport:
    """Check ``d(K + E)/dt = P + Q`` for the material segment ``[a, b]``.

    With ``a < sigma(t) < b`` the segment contains the front and ``Q`` is the
    heat power; with ``a, b > sigma(t)`` the segment is smooth and ``Q = 0``.
    The time derivative uses a fourth-order central difference with step
    ``h``; front positions are refined onto the continuity condition so that
    differencing does not amplify interpolation error.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    t0, t1 = traj.t_range
    T = traj.params.T
    ev = _EnergyEvaluator(traj, a, b)
    rows = []
    smooth_flags = set()
    for t in t_grid:
        hh = h
        if hh is None:
            hh = 1e-3
            if math.isfinite(T):
                hh = min(hh, 1e-2 * (T - t))
        hh = min(hh, 0.5 * (t - t0), 0.5 * (t1 - t))
        if not hh > 0:
            raise UsageError(f"audit time {t!r} needs room for the difference stencil inside [{t0!r}, {t1!r}]")
        stencil = t + hh * np.array([-2.0, -1.0, 1.0, 2.0])
        fronts = [traj.front_at(tt) for tt in stencil]
        st = traj.front_at(t)
        sigmas = [fr.sigma for fr in fronts] + [st.sigma]
        if not (a < min(sigmas) and max(sigmas) < b) and not (a > max(sigmas) and b > a):
            raise UsageError(
                f"segment [{a!r}, {b!r}] must straddle the front or lie ahead of it for t near {t!r}"
            )
        smooth = a > max(sigmas)
        smooth_flags.add(smooth)
        KE = []
        errs = []
        for tt, fr in zip(stencil, fronts):
            K, E, e = ev.energies(tt, fr.sigma)
            KE.append(K + E)
            errs.append(e)
        dKE = (-KE[3] + 8.0 * KE[2] - 8.0 * KE[1] + KE[0]) / (12.0 * hh)
        K, E, e = ev.energies(t, st.sigma)
        P, Q = ev.power(t, st.sigma, st.sigma_prime, st.N_plus, smooth)
        rows.append(EnergyLedger(float(t), K, E, P, Q, float(a), float(b), float(dKE),
                                 float(abs(dKE - P - Q)), float(max(errs + [e]))))
    max_def = max((r.balance_defect for r in rows), default=0.0)
    rel = max((r.balance_defect / max(abs(r.P), abs(r.Q), 1.0) for r in rows), default=0.0)
    # Q only exists when the segment contains the front
    q_neg = all(r.Q < 0 for r in rows if r.a < traj.sigma_at(r.t))
    return EnergyReport(rows, float(max_def), float(rel), bool(q_neg), smooth_flags == {True})
