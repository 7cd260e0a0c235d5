"""Shock-capturing finite-volume solver for the stretch-limited string.

Solves the first-order system ``v_t = N_s``, ``w_t = v_s`` with
``(v, w) = (chi_t, chi_s)`` on ``[0, S]`` by a first-order Godunov scheme.
The extensible branch is linear (``N = w - offset``, wave speeds +-1).  The
inextensible branch has no tension law, so cells attached to the wall with
``w = nu1`` form a rigid block at rest; its tension is whatever the jump
condition at the block edge requires.  The block edge is advanced through a
single partially filled "front" cell.

This solver shares nothing with the front tracker beyond the initial data
and serves as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import StretchShockError
from .profiles import InitialData

__all__ = ["FvAbort", "FvResult", "fv_run", "cell_averages", "energy_dissipation_rate", "rh_consistency"]

CFL = 0.45
W_TOL = 1e-12
_GAUSS = np.polynomial.legendre.leggauss(4)


class FvAbort(StretchShockError):
    """The finite-volume run left its admissible state space."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class FvResult:
    s: np.ndarray
    ds: float
    times: np.ndarray
    front: np.ndarray
    front_subcell: np.ndarray
    front_speed: np.ndarray
    N_block: np.ndarray
    energy: np.ndarray
    boundary_power: np.ndarray
    N_ahead: np.ndarray
    v_ahead: np.ndarray
    snapshots: dict = field(default_factory=dict)
    v: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    N: Optional[np.ndarray] = None
    n_steps: int = 0

    def fields_at_end(self):
        return self.s, self.v, self.w, self.N


def _gauss_cell_integral(fn, lo, hi):
    x, wts = _GAUSS
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(fn(pts.ravel()), dtype=float).reshape(pts.shape)
    return (vals @ wts) * half


def cell_averages(data: InitialData, edges: np.ndarray):
    """Cell averages of ``(chi1, chi0')`` on the given cell edges.

    The inextensible part ``[0, sigma0]`` contributes ``(0, nu1)``; the
    extensible part is integrated by four-point Gauss rules, split exactly
    at ``sigma0``.
    """
    s0 = data.sigma0
    nu1 = data.params.nu1
    left, right = edges[:-1], edges[1:]
    width = right - left
    lo = np.maximum(left, s0)
    hi = np.maximum(right, s0)
    inext = np.clip(np.minimum(right, s0) - left, 0.0, None)
    v = _gauss_cell_integral(data.chi1, lo, hi) / width
    w = (_gauss_cell_integral(data.chi0.deriv, lo, hi) + nu1 * inext) / width
    return v, w


def fv_run(data: InitialData, S: float, ds: float, t_end: float, snapshot_times=(),
           dt: float = None, margin: float = 0.2, check_domain: bool = True) -> FvResult:
    """Run the finite-volume solver to ``t_end`` and record the captured front.

    Parameters
    ----------
    S : float
        Right end of the truncated domain.
    ds : float
        Cell width.
    dt : float, optional
        Fixed time step; by default each step uses CFL 0.45 relative to the
        fastest of the acoustic speed and the current front speed.
    margin : float
        Fraction of ``S`` kept free of the front's domain of influence.

    Raises
    ------
    FvAbort
        On a CFL violation or a stretch outside ``(0, nu1]``.
    """
    prm = data.params
    nu1, off = prm.nu1, prm.offset
    N1 = prm.N1
    if math.isfinite(prm.T) and t_end >= prm.T:
        raise ValueError("t_end must be before the threshold time")
    n = int(round(S / ds))
    if n < 8:
        raise ValueError("need at least 8 cells")
    ds = S / n
    edges = np.linspace(0.0, S, n + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    v, w = cell_averages(data, edges)
    # cells fully behind the initial front are exactly rigid
    w[edges[1:] <= data.sigma0] = nu1
    v[edges[1:] <= data.sigma0] = 0.0

    snaps = sorted(float(x) for x in snapshot_times if 0 <= x <= t_end)
    out_t, out_front, out_sub, out_sf, out_Nb, out_E, out_P = [], [], [], [], [], [], []
    out_NR, out_vR = [], []
    snapshots = {}
    t = 0.0
    steps = 0

    def front_cell():
        idx = np.nonzero(w < nu1 - W_TOL)[0]
        if idx.size == 0:
            raise FvAbort("the whole domain became inextensible", {"t": t})
        return int(idx[0])

    def energy(i_f):
        N = w - off
        dens = 0.5 * v * v + 0.5 * N * N
        dens[:i_f] = 0.5 * N1 * N1
        return float(np.sum(dens) * ds)

    def record(i_f, sf, N_blk):
        wR = w[i_f + 1] if i_f + 1 < n else w[i_f]
        mid = 0.5 * (nu1 + wR)
        # leftmost interface where w drops below the midpoint value
        below = np.nonzero(w < mid)[0]
        k = int(below[0]) if below.size else n
        frac = (w[i_f] - wR) / (nu1 - wR) if nu1 > wR else 0.0
        out_t.append(t)
        out_front.append(edges[k])
        out_sub.append(edges[i_f] + min(max(frac, 0.0), 1.0) * ds)
        out_sf.append(sf)
        out_Nb.append(N_blk)
        j = min(i_f + 2, n - 1)
        out_NR.append(w[j] - off)
        out_vR.append(v[j])
        out_E.append(energy(i_f))
        N_b = prm.zeta * t + prm.tau
        v_b = v[-1] - (w[-1] - off) + N_b
        out_P.append(N_b * v_b)

    def speeds(i_f):
        if i_f + 1 >= n:
            return 0.0
        vR, wR = v[i_f + 1], w[i_f + 1]
        gap = nu1 - wR
        return vR / gap if gap > 0 else math.inf

    i_f = front_cell()
    sf = speeds(i_f)
    record(i_f, sf, (w[i_f + 1] - off) + sf * v[i_f + 1] if sf > 1 else math.nan)

    lam_max = CFL
    while t < t_end - 1e-14 * max(1.0, t_end):
        i_f = front_cell()
        sf = speeds(i_f)
        h = dt if dt is not None else CFL * ds / max(1.0, sf)
        if dt is not None and dt * max(1.0, sf) / ds > lam_max + 1e-12:
            raise FvAbort("CFL condition violated", {"t": t, "cfl": dt * max(1.0, sf) / ds})
        nxt = t_end
        for ts in snaps:
            if ts > t + 1e-14:
                nxt = min(nxt, ts)
                break
        if t + h > nxt:
            h = nxt - t
        lam = h / ds

        N = w - off
        m = n - i_f
        Nst = np.empty(m + 1)   # interfaces i_f .. n
        vst = np.empty(m + 1)
        # interior acoustic Riemann solver on interfaces i_f+1 .. n-1
        NL, NR = N[i_f:-1], N[i_f + 1:]
        vL, vR = v[i_f:-1], v[i_f + 1:]
        Nst[1:m] = 0.5 * (NL + NR) + 0.5 * (vR - vL)
        vst[1:m] = 0.5 * (vL + vR) + 0.5 * (NR - NL)
        if sf > 1 and i_f + 1 < n:
            # supersonic edge: the front cell sees the state just ahead of it
            j = i_f + 1
            Nst[0] = N[j] + sf * v[j]
            vst[0] = 0.0
            Nst[1] = N[j]
            vst[1] = v[j]
        else:
            Nst[0] = N[i_f] + v[i_f]
            vst[0] = 0.0
        N_b = prm.zeta * t + prm.tau
        Nst[m] = N_b
        vst[m] = v[-1] - N[-1] + N_b

        v[i_f:] += lam * (Nst[1:] - Nst[:-1])
        w[i_f:] += lam * (vst[1:] - vst[:-1])
        t += h
        steps += 1

        # cells that reached the maximal stretch join the rigid block
        k = i_f
        while k < n - 1 and w[k] >= nu1 - W_TOL:
            excess = w[k] - nu1
            w[k] = nu1
            v[k] = 0.0
            w[k + 1] += excess
            k += 1
        bad = (w <= 0) | (w > nu1 + 1e-9)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise FvAbort(f"stretch left (0, nu1] at s={centers[i]!r}, t={t!r}",
                          {"t": t, "s": float(centers[i]), "w": float(w[i])})
        if check_domain and out_front and out_front[-1] + t > (1.0 - margin) * S:
            raise FvAbort("front's domain of influence reached the truncation margin",
                          {"t": t, "front": out_front[-1], "S": S})

        i_new = front_cell()
        sf_new = speeds(i_new)
        N_blk = float(Nst[0])
        record(i_new, sf_new, N_blk)
        for ts in snaps:
            if abs(ts - t) <= 1e-12 * max(1.0, t) and ts not in snapshots:
                snapshots[ts] = (centers.copy(), v.copy(), w.copy(), _tension(w, i_new, N_blk, off))

    return FvResult(
        s=centers, ds=ds, times=np.array(out_t), front=np.array(out_front),
        front_subcell=np.array(out_sub), front_speed=np.array(out_sf), N_block=np.array(out_Nb),
        energy=np.array(out_E), boundary_power=np.array(out_P),
        N_ahead=np.array(out_NR), v_ahead=np.array(out_vR), snapshots=snapshots,
        v=v, w=w, N=_tension(w, front_cell(), out_Nb[-1], off), n_steps=steps,
    )


def _tension(w, i_f, N_blk, off):
    N = w - off
    N = N.copy()
    N[:i_f] = N_blk
    return N


def energy_dissipation_rate(res: FvResult, window: float = 0.1):
    """Windowed ``(Delta E - int P dt) / Delta t`` of the discrete energy.

    Returns the per-window rates; nonpositive values mean the discrete energy
    only decreases beyond what the boundary supplies.
    """
    t = res.times
    marks = np.arange(t[0], t[-1] + 0.5 * window, window)
    idx = np.unique([int(np.argmin(np.abs(t - m))) for m in marks])
    rates = []
    for a, b in zip(idx[:-1], idx[1:]):
        P_int = np.trapezoid(res.boundary_power[a:b + 1], t[a:b + 1])
        rates.append((res.energy[b] - res.energy[a] - P_int) / (t[b] - t[a]))
    return np.array(rates)


def rh_consistency(res: FvResult, t0: float, t1: float):
    """Jump-condition check from captured data over ``[t0, t1]``.

    The front speed is the slope of a linear fit to the captured front; the
    jumps use the block tension and the plateau just ahead of the front.
    Returns ``(speed, residual, relative_residual)`` with
    ``residual = [N] + speed * [v]``.
    """
    sel = (res.times >= t0) & (res.times <= t1)
    if np.count_nonzero(sel) < 3:
        raise ValueError("time window holds fewer than three samples")
    speed = float(np.polyfit(res.times[sel], res.front[sel], 1)[0])
    N_minus = float(np.mean(res.N_block[sel]))
    N_plus = float(np.mean(res.N_ahead[sel]))
    v_plus = float(np.mean(res.v_ahead[sel]))
    jump_N = N_plus - N_minus
    resid = jump_N + speed * v_plus
    return speed, resid, abs(resid) / abs(jump_N)
