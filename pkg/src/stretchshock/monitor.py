"""Sup and inf of the extensible tension ahead of the front.

The half-line ``s >= sigma`` is split into a resolved near field
``[sigma, sigma + L]`` and a far field bounded analytically from the profile
tails.  Near-field sampling mixes a geometric grid anchored at the front, a
uniform grid, and dense clusters around every perturbation feature
transported along both characteristics; the best grid candidates are then
polished by a bounded scalar search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .dalembert import WaveField
from .quadrature import geometric_knots

__all__ = ["TensionExtrema", "TensionMonitor", "monitor_length"]


def monitor_length(data) -> float:
    """Near-field length ``L``: 4x the outermost perturbation feature.

    Slowly decaying (infinite-support) perturbations get a much longer near
    field so that their tail contribution is negligible.
    """
    ext = max(data.extent, data.sigma0)
    if not data.perturbations:
        return 4.0 * ext
    if data.compactly_perturbed:
        return 4.0 * ext
    return max(4.0 * ext, 1e6 * (1.0 + ext))


@dataclass(frozen=True)
class TensionExtrema:
    t: float
    sigma: float
    sup_N: float
    s_sup: float
    inf_N: float
    s_inf: float
    far_bound: float
    baseline: float = 0.0

    @property
    def sup_bound(self):
        """Certified upper bound including the far field."""
        return max(self.sup_N, self.baseline + self.far_bound)

    @property
    def inf_bound(self):
        return min(self.inf_N, self.baseline - self.far_bound)


class TensionMonitor:
    """Evaluates ``sup`` / ``inf`` of ``N(s, t)`` over ``s >= sigma``.

    Parameters
    ----------
    field : WaveField
    L : float, optional
        Near-field length; defaults to :func:`monitor_length`.
    per_decade : int
        Geometric grid density.
    cluster : int
        Points per dense cluster around transported perturbation features.
    """

    def __init__(self, field: WaveField, L=None, per_decade=64, uniform=257, cluster=257):
        self.field = field
        data = field.data
        self.L = float(monitor_length(data) if L is None else L)
        self.per_decade = per_decade
        self.uniform = uniform
        self.cluster = cluster
        self._ranges = []
        for p in data.perturbations:
            f = np.asarray(p.features(), dtype=float)
            if f.size:
                n = max(cluster, 4 * f.size)
                self._ranges.append(np.linspace(f.min(), f.max(), n))
        self._trivial = not data.perturbations

    def _grid(self, sigma, t):
        stop = sigma + self.L
        pts = [geometric_knots(sigma, stop, self.per_decade),
               np.linspace(sigma, min(stop, sigma + 0.25 * self.L), self.uniform)]
        for r in self._ranges:
            pts.append(r - t)
            pts.append(r + t)
        g = np.concatenate(pts)
        g = g[(g >= sigma) & (g <= stop)]
        return np.unique(np.append(g, sigma))

    def far_bound(self, sigma, t):
        x = sigma + self.L - t
        d = self.field.data
        return d.chi0.dev1_tail_bound(x) + d.chi1.dev_tail_bound(x)

    def maximize(self, fn, sigma: float, t: float, refine: bool = True, n_candidates: int = 3):
        """Grid-plus-polish maximum of vectorized ``fn(s)`` over ``[sigma, sigma + L]``.

        Returns ``(s_max, value)``.
        """
        grid = self._grid(sigma, t)
        vals = np.asarray(fn(grid), dtype=float)
        i = int(np.argmax(vals))
        best_s, best_v = float(grid[i]), float(vals[i])
        if not refine or len(grid) < 3:
            return best_s, best_v
        for idx in _top_local(vals, n_candidates):
            lo = grid[max(idx - 1, 0)]
            hi = grid[min(idx + 1, len(grid) - 1)]
            res = minimize_scalar(lambda x: -float(fn(x)), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-10 * max(1.0, abs(hi))})
            if -res.fun > best_v:
                best_s, best_v = float(res.x), float(-res.fun)
        return best_s, best_v

    def extrema(self, sigma: float, t: float, refine: bool = True, n_candidates: int = 3) -> TensionExtrema:
        """Sup and inf of the tension over ``s >= sigma`` at time ``t``."""
        f = self.field
        base = float(f.affine_derivs(sigma, t)[0] - f.params.offset)
        if self._trivial:
            return TensionExtrema(t, sigma, base, sigma, base, sigma, 0.0, baseline=base)

        def e_s(s):
            return f.deviation(s, t)[0]

        s_hi, v_hi = self.maximize(e_s, sigma, t, refine, n_candidates)
        s_lo, v_lo = self.maximize(lambda s: -e_s(s), sigma, t, refine, n_candidates)
        far = self.far_bound(sigma, t)
        return TensionExtrema(t, sigma, base + v_hi, s_hi, base - v_lo, s_lo, far, baseline=base)


def _top_local(v, k):
    """Indices of the ``k`` largest local maxima (endpoints included)."""
    interior = np.nonzero((v[1:-1] >= v[:-2]) & (v[1:-1] >= v[2:]))[0] + 1
    cand = np.concatenate([interior, [0, len(v) - 1]])
    order = np.argsort(-v[cand])
    return cand[order[:k]]
