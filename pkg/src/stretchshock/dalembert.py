"""Exact extensible-region wave field from initial data (D'Alembert's formula).

The field is evaluated as an affine part in closed form plus the contribution
of the profile deviations.  Keeping the two apart means quantities such as
``N1 - chi_s`` stay accurate when the affine part alone nearly cancels, which
is exactly what happens as the front accelerates toward blow-up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .profiles import FAR_FACTOR, InitialData
from .quadrature import CumulativeIntegral

__all__ = ["FieldValues", "WaveField", "build_cumulative"]

# relative slack on the dependence-domain check, for roundoff in s - t
DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class FieldValues:
    chi: object
    chi_s: object
    chi_t: object


def build_cumulative(data: InitialData):
    """Antiderivative ``x -> int_{sigma0}^x`` of the velocity deviation, or ``None``.

    The affine part of the velocity integrates in closed form and is added by
    :meth:`WaveField.cumulative_chi1`; only the deviation is tabulated.
    """
    prof = data.chi1
    p = prof.perturbation
    if p.is_zero:
        return None
    support = p.support
    return CumulativeIntegral(
        prof.dev, data.sigma0, FAR_FACTOR * max(1.0, data.sigma0, p.extent),
        tol_per_length=1e-12, max_depth=40,
        breakpoints=p.features(),
        vanishes_beyond=None if support is None else support[1],
    )


class WaveField:
    """Solution of the wave equation on ``{s - t >= sigma0}`` with the given data.

    Parameters
    ----------
    data : InitialData
        Position and velocity profiles.  Immutable after construction, so a
        field may be shared between threads or pickled to worker processes.
    """

    def __init__(self, data: InitialData):
        self.data = data
        self.params = data.params
        self.sigma0 = float(data.sigma0)
        c0, c1 = data.chi0, data.chi1
        self.k0 = float(c0.slope)
        self.k1 = float(c1.slope)
        self.v1 = float(c1.anchor_value)
        self.anchor1 = float(c1.anchor)
        self._c0, self._c1 = c0, c1
        self._cum = build_cumulative(data)
        # N1 - tension of the affine part at t = 0, formed once and exactly
        self._gap0 = self.params.N1 + self.params.offset - self.k0

    # ------------------------------------------------------------------ #
    def check_domain(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("negative time")
        foot = s - t
        slack = DOMAIN_SLACK * np.maximum(1.0, np.abs(s))
        if np.any(foot < self.sigma0 - slack):
            bad = float(np.min(foot))
            raise DomainError(
                f"point outside the dependence domain: s - t = {bad!r} < sigma0 = {self.sigma0!r}"
            )

    def is_inside(self, s, t) -> bool:
        return bool(s - t >= self.sigma0 - DOMAIN_SLACK * max(1.0, abs(s)) and t >= 0)

    # ------------------------------------------------------------------ #
    def deviation(self, s, t):
        """Deviation parts ``(e_s, e_t)`` of ``(chi_s, chi_t)`` from the affine field."""
        self.check_domain(s, t)
        sp = np.asarray(s, dtype=float) + t
        sm = np.asarray(s, dtype=float) - t
        a_p, a_m = self._c0.dev1(sp), self._c0.dev1(sm)
        b_p, b_m = self._c1.dev(sp), self._c1.dev(sm)
        e_s = 0.5 * (a_p + a_m) + 0.5 * (b_p - b_m)
        e_t = 0.5 * (a_p - a_m) + 0.5 * (b_p + b_m)
        return e_s, e_t

    def affine_derivs(self, s, t):
        s = np.asarray(s, dtype=float)
        return self.k0 + self.k1 * t, self.v1 + self.k1 * (s - self.anchor1)

    def derivs(self, s, t):
        """``(chi_s, chi_t)``; cheaper than :meth:`eval` (no quadrature)."""
        e_s, e_t = self.deviation(s, t)
        a_s, a_t = self.affine_derivs(s, t)
        return a_s + e_s, a_t + e_t

    def tension(self, s, t):
        chi_s, _ = self.derivs(s, t)
        return chi_s - self.params.offset

    def gap(self, s, t):
        """``N1 - N(s, t)``, formed without cancelling the affine part."""
        e_s, _ = self.deviation(s, t)
        return (self._gap0 - self.k1 * t) - e_s

    def cumulative_chi1(self, x):
        """``int_{sigma0}^x chi1``."""
        x = np.asarray(x, dtype=float)
        d = x - self.anchor1
        d0 = self.sigma0 - self.anchor1
        out = self.v1 * (x - self.sigma0) + 0.5 * self.k1 * (d * d - d0 * d0)
        if self._cum is not None:
            out = out + self._cum(x)
        return out

    def chi(self, s, t):
        """Position ``chi(s, t)``."""
        self.check_domain(s, t)
        s = np.asarray(s, dtype=float)
        c0 = self._c0
        affine = c0.affine(s) + self.v1 * t + self.k1 * t * (s - self.anchor1)
        sp, sm = s + t, s - t
        dev = 0.5 * (c0.dev(sp) + c0.dev(sm))
        if self._cum is not None:
            dev = dev + 0.5 * (self._cum(sp) - self._cum(sm))
        return affine + dev

    def eval(self, s, t) -> FieldValues:
        """``(chi, chi_s, chi_t)`` at ``(s, t)`` with ``s - t >= sigma0``."""
        chi = self.chi(s, t)
        chi_s, chi_t = self.derivs(s, t)
        return FieldValues(chi, chi_s, chi_t)

    def eval_second(self, s, t):
        """``(chi_ss, chi_st)``."""
        self.check_domain(s, t)
        sp = np.asarray(s, dtype=float) + t
        sm = np.asarray(s, dtype=float) - t
        a_p, a_m = self._c0.dev2(sp), self._c0.dev2(sm)
        b_p, b_m = self._c1.dev1(sp), self._c1.dev1(sm)
        chi_ss = 0.5 * (a_p + a_m) + 0.5 * (b_p - b_m)
        chi_st = self.k1 + 0.5 * (a_p - a_m) + 0.5 * (b_p + b_m)
        return chi_ss, chi_st
