"""Power-law rate fits on log-log data."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from .errors import InsufficientDataError, UsageError

__all__ = ["FitMode", "DecayFit", "fit_decay", "NOISE_FLOOR"]

# ten times the arithmetic noise floor of the deviations being fitted
NOISE_FLOOR = 1e-11


class FitMode(str, Enum):
    POWER_IN_1_PLUS_T = "power_in_1_plus_t"
    POWER_IN_T_MINUS_T = "power_in_T_minus_t"


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    r2: float
    stderr: float
    ci95: tuple
    n_points: int
    mode: str

    def as_dict(self):
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "r2": self.r2,
            "stderr": self.stderr,
            "ci95": list(self.ci95),
            "n_points": self.n_points,
            "mode": self.mode,
        }


def fit_decay(t, values, mode="power_in_1_plus_t", T=None, noise_floor=NOISE_FLOOR,
              min_points=20) -> DecayFit:
    """Fit ``|value| ~ C * x**p`` with ``x = 1 + t`` or ``x = T - t``.

    Ordinary least squares of ``log|value|`` on ``log x``.  Points with
    ``|value| <= noise_floor`` (or ``x <= 0``) are dropped before counting.

    Returns
    -------
    DecayFit
        ``exponent`` is the slope ``p``; ``intercept`` is ``log C``.
    """
    mode = FitMode(mode)
    t = np.asarray(t, dtype=float).ravel()
    v = np.abs(np.asarray(values, dtype=float).ravel())
    if t.shape != v.shape:
        raise UsageError("t and values must have the same length")
    if mode is FitMode.POWER_IN_T_MINUS_T:
        if T is None or not np.isfinite(T):
            raise UsageError("a finite T is required for power_in_T_minus_t")
        x = T - t
    else:
        x = 1.0 + t
    keep = np.isfinite(v) & (v > noise_floor) & (x > 0)
    n = int(np.count_nonzero(keep))
    if n < min_points:
        raise InsufficientDataError(f"need at least {min_points} points above the noise floor, have {n}")
    lx, ly = np.log(x[keep]), np.log(v[keep])
    res = stats.linregress(lx, ly)
    q = stats.t.ppf(0.975, n - 2)
    half = q * res.stderr
    return DecayFit(
        exponent=float(res.slope),
        intercept=float(res.intercept),
        r2=float(res.rvalue**2),
        stderr=float(res.stderr),
        ci95=(float(res.slope - half), float(res.slope + half)),
        n_points=n,
        mode=mode.value,
    )
