"""Adaptive Simpson quadrature and a knot-tabulated antiderivative."""

from __future__ import annotations

import math

import numpy as np

from .errors import QuadratureError

__all__ = ["adaptive_simpson", "CumulativeIntegral", "geometric_knots"]


def _simpson(fa, fm, fb, h):
    return h * (fa + 4.0 * fm + fb) / 6.0


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-12, max_depth: int = 40) -> float:
    """Integrate scalar ``f`` over ``[a, b]`` by adaptive Simpson with Richardson correction.

    Raises :class:`QuadratureError` carrying the offending sub-interval if the
    local error test still fails at ``max_depth``.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(fa, fm, fb, b - a)
    total = 0.0
    # explicit stack: (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a_, b_, fa_, fm_, fb_, whole_, tol_, depth = stack.pop()
        m_ = 0.5 * (a_ + b_)
        lm, rm = 0.5 * (a_ + m_), 0.5 * (m_ + b_)
        flm, frm = f(lm), f(rm)
        left = _simpson(fa_, flm, fm_, m_ - a_)
        right = _simpson(fm_, frm, fb_, b_ - m_)
        delta = left + right - whole_
        if abs(delta) <= 15.0 * tol_:
            total += left + right + delta / 15.0
            continue
        if depth >= max_depth or m_ <= a_ or m_ >= b_:
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{a_!r}, {b_!r}] (error estimate {abs(delta) / 15:.3e})",
                (a_, b_),
            )
        stack.append((m_, b_, fm_, frm, fb_, right, 0.5 * tol_, depth + 1))
        stack.append((a_, m_, fa_, flm, fm_, left, 0.5 * tol_, depth + 1))
    return sign * total


def geometric_knots(start: float, stop: float, per_decade: int = 64, breakpoints=()) -> np.ndarray:
    """Knots from ``start`` to ``stop`` spaced geometrically in distance from ``start - 1``.

    Spacing in ``1 + (s - start)`` keeps the first knots well resolved even when
    ``start`` is tiny.  Any ``breakpoints`` inside the range are merged in.
    """
    span = stop - start
    if span <= 0:
        return np.array([start])
    n = max(2, int(math.ceil(per_decade * math.log10(1.0 + span))) + 1)
    knots = start - 1.0 + np.geomspace(1.0, 1.0 + span, n)
    knots[0], knots[-1] = start, stop
    extra = [p for p in breakpoints if start < p < stop]
    if extra:
        knots = np.unique(np.concatenate([knots, extra]))
    return knots


class CumulativeIntegral:
    """Evaluator for ``x -> int_start^x f`` backed by tabulated knot values.

    Values at knots are built once by adaptive Simpson.  Between knots (and
    beyond the last one) the gap from the nearest knot below is integrated on
    demand, so evaluation is deterministic and cheap for short gaps.

    Parameters
    ----------
    f : callable
        Scalar integrand.
    start, stop : float
        Range covered by the knot table.
    tol_per_length : float
        Absolute error budget per unit length of integration.
    vanishes_beyond : float, optional
        If given, ``f`` is identically zero for ``x >= vanishes_beyond`` and the
        integral is constant there.
    """

    def __init__(self, f, start, stop, tol_per_length=1e-12, max_depth=40,
                 per_decade=64, breakpoints=(), vanishes_beyond=None):
        self.f = f
        self.start = float(start)
        self.tol_per_length = tol_per_length
        self.max_depth = max_depth
        self.vanishes_beyond = vanishes_beyond
        if vanishes_beyond is not None:
            stop = min(stop, max(vanishes_beyond, self.start))
        self.knots = geometric_knots(self.start, float(stop), per_decade, breakpoints)
        values = np.zeros_like(self.knots)
        acc = 0.0
        for k in range(1, len(self.knots)):
            a, b = self.knots[k - 1], self.knots[k]
            acc += adaptive_simpson(f, a, b, self._tol(b - a), max_depth)
            values[k] = acc
        self.values = values

    def _tol(self, length):
        return self.tol_per_length * max(length, 1e-3)

    def _scalar(self, x: float) -> float:
        if x < self.start:
            return -adaptive_simpson(self.f, x, self.start, self._tol(self.start - x), self.max_depth)
        if self.vanishes_beyond is not None and x >= self.knots[-1]:
            return float(self.values[-1])
        k = int(np.searchsorted(self.knots, x, side="right")) - 1
        k = min(max(k, 0), len(self.knots) - 1)
        a = self.knots[k]
        if x == a:
            return float(self.values[k])
        return float(self.values[k]) + adaptive_simpson(self.f, a, x, self._tol(x - a), self.max_depth)

    def __call__(self, x):
        if np.ndim(x) == 0:
            return self._scalar(float(x))
        x = np.asarray(x, dtype=float)
        return np.array([self._scalar(v) for v in x.ravel()]).reshape(x.shape)
