"""scikit-learn style wrappers.

Only two pieces fit the estimator shape naturally: the decay-rate fit (a
regression on ``(t, value)`` samples) and the tracker viewed as a map from
time to front position.  Everything else is plain functions.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .fitting import NOISE_FLOOR, FitMode, fit_decay
from .material import NondimensionalParams
from .profiles import InitialData, make_constant_stretch_data
from .tracker import TrackerOptions, integrate

__all__ = ["DecayRateFit", "ShockFrontTracker"]


class DecayRateFit(RegressorMixin, BaseEstimator):
    """Power law ``y = C x**p`` with ``x = 1 + t`` or ``x = T - t``.

    ``X`` is a single column of times.  After ``fit``: ``exponent_``,
    ``intercept_`` (``log C``), ``r2_``, ``ci95_``.
    """

    def __init__(self, mode="power_in_1_plus_t", T=None, noise_floor=NOISE_FLOOR, min_points=20):
        self.mode = mode
        self.T = T
        self.noise_floor = noise_floor
        self.min_points = min_points

    def fit(self, X, y):
        X = check_array(X, ensure_min_features=1)
        if X.shape[1] != 1:
            raise ValueError("X must have exactly one column (time)")
        res = fit_decay(X[:, 0], np.asarray(y, dtype=float), self.mode, self.T, self.noise_floor,
                        self.min_points)
        self.exponent_ = res.exponent
        self.intercept_ = res.intercept
        self.r2_ = res.r2
        self.ci95_ = res.ci95
        self.n_points_ = res.n_points
        self.n_features_in_ = 1
        return self

    def _x(self, t):
        if FitMode(self.mode) is FitMode.POWER_IN_1_PLUS_T:
            return 1.0 + t
        return self.T - t

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        X = check_array(X)
        return np.exp(self.intercept_) * self._x(X[:, 0]) ** self.exponent_


class ShockFrontTracker(BaseEstimator):
    """Front tracker with an estimator interface.

    ``fit(data)`` integrates the initial data (an :class:`InitialData`, or
    ``None`` for the unperturbed constant-stretch data built from the
    constructor parameters); ``predict(X)`` returns ``sigma`` at the times in
    the single column of ``X``.
    """

    def __init__(self, N1=2.0, tau=1.0, zeta=0.0, sigma0=1.0, sigma1=2.0, horizon=math.inf,
                 rtol=1e-10, atol=1e-12):
        self.N1 = N1
        self.tau = tau
        self.zeta = zeta
        self.sigma0 = sigma0
        self.sigma1 = sigma1
        self.horizon = horizon
        self.rtol = rtol
        self.atol = atol

    def fit(self, data: InitialData = None, y=None):
        if data is None:
            prm = NondimensionalParams.simple(self.N1, self.tau, self.zeta)
            data = make_constant_stretch_data(prm, self.sigma0, self.sigma1)
        horizon = self.horizon
        if not math.isfinite(horizon) and data.params.zeta == 0:
            raise ValueError("zeta = 0 needs a finite horizon")
        self.trajectory_ = integrate(data, horizon, TrackerOptions(rtol=self.rtol, atol=self.atol))
        self.termination_ = self.trajectory_.termination.value
        return self

    def predict(self, X):
        check_is_fitted(self, "trajectory_")
        X = check_array(X)
        return np.array([self.trajectory_.front_at(float(t)).sigma for t in X[:, 0]])
