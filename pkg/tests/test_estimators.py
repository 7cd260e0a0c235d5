import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from stretchshock.estimators import DecayRateFit, ShockFrontTracker


def test_decay_rate_fit_roundtrip():
    t = np.geomspace(1, 500, 40)[:, None]
    y = 0.7 * (1 + t[:, 0]) ** -1.5
    est = DecayRateFit().fit(t, y)
    assert est.exponent_ == pytest.approx(-1.5, abs=1e-10)
    np.testing.assert_allclose(est.predict(t), y, rtol=1e-9)
    assert est.score(t, y) == pytest.approx(1.0)
    assert clone(est).get_params() == est.get_params()


def test_decay_rate_fit_checks():
    with pytest.raises(NotFittedError):
        DecayRateFit().predict(np.ones((3, 1)))
    with pytest.raises(ValueError):
        DecayRateFit().fit(np.ones((30, 2)), np.ones(30))


def test_tracker_estimator():
    est = ShockFrontTracker(zeta=0.0, horizon=10.0).fit()
    assert est.termination_ == "reached_horizon"
    np.testing.assert_allclose(est.predict([[0.0], [10.0]]), [1.0, 21.0], atol=1e-8)
    with pytest.raises(ValueError):
        ShockFrontTracker(zeta=0.0).fit()
    blow = ShockFrontTracker(zeta=1.0).fit()
    assert blow.termination_ == "blow_up_certified"
