import numpy as np
import pytest
from hypothesis import given, strategies as st

from stretchshock.errors import UsageError
from stretchshock.material import NondimensionalParams
from stretchshock.profiles import RationalBump, make_constant_stretch_data
from stretchshock.state import (
    Region,
    composite_gauss,
    energy_audit,
    heat_power,
    rh_residual,
    sample_state,
    sample_states,
)
from stretchshock.tracker import integrate


@pytest.fixture(scope="module")
def traj0():
    prm = NondimensionalParams.simple(2, 1, 0)
    return integrate(make_constant_stretch_data(prm, 1, 2), 4.0)


@pytest.fixture(scope="module")
def traj1():
    prm = NondimensionalParams.simple(2, 1, 1)
    return integrate(make_constant_stretch_data(prm, 1, 2), 0.9)


@pytest.fixture(scope="module")
def bumped():
    prm = NondimensionalParams.simple(2, 1, 0)
    d = make_constant_stretch_data(prm, 1, 2, RationalBump(-0.04, 3, 1, 2), RationalBump(0.04, 6, 1.5, 2))
    return integrate(d, 4.0)


def test_behind_front(traj0):
    for t in (0.5, 1.0, 3.0):
        x = sample_state(traj0, 0.5, t)
        assert x.region is Region.INEXTENSIBLE
        assert (x.N, x.chi, x.chit, x.nu) == pytest.approx((5.0, 1.0, 0.0, 2.0), abs=1e-12)


def test_ahead_of_front(traj0):
    x = sample_state(traj0, 5.0, 1.0)
    assert x.region is Region.EXTENSIBLE
    assert (x.chi, x.N, x.chit) == pytest.approx((8.0, 1.0, 2.0), abs=1e-12)


def test_zeta1_tension_behind(traj1):
    assert sample_state(traj1, 0.0, 0.5).N == pytest.approx(33.5, rel=1e-9)


def test_sample_states_split_at_front(traj0):
    xs = sample_states(traj0, np.linspace(0, 10, 41), 2.0)
    regions = [x.region for x in xs]
    k = regions.index(Region.EXTENSIBLE)
    assert all(r is Region.INEXTENSIBLE for r in regions[:k])
    assert xs[k].s >= 5.0 - 1e-12
    with pytest.raises(UsageError):
        sample_states(traj0, [-1.0], 1.0)


def test_rh_residual_flat(traj0, traj1):
    for t in (0.0, 1.0, 2.7):
        assert abs(rh_residual(traj0, t)) <= 1e-14
    for t in traj1.t:
        N1 = 2.0
        st = traj1.front_at(t)
        jump = st.sigma_prime**2 * (N1 - st.N_plus)
        assert abs(rh_residual(traj1, t)) <= 1e-8 * (1 + jump)


def test_rh_residual_perturbed_at_steps(bumped):
    for st in bumped.states:
        jump = st.sigma_prime**2 * (2.0 - st.N_plus)
        assert abs(rh_residual(bumped, st.t)) <= 1e-8 * (1 + jump)


def test_rh_residual_zero_at_start(bumped):
    assert rh_residual(bumped, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_heat_power_examples():
    assert heat_power(2.0, 1.0, 2.0) == -3.0
    assert heat_power(1.0, 1.0, 2.0) == 0.0
    assert abs(heat_power(1 + 1e-9, 1.0, 2.0)) < 1e-8


@given(sp=st.floats(1.0 + 1e-9, 1e4), N=st.floats(0.0, 1.99))
def test_heat_power_dissipative(sp, N):
    assert heat_power(sp, N, 2.0) < 0


def test_audit_oracle_straddling(traj0):
    rep = energy_audit(traj0, 0.5, 12.0, np.linspace(0.2, 3.8, 40))
    for row in rep.rows:
        assert row.Q == pytest.approx(-3.0, abs=1e-10)
        assert row.balance_defect <= 1e-6 * max(abs(row.P), abs(row.Q), 1)
    assert rep.all_Q_negative and not rep.smooth


def test_audit_smooth_segment(bumped):
    rep = energy_audit(bumped, 14.0, 30.0, np.linspace(0.5, 3.5, 20))
    assert rep.smooth
    assert all(r.Q == 0.0 for r in rep.rows)
    assert rep.max_relative_defect <= 1e-6


def test_audit_perturbed(bumped):
    rep = energy_audit(bumped, 0.5, 20.0, np.linspace(0.2, 3.8, 30))
    assert rep.all_Q_negative
    assert rep.max_relative_defect <= 1e-6


def test_audit_rejects_bad_segment(traj0):
    with pytest.raises(UsageError):
        energy_audit(traj0, 2.0, 3.0, [1.0])     # front at 3 sits on the right end
    with pytest.raises(UsageError):
        energy_audit(traj0, 0.5, 12.0, [0.0])    # no room for the stencil


def test_composite_gauss_polynomial_and_breaks():
    val, err = composite_gauss(lambda x: np.stack([x**7, np.abs(x - 0.3)], -1), 0.0, 1.0, breaks=[0.3])
    assert val[0] == pytest.approx(1 / 8, abs=1e-15)
    assert val[1] == pytest.approx(0.5 * 0.09 + 0.5 * 0.49, abs=1e-15)
    assert np.all(err < 1e-13)
