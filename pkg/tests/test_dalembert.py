import numpy as np
import pytest
from hypothesis import given, strategies as st

from stretchshock.dalembert import WaveField, build_cumulative
from stretchshock.errors import DomainError
from stretchshock.material import NondimensionalParams
from stretchshock.profiles import CompactBump, RationalBump, make_constant_stretch_data

from conftest import fd_deriv


def bumpy(zeta=0.0, a=0.03):
    prm = NondimensionalParams.simple(2, 1, zeta)
    return make_constant_stretch_data(prm, 1.0, 2.0, RationalBump(-a, 4.0, 1.0, 2.0),
                                      RationalBump(a, 6.0, 1.5, 2.0))


def test_hand_value_unperturbed(flat0):
    f = WaveField(flat0)
    v = f.eval(3.0, 1.0)
    assert (float(v.chi), float(v.chi_s), float(v.chi_t)) == pytest.approx((6.0, 1.0, 2.0), abs=1e-13)
    # closed form s + 1 + 2t
    s = np.linspace(2, 30, 9)
    np.testing.assert_allclose(f.chi(s, 1.0), s + 1 + 2.0, atol=1e-12)


def test_zeta1_stretch_is_far_field_tension(flat1):
    f = WaveField(flat1)
    assert float(f.eval(4.0, 0.5).chi_s) == 1.5
    assert f.eval_second(4.0, 0.5) == (0.0, 1.0)


@given(s=st.floats(1.0, 40.0))
def test_time_zero_reproduces_data(s):
    d = bumpy()
    v = WaveField(d).eval(s, 0.0)
    assert float(v.chi) == pytest.approx(float(d.chi0(s)), abs=1e-11)
    assert float(v.chi_s) == pytest.approx(float(d.chi0.deriv(s)), abs=1e-14)
    assert float(v.chi_t) == pytest.approx(float(d.chi1(s)), abs=1e-14)


def test_second_derivatives_at_time_zero():
    d = make_constant_stretch_data(NondimensionalParams.simple(2, 1), 1, 2, None,
                                   RationalBump(0.05, 3.0, 1.0, 2.0))
    f = WaveField(d)
    s = np.linspace(1.5, 9, 7)
    ss, st_ = f.eval_second(s, 0.0)
    np.testing.assert_array_equal(ss, 0.0)
    np.testing.assert_allclose(st_, d.chi1.deriv(s), atol=1e-15)


@pytest.mark.parametrize("zeta", [0.0, 1.0])
def test_derivatives_against_difference_stencils(zeta):
    f = WaveField(bumpy(zeta))
    t = 0.5 if zeta else 2.0
    for s in (3.5, 5.0, 8.25, 12.0):
        v = f.eval(s, t)
        assert float(v.chi_s) == pytest.approx(fd_deriv(lambda x: f.chi(x, t), s, 1e-3), abs=1e-6)
        assert float(v.chi_t) == pytest.approx(fd_deriv(lambda x: f.chi(s, x), t, 1e-3), abs=1e-6)
        ss, st_ = f.eval_second(s, t)
        assert float(ss) == pytest.approx(fd_deriv(lambda x: f.derivs(x, t)[0], s, 1e-3), abs=1e-6)
        assert float(st_) == pytest.approx(fd_deriv(lambda x: f.derivs(s, x)[0], t, 1e-3), abs=1e-6)


def test_wave_equation_residual():
    f = WaveField(bumpy())
    h = 1e-3
    for s, t in [(5.0, 1.0), (7.5, 2.0), (11.0, 3.0)]:
        tt = (f.chi(s, t + h) - 2 * f.chi(s, t) + f.chi(s, t - h)) / h**2
        ss = (f.chi(s + h, t) - 2 * f.chi(s, t) + f.chi(s - h, t)) / h**2
        assert float(tt - ss) == pytest.approx(0.0, abs=1e-4)


def test_deviation_vanishes_for_affine(flat1):
    f = WaveField(flat1)
    e_s, e_t = f.deviation(np.array([3.0, 10.0]), 0.5)
    assert np.all(e_s == 0) and np.all(e_t == 0)


def test_domain_of_dependence(flat0):
    f = WaveField(flat0)
    with pytest.raises(DomainError):
        f.eval(1.5, 1.0)
    with pytest.raises(DomainError):
        f.eval(3.0, -0.1)
    assert f.is_inside(2.0, 1.0)


def test_gap_is_consistent(flat1):
    f = WaveField(bumpy(1.0))
    s, t = 6.0, 0.3
    assert float(f.gap(s, t)) == pytest.approx(2.0 - float(f.tension(s, t)), abs=1e-14)


def test_cumulative_constant_velocity(flat0):
    f = WaveField(flat0)
    assert build_cumulative(flat0) is None
    assert float(f.cumulative_chi1(3.0)) == 4.0


def test_cumulative_affine_velocity(flat1):
    # chi1 = 2 + (s - 1): integral from 1 to x is 2(x-1) + (x-1)^2/2
    f = WaveField(flat1)
    for x in (1.0, 2.5, 7.0):
        assert float(f.cumulative_chi1(x)) == pytest.approx(2 * (x - 1) + 0.5 * (x - 1) ** 2, abs=1e-14)


def test_cumulative_arctan_oracle():
    a, c = 0.2, 4.0
    prm = NondimensionalParams.simple(2, 1)
    d = make_constant_stretch_data(prm, 1, 2, None, RationalBump(a, c, 1.0, 2.0))
    f = WaveField(d)
    for x in (1.0, 3.0, 4.0, 10.0, 1e3, 1e5):
        exact = 2 * (x - 1) + a * (np.arctan(x - c) - np.arctan(1 - c))
        assert float(f.cumulative_chi1(x)) == pytest.approx(exact, abs=1e-10)


def test_compact_bump_cumulative_flat_past_support():
    prm = NondimensionalParams.simple(2, 1)
    d = make_constant_stretch_data(prm, 1, 2, None, CompactBump(0.1, 5.0, 1.0))
    f = WaveField(d)
    # the bump integral is amplitude * half_width (symmetric quintic ramps)
    assert float(f.cumulative_chi1(20.0) - 2 * 19.0) == pytest.approx(0.1, abs=1e-12)
