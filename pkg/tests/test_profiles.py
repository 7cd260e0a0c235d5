import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from stretchshock.errors import DomainError, ValidationError
from stretchshock.profiles import (
    CompactBump,
    PerturbationSpec,
    RationalBump,
    TabulatedPerturbation,
    ZERO,
    load_table,
    make_constant_stretch_data,
    sigma1_infinity,
    validate,
    weighted_norm_B,
)

from conftest import fd_deriv


def test_unperturbed_profiles(flat0):
    s = np.array([1.0, 2.5, 10.0, 1e4])
    np.testing.assert_allclose(flat0.chi0(s), s + 1, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(flat0.chi1(s), 2.0)
    assert flat0.sigma1 == 2.0
    assert flat0.N0_minus == 5.0
    assert flat0.chi0_full(0.5) == 1.0 and flat0.chi1_full(0.5) == 0.0
    assert flat0.N0_full(0.5) == 5.0


def test_zero_amplitude_bump_is_identity(prm0, flat0):
    d = make_constant_stretch_data(prm0, 1, 2, None, RationalBump(0.0, 3.0))
    s = np.linspace(1, 20, 7)
    np.testing.assert_array_equal(d.chi1(s), flat0.chi1(s))
    assert d.perturbations == []


def test_compact_bump_accepted_and_sup(prm1):
    bump = CompactBump(0.1, 12.0, 2.0)
    d = make_constant_stretch_data(prm1, 1, 2, bump)
    s = np.linspace(1, 20, 20001)
    assert np.max(np.abs(d.chi0.deriv(s) - 1.0)) == pytest.approx(0.1, abs=1e-12)
    assert bump.value(12.0) == 0.1
    assert bump.value(10.0) == 0.0 and bump.value(14.0) == 0.0


def test_validate_unperturbed(flat0):
    rep = validate(flat0)
    assert rep.passed and rep.sigma1 == 2.0


def test_validate_sonic_front(prm0):
    # chi1(sigma0) = N1 - chi0'(sigma0) gives sigma1 = 1
    with pytest.raises(ValueError):
        make_constant_stretch_data(prm0, 1, 1.0)
    # the same boundary case reached through a velocity perturbation
    d = make_constant_stretch_data(prm0, 1, 2, None, CompactBump(-1.0, 1.0, 1.0), check=False)
    rep = validate(d)
    assert not rep.passed
    assert 4 in [f.item for f in rep.failures]
    assert d.sigma1 == 1.0


def test_validate_tension_touching_threshold(prm0):
    bump = CompactBump(1.0, 5.0, 2.0)   # amplitude N1 - tau: max touches N1 at s = 5
    with pytest.raises(ValidationError) as exc:
        make_constant_stretch_data(prm0, 1, 2, bump)
    f = [f for f in exc.value.failures if f.item == 2][0]
    assert f.s == pytest.approx(5.0)
    assert f.value == pytest.approx(2.0)


def test_validate_far_field_mismatch(prm0, flat0):
    from stretchshock.profiles import InitialData, Profile
    chi0 = Profile(1.0, 2.0, 1.2, level=1)
    d = InitialData(chi0, flat0.chi1, 1.0, prm0)
    assert 3 in [f.item for f in validate(d).failures]


def test_B_zero_for_unperturbed(flat0, flat1):
    assert weighted_norm_B(flat0, 1.0) == 0.0
    assert weighted_norm_B(flat1, 1.0, "r_plus_2") == 0.0


def test_B_velocity_bump_against_dense_scan(prm0):
    a, c = 0.01, 3.0
    d = make_constant_stretch_data(prm0, 1, 2, None, RationalBump(a, c, 1.0, 2.0))
    r = 0.5
    # independent scan of |chi1 - 2| + s^(r+1) |chi1'| with the closed-form bump
    s = np.linspace(1.0, 2000.0, 2_000_001)
    u = s - c
    val = a / (1 + u * u) + s ** (r + 1) * np.abs(2 * a * u / (1 + u * u) ** 2)
    assert weighted_norm_B(d, r) == pytest.approx(val.max(), rel=1e-6)


@given(lam=st.floats(0.01, 10.0))
def test_B_linear_in_amplitude(lam):
    from stretchshock.material import NondimensionalParams
    prm = NondimensionalParams.simple(2, 1, 1)
    d = make_constant_stretch_data(prm, 1, 2, RationalBump(-1, 0, 1, 3), RationalBump(1, 0, 1, 3),
                                   check=False)
    B = weighted_norm_B(d, 1.0, "r_plus_2")
    assert weighted_norm_B(d.scaled(lam), 1.0, "r_plus_2") == pytest.approx(lam * B, rel=1e-12)


def test_sigma1_infinity(prm0, flat0):
    assert sigma1_infinity(flat0) == 2.0
    d = make_constant_stretch_data(prm0, 1, 2, None, RationalBump(0.05, 3.0))
    assert sigma1_infinity(d) == pytest.approx(2.0, abs=1e-12)
    # a constant shift c of chi1 changes the limit by c / (N1 - tau)
    d = make_constant_stretch_data(prm0, 1, 2.3)
    assert sigma1_infinity(d) == pytest.approx(2.3)


def test_sigma1_infinity_needs_matching_slope(prm0, flat0):
    from stretchshock.profiles import InitialData, Profile
    d = InitialData(flat0.chi0, Profile(1.0, 2.0, 0.5), 1.0, prm0)
    with pytest.raises(DomainError):
        sigma1_infinity(d)


bumps = st.one_of(
    st.builds(RationalBump, st.floats(-1, 1), st.floats(-5, 5), st.floats(0.3, 3), st.floats(0.5, 4)),
    st.builds(lambda a, c, w, f: CompactBump(a, c, w, f * w), st.floats(-1, 1), st.floats(-5, 5),
              st.floats(0.5, 3), st.floats(0, 0.8)),
)


@given(p=bumps, x=st.floats(-10, 10))
def test_perturbation_derivatives_match_differences(p, x):
    if isinstance(p, CompactBump):
        # the stencil is only fourth order where the bump is smooth; skip the ramp knots
        knots = p.center + np.array([-p.half_width, -p.plateau, p.plateau, p.half_width])
        assume(np.min(np.abs(x - knots)) > 3e-4)
    assert p.deriv(x) == pytest.approx(fd_deriv(p.value, x, 1e-4), abs=1e-7)
    assert p.deriv2(x) == pytest.approx(fd_deriv(p.deriv, x, 1e-4), abs=2e-6)


@given(p=bumps, x=st.floats(0, 50))
def test_tail_bounds_hold(p, x):
    y = x + np.geomspace(1e-6, 1e4, 400) - 1e-6
    assert np.max(np.abs(p.value(y))) <= p.tail_bound(x) * (1 + 1e-12) + 1e-300
    assert np.max(np.abs(p.deriv(y))) <= p.deriv_tail_bound(x) * (1 + 1e-12) + 1e-300


@given(p=bumps)
def test_level1_profile_integrates_deviation(p):
    from stretchshock.material import NondimensionalParams
    d = make_constant_stretch_data(NondimensionalParams.simple(2, 1), 1, 2, p.scaled(0.1), check=False)
    s = np.array([1.5, 3.0, 7.0])
    # derivative of the position profile is tau plus the perturbation
    np.testing.assert_allclose(fd_deriv(d.chi0, s, 1e-3), 1.0 + p.scaled(0.1).value(s), atol=1e-8)
    assert float(d.chi0(1.0)) == 2.0


def test_perturbation_spec_builds():
    assert PerturbationSpec().build() is ZERO
    b = PerturbationSpec("rational_bump", 0.1, 2.0, 1.5, 3.0).build()
    assert b == RationalBump(0.1, 2.0, 1.5, 3.0)
    c = PerturbationSpec("compact_bump", 0.1, 50.0, 30.0, plateau=10.0).build()
    assert c.support == (20.0, 80.0)


def test_tabulated_roundtrip(tmp_path):
    s = np.linspace(2, 10, 33)
    v = np.sin(np.pi * (s - 2) / 8) ** 2
    path = tmp_path / "bump.txt"
    np.savetxt(path, np.column_stack([s, v]))
    p = PerturbationSpec("tabulated", amplitude=0.5, table=str(path)).build()
    assert isinstance(p, TabulatedPerturbation)
    np.testing.assert_allclose(p.value(s), 0.5 * v, atol=1e-12)
    assert p.value(11.0) == 0.0
    np.testing.assert_allclose(load_table(path)[1], v)


def test_tabulated_rejects_bad_samples():
    with pytest.raises(ValueError):
        TabulatedPerturbation([0, 1, 1, 2], [0, 0, 0, 0])
    with pytest.raises(ValueError):
        TabulatedPerturbation([0, 1], [0, 0])


def test_scaled_data_keeps_reference(prm0):
    d = make_constant_stretch_data(prm0, 1, 2, RationalBump(-0.01, 0, 1, 1), RationalBump(0.01, 0, 1, 1))
    assert d.scaled(2.0).chi0.perturbation.amplitude == -0.02
    assert math.isclose(d.scaled(0.0).sigma1, 2.0)
