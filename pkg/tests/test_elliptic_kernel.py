import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from elliptic_kernel import (TH00, TH01, TH10, TH11, HalfPeriod, TorusParams, half_period_shift, identity_suite,
                             inverse_jacobi, jacobi, modular_normal_form, modulus_suite, theta)
from errors import DomainError, OutOfRange, PoleHit
from spectral import torus_samples


def test_modulus_roundtrip():
    tp = TorusParams.from_modulus(0.6)
    assert abs(tp.real_k - 0.6) < 1e-12
    assert abs(tp.K.real - special.ellipk(0.36)) < 1e-12
    assert tp.is_rectangular
    assert abs(tp.kprime.real - 0.8) < 1e-12


def test_trigonometric_degeneration():
    tp = TorusParams.from_modulus(0.0)
    assert tp.trig
    assert abs(tp.K.real - math.pi / 2) < 1e-15
    assert abs(jacobi('sn', 0.4, tp) - math.sin(0.4)) < 1e-14
    with pytest.raises(DomainError):
        identity_suite(tp, [0.1 + 0.2j])


@pytest.mark.parametrize("k", [1.0, -0.1, 1.5])
def test_modulus_out_of_range(k):
    with pytest.raises(DomainError):
        TorusParams.from_modulus(k)


def test_tau_must_be_in_upper_half_plane():
    with pytest.raises(DomainError):
        modulus_suite(-1.3j)


def test_identity_battery_passes():
    tp = TorusParams.from_tau(1.3j)
    results = identity_suite(tp, torus_samples(tp, 200, rng=np.random.default_rng(1)))
    failed = {name: r.max_residual for name, r in results.items() if not r.passed}
    assert not failed
    assert all(r.samples > 0 for r in results.values())
    assert max(r.samples for r in results.values()) >= 200


def test_identity_battery_skewed_tau():
    tp = TorusParams.from_tau(0.5 + 1.2j)
    results = identity_suite(tp, torus_samples(tp, 6))
    assert all(r.passed for r in results.values())


def test_addition_formula_at_fixed_point():
    tp = TorusParams.from_tau(1.3j)
    z, w = 0.2 + 0.1j, 0.3
    lhs = theta(TH11, z + w, tp) * theta(TH11, z - w, tp) * theta(TH00, 0.0, tp) ** 2
    rhs = theta(TH11, z, tp) ** 2 * theta(TH00, w, tp) ** 2 - theta(TH00, z, tp) ** 2 * theta(TH11, w, tp) ** 2
    assert abs(lhs - rhs) / abs(lhs) < 1e-11


def test_half_period_shift_to_odd_theta():
    tp = TorusParams.from_tau(1.3j)
    z = 0.17 - 0.05j
    lhs = theta(TH00, z + 0.5 + tp.tau / 2, tp)
    assert abs(lhs - half_period_shift(TH00, z, 1, 1, tp)) / abs(lhs) < 1e-11


@given(st.floats(-0.5, 0.5), st.floats(-0.4, 0.4))
def test_theta_parity(x, y):
    tp = TorusParams.from_tau(1.1j)
    z = complex(x, y)
    assert abs(theta(TH11, -z, tp) + theta(TH11, z, tp)) < 1e-11
    for char in (TH00, TH01, TH10):
        assert abs(theta(char, -z, tp) - theta(char, z, tp)) < 1e-11 * max(1.0, abs(theta(char, z, tp)))


@given(st.floats(0.0, 3.0), st.floats(-0.3, 0.3))
def test_jacobi_pythagorean(x, y):
    tp = TorusParams.from_modulus(0.7)
    u = complex(x, y * tp.Kprime.real)
    sn, cn, dn = (jacobi(name, u, tp) for name in ('sn', 'cn', 'dn'))
    scale = max(1.0, abs(sn) ** 2)
    assert abs(sn ** 2 + cn ** 2 - 1) < 1e-9 * scale
    assert abs(dn ** 2 + 0.49 * sn ** 2 - 1) < 1e-9 * scale


def test_jacobi_real_axis_matches_scipy():
    tp = TorusParams.from_modulus(0.3)
    sn, cn, dn, _ = special.ellipj(0.8, 0.09)
    assert abs(jacobi('sn', 0.8, tp) - sn) < 1e-14
    assert abs(jacobi('cd', 0.8, tp) - cn / dn) < 1e-14
    # 실수축 밖은 세타 몫 경로
    assert abs(jacobi('sn', 0.8 + 1e-9j, tp) - sn) < 1e-8


def test_inverse_sc_forward_residual():
    tp = TorusParams.from_modulus(0.3)
    u = inverse_jacobi('sc', 1.5, tp)
    assert 0 < u < tp.K.real
    assert abs(jacobi('sc', u, tp).real - 1.5) < 1e-12


def test_inverse_ds_range():
    tp = TorusParams.from_modulus(0.6)
    u = inverse_jacobi('ds', 2.0, tp)
    assert abs(jacobi('ds', u, tp).real - 2.0) < 1e-12
    with pytest.raises(OutOfRange):
        inverse_jacobi('ds', 0.5, tp)


def test_modular_normal_form():
    tau, word = modular_normal_form(0.3 + 0.2j)
    assert abs(tau) >= 1 - 1e-12
    assert abs(tau.real) <= 0.5 + 1e-12
    assert 'S' in word


def test_half_period_values():
    tau = 1.3j
    assert HalfPeriod(1, 1).value(tau) == pytest.approx(0.5 + 0.65j)
    assert HalfPeriod(0, 0).is_zero
    assert cmath.isclose(HalfPeriod(0, 1).value(tau), 0.65j)


@pytest.mark.parametrize("delta", [1e-6, 1e-9, 1e-12])
def test_near_pole_is_large_but_finite(delta):
    tp = TorusParams.from_modulus(0.5)
    value = jacobi('cs', delta, tp)
    assert math.isfinite(abs(value))
    assert abs(value) == pytest.approx(1 / delta, rel=1e-6)
    kp = tp.kprime.real
    assert abs(jacobi('sc', tp.K.real - delta, tp)) == pytest.approx(1 / (kp * delta), rel=1e-3)


def test_exact_pole_raises():
    tp = TorusParams.from_modulus(0.5)
    with pytest.raises(PoleHit):
        jacobi('cs', 0.0, tp)
    with pytest.raises(PoleHit):
        jacobi('ns', 0.0, tp)
