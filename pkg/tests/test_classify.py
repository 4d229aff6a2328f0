import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from classify import (check_conditions, class_thresholds, classify_many, coupling_sweep, couplings_from_fock,
                      critical_couplings, monotone_condition_v, signs_from_frustration, square_frustrated,
                      square_frustrated_coupling, triangular_anisotropic, triangular_classify, triangular_forward,
                      triangular_isotropic)
from dimer_weights import fock_params, frustration
from elliptic_kernel import HalfPeriod, TorusParams, jacobi
from errors import BoundaryCase, DomainError, FamilyMismatch, ParityObstruction
from lattice import square, triangular


# =============================================================================
# 필요 조건 / 결합 상수
# =============================================================================

def test_isotropic_family_three_passes_all_conditions(tri_dg, isotropic_am, tp_half):
    report = check_conditions(fock_params(tri_dg, isotropic_am, tp_half, family='III'))
    assert report.passed
    assert report.family == 'III'
    assert report.failures == []
    assert report.delta == [-1, -1]


def test_isotropic_couplings_match_closed_form(tri_dg, isotropic_am, tp_half):
    couplings = couplings_from_fock(fock_params(tri_dg, isotropic_am, tp_half, family='III'))
    K = float(tp_half.K.real)
    expected = 0.5 * math.asinh(abs(jacobi('ds', 2 * K / 3, tp_half).real) / 0.5)
    assert couplings.family == 'III'
    assert couplings.J == pytest.approx([expected] * 3, rel=1e-9)
    assert couplings.formula_gap < 1e-9
    assert couplings.delta == [-1, -1]


def test_wrong_half_period_fails_condition_two(tri_dg, make_angles, tp_half):
    am = make_angles(tri_dg, (0.0, 0.2, 0.55), 'I', tp_half)
    fp = fock_params(tri_dg, am, tp_half, rho=HalfPeriod(0, 0), t=0.5)
    report = check_conditions(fp)
    assert report.family is None
    assert 'II' in report.failures
    assert report.conditions['II'].witness == {'rho': '0'}
    with pytest.raises(FamilyMismatch):
        couplings_from_fock(fp)


def test_monotone_angles_satisfy_sufficient_condition(tri_dg, make_angles, tp_half):
    am = make_angles(tri_dg, (0.0, 0.2, 0.55), 'I', tp_half)
    assert monotone_condition_v(tri_dg, am)


def test_critical_couplings_are_small_modulus_limit(tri_dg, make_angles):
    tp = TorusParams.from_modulus(1e-3)
    am = make_angles(tri_dg, (0.0, 0.2, 0.55), 'I', tp)
    couplings = couplings_from_fock(fock_params(tri_dg, am, tp, family='I'))
    crit = critical_couplings(tri_dg, am, 'I')
    assert couplings.family == 'I'
    assert crit == pytest.approx(couplings.J, rel=1e-4)


def test_critical_couplings_family_three_is_infinite(tri_dg, isotropic_am):
    assert critical_couplings(tri_dg, isotropic_am, 'III') == [math.inf] * 3
    with pytest.raises(FamilyMismatch):
        critical_couplings(tri_dg, isotropic_am, 'IV')


# =============================================================================
# 프러스트레이션 → 부호
# =============================================================================

@settings(max_examples=10)
@given(st.lists(st.sampled_from([-1, 1]), min_size=12, max_size=12))
def test_signs_recover_frustration(eps):
    g = triangular(2, 2)
    delta = frustration(g, eps)
    recovered = signs_from_frustration(g, delta)
    assert frustration(g, recovered) == delta


def test_fully_frustrated_square_needs_doubled_domain():
    with pytest.raises(ParityObstruction) as exc:
        signs_from_frustration(square(1, 1), [-1])
    assert exc.value.witness['product'] == -1

    g = square(2, 2)
    eps = signs_from_frustration(g, [-1] * g.n_faces)
    assert frustration(g, eps) == [-1] * 4


def test_signs_input_validation():
    g = square(2, 2)
    with pytest.raises(DomainError):
        signs_from_frustration(g, [1, 1])
    with pytest.raises(DomainError):
        signs_from_frustration(g, [1, 0, 1, 1])


# =============================================================================
# 삼각 격자 분류
# =============================================================================

@given(st.floats(0.05, 20.0), st.floats(0.05, 20.0))
def test_threshold_ordering(x, y):
    a, b = max(x, y), min(x, y)
    S, T = class_thresholds(a, b)
    assert 0 <= S <= T <= b + 1e-12


def test_equal_couplings_are_class_three():
    point = triangular_classify((1.0, 1.0, 1.0))
    assert point.klass == 'S3'
    assert point.family == 'III'
    assert 0 < point.k < 1
    assert point.residual < 1e-8


@pytest.mark.parametrize("k", [0.2, 0.5, 0.9])
def test_isotropic_round_trip(k):
    fwd = triangular_isotropic(k)
    assert fwd.s[0] == pytest.approx(fwd.s[1]) == pytest.approx(fwd.s[2])
    back = triangular_classify(fwd.s)
    assert back.klass == 'S3'
    assert back.k == pytest.approx(k, rel=1e-7)


@pytest.mark.parametrize("k", [0.3, 0.5, 0.8])
def test_anisotropic_round_trip(k):
    fwd = triangular_anisotropic(k)
    assert fwd.klass == 'S1'
    back = triangular_classify(fwd.s)
    assert back.klass == fwd.klass
    assert back.k == pytest.approx(k, rel=1e-7)


def test_random_triples_round_trip():
    triples = np.random.default_rng(0).uniform(0.05, 5.0, (200, 3))
    checked = 0
    for s in triples:
        try:
            point = triangular_classify(s)
        except BoundaryCase:
            continue
        assert point.residual < 1e-8
        back = triangular_forward(point.klass, point.k, point.gamma)
        assert back.s == pytest.approx(tuple(s), rel=1e-8, abs=1e-8)
        checked += 1
    assert checked > 190


def test_forward_rejects_bad_angles():
    K = float(TorusParams.from_modulus(0.5).K.real)
    with pytest.raises(DomainError):
        triangular_forward('S3', 0.5, (K, K, K))
    with pytest.raises(DomainError):
        triangular_forward('S3', 0.5, (K, -K))
    with pytest.raises(DomainError):
        triangular_forward('S7', 0.5, (2 * K, -K, -K))


def test_boundary_cases_name_both_classes():
    # a = 3, b = 2 → S = 1
    with pytest.raises(BoundaryCase) as exc:
        triangular_classify((2.0, 3.0, 1.0))
    assert exc.value.witness['classes'] == ['S1', 'S2']
    assert exc.value.witness['k'] == 0.0

    T = class_thresholds(1.0, 1.0)[1]
    assert T == pytest.approx(1 / (2 * math.sqrt(2)))
    with pytest.raises(BoundaryCase) as exc:
        triangular_classify((1.0, 1.0, T))
    assert exc.value.witness['classes'] == ['S2', 'S3']
    assert exc.value.witness['k'] == 1.0


@pytest.mark.parametrize("s", [(-1.0, 1.0, 1.0), (1.0, 0.0, 0.0), (1.0, math.inf, 1.0), (1.0, 1.0)])
def test_classify_input_errors(s):
    with pytest.raises(DomainError):
        triangular_classify(s)


def test_classify_many_records_status():
    frame = classify_many([(1.0, 1.0, 1.0), (2.0, 3.0, 1.0), (-1.0, 1.0, 1.0)])
    assert list(frame['status'])[:2] == ['ok', 'S1/S2']
    assert list(frame['class'])[:2] == ['S3', 'boundary']
    assert frame['status'].iloc[2].startswith('DomainError')


# =============================================================================
# 정사각 격자 / 결합 곡선
# =============================================================================

def test_square_coupling_formula():
    # k = 0.6, k' = 0.8 → sinh 2J = √(0.8·1.8)/0.6 = 2
    assert math.sinh(2 * square_frustrated_coupling(0.6)) == pytest.approx(2.0, rel=1e-12)
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(DomainError):
            square_frustrated_coupling(bad)


@pytest.mark.parametrize("k", [0.2, 0.5, 0.8])
def test_square_frustrated_factorizes(k):
    fit = square_frustrated(k)
    assert fit.J == pytest.approx(square_frustrated_coupling(k))
    assert fit.J_plus > 0
    assert fit.residual < 1e-9
    assert set(fit.transform) == {'twist', 'flip', 'swapped'}


def test_coupling_sweep_columns():
    ks = [0.2, 0.5]
    assert list(coupling_sweep('square', ks).columns) == ['k', 'J']
    assert list(coupling_sweep('triangular-anisotropic', ks).columns) == ['k', 'J_1', 'J_2', 'J_3']
    iso = coupling_sweep('triangular-isotropic', ks)
    assert iso['J'].is_monotonic_decreasing or iso['J'].is_monotonic_increasing
    with pytest.raises(DomainError):
        coupling_sweep('hexagonal', ks)

