import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from classify import ising_model_from_fock
from dimer_weights import (coupling_assignment, dual_params, fisher_weights, fock_face_weights, fock_params,
                           frustration, from_signed_couplings, gauge_equivalent, ising_dimer_weights,
                           ising_face_weights, ising_face_weights_from_kmatrix, is_real_model, match_family,
                           modular_face_weights, weak_dual_couplings, weak_duality_report)
from elliptic_kernel import HalfPeriod, TorusParams
from errors import DegenerateCoupling, DomainError, FamilyMismatch, MalformedEmbedding
from lattice import build_fisher, build_GQ, random_angle_map, triangular


def test_frustration_product_is_one_on_torus():
    g = triangular(2, 2)
    rng = np.random.default_rng(0)
    for _ in range(5):
        eps = rng.choice([-1, 1], g.n_edges).tolist()
        assert math.prod(frustration(g, eps)) == 1


def test_coupling_assignment_validation():
    g = triangular()
    with pytest.raises(MalformedEmbedding):
        coupling_assignment([1, 1], [0.1, 0.2], g)
    with pytest.raises(DomainError):
        coupling_assignment([1, 2, 1], [0.1, 0.2, 0.3], g)
    with pytest.raises(DomainError):
        coupling_assignment([1, 1, 1], [0.1, -0.2, 0.3], g)


def test_signed_couplings_split():
    ca = from_signed_couplings(triangular(), [0.3, -0.5, 0.0])
    assert ca.eps == [1, -1, 1]
    assert ca.J == [0.3, 0.5, 0.0]
    assert ca.signed == [0.3, -0.5, 0.0]


@given(st.floats(0.01, 3.0))
def test_weak_dual_is_involution(j):
    j_star = weak_dual_couplings([j])[0]
    assert math.sinh(2 * j) * math.sinh(2 * j_star) == pytest.approx(1.0, rel=1e-12)
    assert weak_dual_couplings([j_star])[0] == pytest.approx(j, rel=1e-9)


def test_weak_dual_of_zero_coupling():
    with pytest.raises(DegenerateCoupling):
        weak_dual_couplings([0.0])


def test_edge_weights():
    g = triangular()
    ca = from_signed_couplings(g, [0.3, -0.5, 0.7])
    fw = fisher_weights(build_fisher(g), ca)
    assert fw[1] == pytest.approx(math.tanh(-0.5))
    assert fw[-1] == 1.0
    dw = ising_dimer_weights(build_GQ(g), ca)
    assert dw[3 * 2 + 0] == pytest.approx(math.tanh(-1.0))
    assert dw[3 * 2 + 1] == pytest.approx(1 / math.cosh(1.0))
    assert dw[3 * 2 + 2] == 1.0


def test_ising_face_weights_match_kmatrix(tri_dg):
    ca = from_signed_couplings(tri_dg.base, [0.3, -0.5, 0.7])
    assert gauge_equivalent(ising_face_weights(tri_dg, ca), ising_face_weights_from_kmatrix(tri_dg, ca))


def test_zero_coupling_face_weight_diverges(tri_dg):
    ca = from_signed_couplings(tri_dg.base, [0.3, 0.0, 0.7])
    with pytest.raises(DegenerateCoupling):
        ising_face_weights(tri_dg, ca)


def test_match_family(tp_half):
    assert match_family(HalfPeriod(1, 0), 0j, tp_half) == 'I'
    assert match_family(HalfPeriod(1, 0), 0.5, tp_half) == 'II'
    assert match_family(HalfPeriod(1, 1), 0.5 + tp_half.tau, tp_half) == 'III'
    assert match_family(HalfPeriod(0, 1), 0.5, tp_half) == 'other'


def test_unknown_family(tri_dg, tp_half, isotropic_am):
    with pytest.raises(FamilyMismatch):
        fock_params(tri_dg, isotropic_am, tp_half, family='IV')


def test_degenerate_t_rejected(tri_dg, tp_half, isotropic_am):
    with pytest.raises(DomainError):
        fock_params(tri_dg, isotropic_am, tp_half, rho=HalfPeriod(1, 1), t=0.5 + tp_half.tau / 2)


@pytest.mark.parametrize("family", ['I', 'II', 'III'])
def test_three_face_weight_forms_agree(tri_dg, tp_half, family):
    rng = np.random.default_rng(7)
    for _ in range(50):
        am = random_angle_map(tri_dg, family, tp_half, rng=rng, sorted_angles=True)
        fp = fock_params(tri_dg, am, tp_half, family=family)
        raw = fock_face_weights(fp, 'raw')
        assert gauge_equivalent(raw, fock_face_weights(fp, 'closed_form'))
        assert gauge_equivalent(raw, fock_face_weights(fp, 'table'))


@pytest.mark.parametrize("family", ['I', 'II', 'III'])
def test_families_are_real(tri_dg, tp_half, family):
    am = random_angle_map(tri_dg, family, tp_half, rng=np.random.default_rng(11), sorted_angles=True)
    assert is_real_model(fock_params(tri_dg, am, tp_half, family=family))


def test_gauge_closure_isotropic(tri_dg, tp_half, isotropic_am):
    fp = fock_params(tri_dg, isotropic_am, tp_half, family='III')
    ca = ising_model_from_fock(fp)
    report = gauge_equivalent(ising_face_weights(tri_dg, ca), fock_face_weights(fp, 'raw'))
    assert report.equivalent, report.to_dict()


def test_gauge_detects_perturbation(tri_dg, tp_half, isotropic_am):
    fp = fock_params(tri_dg, isotropic_am, tp_half, family='III')
    ca = ising_model_from_fock(fp)
    ca.J[0] *= 1.01
    report = gauge_equivalent(ising_face_weights(tri_dg, ca), fock_face_weights(fp, 'raw'))
    assert not report
    assert report.worst_gap > 1e-4


def test_dual_params_swaps_families(tri_dg, tp_half):
    am = random_angle_map(tri_dg, 'I', tp_half, rng=np.random.default_rng(2), sorted_angles=True)
    fp = fock_params(tri_dg, am, tp_half, family='I')
    assert dual_params(fp).family == 'II'
    assert dual_params(dual_params(fp)).family == 'I'


@pytest.mark.parametrize("k", [0.3, 0.6, 0.9])
@pytest.mark.parametrize("family", ['I', 'II', 'III'])
def test_weak_duality_product_is_one(tri_dg, family, k):
    tp = TorusParams.from_modulus(k)
    am = random_angle_map(tri_dg, family, tp, rng=np.random.default_rng(2), sorted_angles=True)
    report = weak_duality_report(fock_params(tri_dg, am, tp, family=family))
    products = np.array(list(report['products'].values()))
    ratios = np.array(list(report['ratios'].values()))
    assert len(products) == 3
    assert np.abs(products - 1).max() < 1e-10
    assert np.abs(ratios - 1).max() < 1e-10


def test_weak_duality_matches_dual_couplings(tri_dg, tp_half):
    am = random_angle_map(tri_dg, 'I', tp_half, rng=np.random.default_rng(4), sorted_angles=True)
    fp = fock_params(tri_dg, am, tp_half, family='I')
    weights = fock_face_weights(fp, 'closed_form')
    report = weak_duality_report(fp, 'closed_form')
    for f, product in report['products'].items():
        J = 0.5 * math.asinh(math.sqrt(-weights.values[f].real))
        J_star = weak_dual_couplings([J])[0]
        assert math.sinh(2 * J) ** 2 * math.sinh(2 * J_star) ** 2 == pytest.approx(product, rel=1e-10)


@pytest.mark.parametrize("which", ['S', 'T'])
def test_modular_invariance(tri_dg, which):
    tp = TorusParams.from_tau(0.2 + 1.1j)
    am = random_angle_map(tri_dg, 'I', tp, rng=np.random.default_rng(5))
    fp = fock_params(tri_dg, am, tp, rho=HalfPeriod(1, 0), t=0.13 + 0.21j)
    assert gauge_equivalent(fock_face_weights(fp, 'raw'), modular_face_weights(fp, which, 'raw'))
