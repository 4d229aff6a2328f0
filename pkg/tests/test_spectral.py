import math

import numpy as np
import pytest

from classify import ising_model_from_fock, signs_from_frustration, square_frustrated_coupling
from dimer_weights import coupling_assignment, fock_params, from_signed_couplings
from elliptic_kernel import HalfPeriod, TorusParams
from errors import DomainError, GridOnZero, IllConditioned, NonMeromorphic
from kasteleyn_poly import LaurentPoly2, fisher_charpoly
from lattice import angle_map, random_angle_map, square, triangular
from spectral import (CurveParam, TrackTerm, build_parameterization, central_symmetry_residual, conjugation_residual,
                      coupling_term, curve_param_from_tracks, curve_residual, fit_scaling, free_energy,
                      free_energy_report, model_charpoly, sample_amoeba, sample_real_locus, torus_samples)


@pytest.fixture
def family_one(tri_dg, tp_half):
    am = random_angle_map(tri_dg, 'I', tp_half, rng=np.random.default_rng(3), sorted_angles=True)
    ev = build_parameterization(curve_param_from_tracks(tri_dg, am, tp_half), tp_half)
    return am, ev


def test_parameterization_is_doubly_periodic(family_one, tp_half):
    _, ev = family_one
    u = torus_samples(tp_half, 10)
    z0, w0 = ev(u)
    z1, w1 = ev(u + tp_half.tau)
    assert np.allclose(z0, z1, rtol=1e-9)
    assert np.allclose(w0, w1, rtol=1e-9)


def test_unbalanced_angles_are_not_meromorphic(tp_half):
    cp = CurveParam([TrackTerm(0, (0, 1), 0.1, 1, 0), TrackTerm(1, (0, -1), 0.3, -1, 0)])
    with pytest.raises(NonMeromorphic):
        build_parameterization(cp, tp_half)


def test_central_symmetry(family_one):
    am, ev = family_one
    assert central_symmetry_residual(ev, am.rho) < 1e-9


def test_conjugation_symmetry(family_one):
    _, ev = family_one
    assert conjugation_residual(ev) < 1e-9


def test_parameterization_lies_on_spectral_curve(tri_dg, tp_half, isotropic_am):
    fp = fock_params(tri_dg, isotropic_am, tp_half, family='III')
    ca = ising_model_from_fock(fp)
    p = model_charpoly(tri_dg.base, ca)
    ev = build_parameterization(curve_param_from_tracks(tri_dg, isotropic_am, tp_half), tp_half)
    fit = fit_scaling(p, ev)
    assert fit.residual < 1e-8
    assert fit.lam != 0 and fit.mu != 0


def test_fit_rejects_constant_polynomial(family_one):
    _, ev = family_one
    with pytest.raises(IllConditioned):
        fit_scaling(LaurentPoly2.constant(2.0), ev)


def test_amoeba_from_parameterization(family_one):
    _, ev = family_one
    frame = sample_amoeba(ev, resolution=20)
    assert list(frame.columns) == ['x', 'y', 'label']
    assert 0 < len(frame) <= 400
    assert set(frame['label']) == {'torus'}
    assert np.isfinite(frame[['x', 'y']].to_numpy()).all()


def test_amoeba_from_polynomial_slices():
    g = triangular()
    p = fisher_charpoly(g, from_signed_couplings(g, [0.4, 0.6, -0.5]))
    frame = sample_amoeba(p, resolution=16, radii=5, log_range=2.0)
    assert set(frame['label']) <= {'slice_z', 'slice_w'}
    assert len(frame) > 0
    pts = frame[frame['label'] == 'slice_z']
    assert len(pts)


@pytest.mark.parametrize("resolution", [0, -3])
def test_amoeba_resolution_must_be_positive(family_one, resolution):
    _, ev = family_one
    with pytest.raises(DomainError):
        sample_amoeba(ev, resolution=resolution)


def test_real_locus_components(family_one):
    _, ev = family_one
    frame, dropped = sample_real_locus(ev, n_points=200)
    assert set(frame['label']) == {'real', 'real+tau/2'}
    assert len(frame) + dropped == 400


def test_real_locus_needs_rectangular_tau(tri_dg):
    tp = TorusParams.from_tau(0.3 + 1.1j)
    am = angle_map(tri_dg, [0.0, 0.3, 0.6], HalfPeriod(1, 0), tp)
    ev = build_parameterization(curve_param_from_tracks(tri_dg, am, tp), tp)
    with pytest.raises(DomainError):
        sample_real_locus(ev)


def test_coupling_term():
    assert coupling_term([0.0, 0.0]) == 0.0
    assert coupling_term([0.5]) == pytest.approx(-0.5 * math.log(math.cosh(0.5)))


def test_free_energy_converges_off_criticality():
    g = triangular()
    ca = from_signed_couplings(g, [0.2, 0.25, 0.3])
    p = fisher_charpoly(g, ca)
    report = free_energy_report(p, 128, coupling_term(ca.J))
    assert report['richardson_gap'] < 1e-10
    assert free_energy(p, 128, coupling_term(ca.J)) == pytest.approx(report['value'])


def frustrated_square_energy(k, n):
    g = square(2, 2)
    eps = signs_from_frustration(g, [-1] * g.n_faces)
    ca = coupling_assignment(eps, [square_frustrated_coupling(k)] * g.n_edges, g)
    return free_energy_report(fisher_charpoly(g, ca), n, coupling_term(ca.J))


def test_frustrated_square_energy_converges():
    report = frustrated_square_energy(0.5, 512)
    assert report['richardson_gap'] < 1e-6
    assert np.isfinite(report['value_2n'])


def test_frustrated_square_curvature_grows_near_zero_modulus():
    def curvature(k):
        h = k / 10
        f = [frustrated_square_energy(x, 256)['value_2n'] for x in (k - h, k, k + h)]
        return abs(f[0] - 2 * f[1] + f[2]) / h ** 2

    values = [curvature(k) for k in (0.2, 0.1, 0.05)]
    assert values[0] < values[1] < values[2]


def test_free_energy_is_gauge_invariant():
    g = square(2, 2)
    J = [0.3] * g.n_edges
    eps = [1] * g.n_edges
    flipped = list(eps)
    # 정점 0 주변 간선 부호를 모두 뒤집어도 같은 모형
    for d in g.rotation[0]:
        flipped[d >> 1] *= -1
    f0 = free_energy(fisher_charpoly(g, coupling_assignment(eps, J, g)), 16)
    f1 = free_energy(fisher_charpoly(g, coupling_assignment(flipped, J, g)), 16)
    assert f0 == pytest.approx(f1, abs=1e-10)


def test_free_energy_zero_polynomial():
    with pytest.raises(GridOnZero):
        free_energy(LaurentPoly2(), 8)


def test_free_energy_grid_must_be_positive():
    with pytest.raises(DomainError):
        free_energy(LaurentPoly2.constant(1.0), 0)


def test_curve_residual_zero_on_curve():
    p = LaurentPoly2({(1, 0): 1.0, (0, 1): 1.0, (0, 0): -2.0})
    z = np.array([0.5 + 0.1j, 1.5 - 0.2j])
    assert curve_residual(p, z, 2 - z) < 1e-15
