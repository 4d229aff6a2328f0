import numpy as np
import pytest
from hypothesis import given, strategies as st

from dimer_weights import coupling_assignment, from_signed_couplings
from errors import NoAssignment, SupportMismatch
from kasteleyn_poly import (LaurentPoly2, brute_force_pfaffian, check_central_symmetry, check_kasteleyn_signs,
                            det_laurent, dimer_charpoly, dimer_kmatrix, exhaustive_kasteleyn_signs,
                            find_kasteleyn_signs, fisher_charpoly, fisher_kmatrix, proportionality,
                            proportionality_scaled, proportionality_up_to_twist, solve_face_parity)
from lattice import build_fisher, hexagonal, square, triangular

coeffs = st.floats(-3, 3, allow_nan=False).filter(lambda c: abs(c) > 1e-3)
monomials = st.dictionaries(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), coeffs, min_size=1, max_size=5)


def random_couplings(g, seed):
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], g.n_edges)
    return from_signed_couplings(g, (signs * rng.uniform(0.2, 1.2, g.n_edges)).tolist())


@given(monomials, monomials)
def test_product_evaluates_pointwise(a, b):
    p, q = LaurentPoly2(a), LaurentPoly2(b)
    z, w = 0.7 + 0.3j, -1.1 + 0.2j
    assert abs((p * q).evaluate(z, w) - p.evaluate(z, w) * q.evaluate(z, w)) < 1e-9 * (1 + abs(p.evaluate(z, w) * q.evaluate(z, w)))


def test_transforms():
    p = LaurentPoly2({(1, 0): 2.0, (0, -1): 3.0, (1, 1): 1.0})
    assert p.twisted(-1, 1)[(1, 0)] == -2.0
    assert p.twisted(1, -1)[(0, -1)] == -3.0
    assert p.inverted()[(-1, -1)] == 1.0
    assert p.swapped()[(-1, 0)] == 3.0
    assert p.scaled(2.0, 1.0)[(1, 1)] == 2.0


def test_central_symmetry_extremes():
    assert check_central_symmetry(LaurentPoly2.monomial(1, 0)) == 1.0
    p = LaurentPoly2({(1, 0): 2.0, (0, 1): -1.0, (0, 0): 5.0})
    symmetric = (p + p.inverted()) * 0.5
    assert check_central_symmetry(symmetric) == 0.0


def test_newton_polygon_square():
    p = LaurentPoly2({(1, 0): 1, (-1, 0): 1, (0, 1): 1, (0, -1): 1, (0, 0): 4})
    assert sorted(p.newton_polygon()) == [(-1, 0), (0, -1), (0, 1), (1, 0)]


def test_json_roundtrip():
    p = LaurentPoly2({(1, -2): 1.5 - 0.5j, (0, 0): 2.0})
    q = LaurentPoly2.from_json(p.to_json())
    assert q.terms == p.terms


def test_hexagonal_kasteleyn_phases():
    g = hexagonal(2, 2)
    signs = find_kasteleyn_signs(g, bipartite=True)
    assert check_kasteleyn_signs(g, signs, bipartite=True) == []


def test_fisher_kasteleyn_signs():
    dg = build_fisher(triangular())
    signs = find_kasteleyn_signs(dg.graph, bipartite=False)
    assert check_kasteleyn_signs(dg.graph, signs, bipartite=False) == []


def test_odd_vertex_count_has_no_assignment():
    with pytest.raises(NoAssignment):
        find_kasteleyn_signs(triangular(), bipartite=False)


def test_exhaustive_agrees_with_tree_solution():
    g = hexagonal()
    found = exhaustive_kasteleyn_signs(g, bipartite=True)
    assert found
    assert all(check_kasteleyn_signs(g, s, bipartite=True) == [] for s in found)


def test_face_parity_target():
    g = square(2, 2)
    bits = solve_face_parity(g, bipartite=False, target=[1, 1, 1, 1])
    assert bits is not None
    assert sum(bits) >= 2


def test_pfaffian_squared_is_det():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(6, 6))
    a = a - a.T
    assert abs(brute_force_pfaffian(a) ** 2 - np.linalg.det(a)) < 1e-9


def test_cofactor_and_interpolation_agree():
    g = hexagonal()
    ca = random_couplings(g, 0)
    _, m = dimer_kmatrix(g, ca)
    p = det_laurent(m, 'cofactor')
    q = det_laurent(m, 'interpolate')
    assert (p - q).max_coeff() <= 1e-10 * p.max_coeff()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fisher_charpoly_central_symmetry(seed):
    g = triangular()
    p = fisher_charpoly(g, random_couplings(g, seed))
    assert check_central_symmetry(p) < 1e-10


def test_fisher_matches_determinant_at_a_point():
    g = triangular()
    ca = random_couplings(g, 5)
    _, m = fisher_kmatrix(g, ca)
    p = det_laurent(m)
    z, w = 0.8 + 0.6j, 1.2 - 0.1j
    direct = np.linalg.det(m.evaluate(z, w))
    assert abs(p.evaluate(z, w) - direct) < 1e-8 * max(1.0, abs(direct))


def test_fisher_kmatrix_is_skew():
    _, m = fisher_kmatrix(triangular(), random_couplings(triangular(), 2))
    assert m.skew_residual() < 1e-12


@pytest.mark.parametrize("seed", range(6))
def test_ising_and_dimer_polynomials_proportional(seed):
    g = triangular()
    ca = random_couplings(g, seed)
    p, q = fisher_charpoly(g, ca), dimer_charpoly(g, ca)
    c, residual, transform = proportionality_up_to_twist(p, q)
    assert set(transform) >= {'twist', 'flip'}
    assert residual < 1e-9
    assert abs(complex(c).imag) < 1e-9 * abs(c)


def test_proportionality_rejects_different_support():
    with pytest.raises(SupportMismatch):
        proportionality(LaurentPoly2.monomial(1, 0), LaurentPoly2.monomial(0, 1))


def test_scaled_proportionality_recovers_scale():
    p = LaurentPoly2({(1, 0): 1.0, (0, 1): 2.0, (0, 0): -3.0, (-1, -1): 0.5})
    q = p.scaled(0.5, 2.0) * 3.0
    c, lam, mu, residual = proportionality_scaled(q, p)
    assert residual < 1e-12
    assert abs(lam - 0.5) < 1e-12 and abs(mu - 2.0) < 1e-12


def test_ferromagnetic_square_polynomial_is_real():
    g = square()
    ca = coupling_assignment([1, 1], [0.4, 0.4], g)
    p = fisher_charpoly(g, ca)
    assert max(abs(c.imag) for _, c in p) < 1e-12 * p.max_coeff()
