import json

import numpy as np
import pytest

from elliptic_kernel import HalfPeriod, TorusParams
from errors import InconsistentLift, MalformedEmbedding, NotBipartite
from lattice import (FAMILY, angle_map, bipartite_coloring, build_dual, build_fisher, build_GQ, builtin_graph,
                     discrete_abel, extract_train_tracks, graph_from_json, hexagonal, is_isomorphic, is_isoradial,
                     pinched_torus, random_angle_map, square, triangular)


@pytest.mark.parametrize("name, counts", [
    ('triangular', (1, 3, 2)),
    ('hexagonal', (2, 3, 1)),
    ('square', (1, 2, 1)),
])
def test_builtin_counts(name, counts):
    g = builtin_graph(name)
    assert (g.n_vertices, g.n_edges, g.n_faces) == counts
    # 토러스: V - E + F = 0
    assert g.n_vertices - g.n_edges + g.n_faces == 0


def test_fundamental_domain_scaling():
    g = triangular(2, 3)
    assert (g.n_vertices, g.n_edges, g.n_faces) == (6, 18, 12)


def test_unknown_builtin():
    with pytest.raises(MalformedEmbedding):
        builtin_graph('kagome')


def test_triangular_dual_is_hexagonal():
    dual = build_dual(triangular())
    assert (dual.n_vertices, dual.n_edges, dual.n_faces) == (2, 3, 1)
    assert is_isomorphic(dual, hexagonal())


def test_square_self_dual():
    assert is_isomorphic(build_dual(square()), square())


@pytest.mark.parametrize("g", [hexagonal(2, 1), triangular(2, 2), square(2, 2)])
def test_double_dual(g):
    assert is_isomorphic(build_dual(build_dual(g)), g)


def test_bipartite_coloring():
    colors = bipartite_coloring(hexagonal(2, 2))
    assert sorted(set(colors)) == [0, 1]
    with pytest.raises(NotBipartite):
        bipartite_coloring(triangular())
    assert bipartite_coloring(square(), raise_on_fail=False) is None


def test_triangular_tracks():
    system = extract_train_tracks(triangular())
    assert system.orientation == 'dual'
    assert len(system.tracks) == 3
    assert system.homology_sum() == (0, 0)
    assert is_isoradial(triangular(), system)


def test_pinched_torus_not_isoradial():
    assert not is_isoradial(pinched_torus())


def test_gq_registry(tri_dg):
    kinds = tri_dg.face_kind
    assert kinds.count('square') == 3
    assert kinds.count('primal') == 1
    assert kinds.count('dual') == 2
    # 사각 면: 원 평행 2, 쌍대 평행 2
    for f in tri_dg.faces_of_kind('square'):
        roles = sorted(tri_dg.graph.edge_roles[y >> 1] for y in tri_dg.graph.faces[f])
        assert roles == ['dual', 'dual', 'primal', 'primal']
    assert len(tri_dg.tracks.tracks) == 6
    assert sorted(tri_dg.track_parent.values()) == [(t, d) for t in range(3) for d in (-1, 1)]


def test_fisher_graph_counts():
    dg = build_fisher(triangular())
    assert dg.graph.n_vertices == 18
    assert dg.face_kind.count('triangle') == 6
    assert dg.face_kind.count('vertex') == 1
    assert dg.face_kind.count('face') == 2


def test_json_roundtrip():
    g = hexagonal(2, 2)
    h = graph_from_json(json.dumps(g.to_json()))
    assert h.summary().split(':')[1] == g.summary().split(':')[1]
    assert is_isomorphic(g, h)


def test_json_rejects_unknown_endpoint():
    data = triangular().to_json()
    data['edges'][0]['endpoints'] = [0, 7]
    with pytest.raises(MalformedEmbedding):
        graph_from_json(data)


def test_json_rejects_missing_fields():
    with pytest.raises(MalformedEmbedding):
        graph_from_json({'vertices': 'nope'})


def test_angle_map_count_mismatch(tri_dg, tp_half):
    with pytest.raises(MalformedEmbedding):
        angle_map(tri_dg, [0.0, 0.5], HalfPeriod(1, 0), tp_half)


def test_backward_angles_shift_by_rho(tri_dg, tp_half):
    am = angle_map(tri_dg, [0.1, 0.4, 0.7], HalfPeriod(1, 1), tp_half)
    for t in range(3):
        assert abs(am.backward[t] - am.forward[t] - (0.5 + tp_half.tau / 2)) < 1e-15


def test_family_three_needs_bipartite_dual(tp_half):
    dg = build_GQ(square())
    with pytest.raises(NotBipartite):
        random_angle_map(dg, 'III', tp_half, rng=np.random.default_rng(0))


def test_family_three_undefined_at_trig(tri_dg):
    with pytest.raises(NotBipartite):
        random_angle_map(tri_dg, 'III', TorusParams.from_modulus(0.0))


@pytest.mark.parametrize("family", sorted(FAMILY))
def test_abel_closed_form(tri_dg, tp_half, family):
    am = random_angle_map(tri_dg, family, tp_half, rng=np.random.default_rng(4), sorted_angles=True)
    abel = discrete_abel(tri_dg, am, am.rho, tp_half)
    rv = am.rho.value(tp_half.tau)
    for f, kind in enumerate(tri_dg.face_kind):
        if kind == 'primal':
            assert tp_half.equal_mod_lattice(abel[f], 0)
        elif kind == 'dual':
            assert tp_half.equal_mod_lattice(abel[f], rv)


def test_abel_detects_wrong_rho(tri_dg, tp_half):
    am = angle_map(tri_dg, [0.1, 0.4, 0.7], HalfPeriod(1, 0), tp_half)
    with pytest.raises(InconsistentLift):
        discrete_abel(tri_dg, am, HalfPeriod(0, 1), tp_half)
