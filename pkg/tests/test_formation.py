import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emff.amff import allocate_pair, approx_avg_force
from emff.formation import DecentralizationError, FormationGraph, LocalView, desired_force_shape, neighbor_views

from .strategies import separations, vectors


def line_graph(**kw):
    args = dict(n=3, edges={(1, 2), (1, 3)}, alpha={(1, 2): 0.0158, (1, 3): 0.0158}, beta=7.38,
                desired={(1, 2): [0.42, 0, 0], (1, 3): [-0.45, 0, 0]}, rho={(1, 2): 0.00136, (1, 3): 0.00136},
                gamma={(1, 2): 0.8, (1, 3): 0.8})
    args.update(kw)
    return FormationGraph(**args)


def test_line_graph_neighbors():
    g = line_graph()
    assert neighbor_views(g, 1) == [2, 3]
    assert neighbor_views(g, 2) == [1]
    assert neighbor_views(g, 3) == [1]
    assert (2, 3) not in g.edges


def test_two_satellite_neighbors():
    g = FormationGraph(2, {(1, 2)}, {(1, 2): 0.0158}, 6.89, {(1, 2): [0.45, 0, 0]})
    assert neighbor_views(g, 1) == [2]


def test_unknown_vertex():
    with pytest.raises(KeyError):
        neighbor_views(line_graph(), 4)


def test_completion_rules():
    g = line_graph()
    assert g.gamma[(2, 1)] == pytest.approx(1.25)
    np.testing.assert_array_equal(g.desired[(3, 1)], [0.45, 0, 0])
    assert g.gains(2, 1) == (0.0158, 7.38, 0.00136, pytest.approx(1.25))
    assert g.gains(2, 3)[0] == 0.0


@pytest.mark.parametrize("kw", [
    dict(edges={(1, 2)}, alpha={(1, 2): 0.0158}, desired={(1, 2): [0.4, 0, 0]}),        # disconnected
    dict(alpha={(1, 2): 0.0158, (1, 3): 0.0}),                                          # edge with zero gain
    dict(alpha={(1, 2): 0.0158, (1, 3): 0.0158, (2, 3): 0.01}),                         # gain on a non-edge
    dict(beta=0.0),
    dict(rho={(1, 2): -1.0}),
    dict(gamma={(1, 2): 0.8, (2, 1): 0.8}),                                             # not reciprocal
    dict(desired={(1, 2): [0.4, 0, 0], (2, 1): [0.4, 0, 0], (1, 3): [-0.45, 0, 0]}),    # not antisymmetric
    dict(edges={(1, 1), (1, 3)}),
])
def test_graph_invariants(kw):
    with pytest.raises(ValueError):
        line_graph(**kw)


def test_desired_force_zero_error():
    np.testing.assert_array_equal(desired_force_shape([0.4, 0, 0], [0, 0, 0], [0.4, 0, 0], 0.0158, 6.89, 3.8), 0)


def test_desired_force_zero_gain():
    np.testing.assert_array_equal(desired_force_shape([0.4, 0, 0], [0.1, 0, 0], [0.3, 0, 0], 0.0, 6.89, 3.8), 0)


@given(separations, vectors(), vectors(), st.floats(1e-4, 1.0), st.floats(0.1, 20.0), st.floats(0.1, 20.0))
def test_spring_dashpot_composition(r, v, d, alpha, beta, m):
    f_star = desired_force_shape(r, v, d, alpha, beta, m)
    g, h = allocate_pair(r, f_star)
    expected = -m * alpha * ((r - d) + beta * v)
    got = approx_avg_force(r, g, h)
    assert np.linalg.norm(got - expected) <= 1e-9 * max(np.linalg.norm(expected), 1e-12 * m * alpha)


def test_local_view_blocks_non_neighbor_pairs():
    g = line_graph()
    data = {p: float(k) for k, p in enumerate([(1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)])}
    v2 = LocalView(g, 2, data)
    assert v2[(2, 1)] == data[(2, 1)]
    with pytest.raises(DecentralizationError):
        v2[(2, 3)]
    with pytest.raises(DecentralizationError):
        v2[(1, 3)]  # satellite 3 is not a neighbor of 2
    v1 = LocalView(g, 1, data)
    with pytest.raises(DecentralizationError):
        v1[(2, 3)]  # not an edge
    assert v1.log == []
