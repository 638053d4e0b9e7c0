import pickle
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synchrony.errors import DisconnectedGraphWarning, DuplicateEdge, InvalidDegree, ParseError, SelfLoop
from synchrony.netgen import (
    Graph,
    NetworkSpec,
    load_edge_list,
    make_complete,
    make_regular_ring,
    make_small_world,
    write_edge_list,
)


def _bfs_reach(graph):
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in graph.adjacency[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == graph.n


def test_ring_c6():
    g = make_regular_ring(6, 2)
    assert g.n_edges == 6
    assert set(g.degrees.tolist()) == {2}
    assert g.adjacency[0] == (1, 5)
    assert g.connected


def test_ring_n10_k4():
    g = make_regular_ring(10, 4)
    assert g.adjacency[0] == (1, 2, 8, 9)
    assert all(len(a) == 4 for a in g.adjacency)
    assert g.connected


@pytest.mark.parametrize("n,k", [(4, 4), (6, 1), (6, 3), (5, 0)])
def test_ring_bad_degree(n, k):
    with pytest.raises(InvalidDegree):
        make_regular_ring(n, k)


def test_complete():
    g = make_complete(5)
    assert g.n_edges == 10
    assert g.kind == "complete"
    with pytest.raises(InvalidDegree):
        make_complete(1)


def test_small_world_p0_is_lattice():
    g = make_small_world(NetworkSpec(50, 4, 0.0, seed=1))
    assert g.adjacency == make_regular_ring(50, 4).adjacency


def test_small_world_p03_reproducible():
    a = make_small_world(NetworkSpec(50, 4, 0.3, seed=1))
    b = make_small_world(NetworkSpec(50, 4, 0.3, seed=1))
    assert a == b
    assert a.connected
    assert a.mean_degree() == pytest.approx(4.0)
    assert a != make_regular_ring(50, 4)


def test_small_world_large():
    g = make_small_world(NetworkSpec(500, 6, 0.3, seed=7))
    assert g.connected
    assert g.n_edges == 1500


def test_odd_degree_needs_even_n():
    g = make_small_world(NetworkSpec(50, 5, 0.0, seed=0))
    assert g.n_edges == 125
    with pytest.raises(InvalidDegree):
        NetworkSpec(51, 5)


@pytest.mark.parametrize("kw", [dict(n=2, d=2), dict(n=10, d=10), dict(n=10, d=4, p_rewire=1.5)])
def test_spec_validation(kw):
    with pytest.raises((ValueError, InvalidDegree)):
        NetworkSpec(**kw)


@settings(max_examples=30, deadline=None)
@given(st.integers(6, 60), st.sampled_from([2, 4]), st.floats(0, 1), st.integers(0, 2**31))
def test_rewiring_invariants(n, d, p, seed):
    g = make_small_world(NetworkSpec(n, d, p, seed))
    assert g.n_edges == n * d // 2
    assert g.degrees.min() >= 1
    assert g.connected == _bfs_reach(g)
    assert g == make_small_world(NetworkSpec(n, d, p, seed))
    # CSR mirror agrees with the adjacency tuples
    for u in range(n):
        assert tuple(g.indices[g.indptr[u]:g.indptr[u + 1]]) == g.adjacency[u]


def test_graph_is_immutable():
    g = make_regular_ring(6, 2)
    with pytest.raises(AttributeError):
        g.n = 7
    with pytest.raises(ValueError):
        g.indices[0] = 3


def test_bipartite():
    assert make_regular_ring(6, 2).is_bipartite()
    assert not make_regular_ring(7, 2).is_bipartite()
    assert not make_complete(3).is_bipartite()


def test_load_path_graph(tmp_path):
    p = tmp_path / "g.edges"
    p.write_text("0 1\n1 2")
    g = load_edge_list(p)
    assert g.n == 3
    assert g.edges() == [(0, 1), (1, 2)]


@pytest.mark.parametrize("text,err", [
    ("0 0", SelfLoop),
    ("0 1\n0 1", DuplicateEdge),
    ("0 1\n1 0", DuplicateEdge),
    ("", ParseError),
    ("0 x", ParseError),
    ("0 1 2", ParseError),
])
def test_load_errors(tmp_path, text, err):
    p = tmp_path / "g.edges"
    p.write_text(text)
    with pytest.raises(err):
        load_edge_list(p)


def test_load_comments_and_disconnected(tmp_path):
    p = tmp_path / "g.edges"
    p.write_text("# two pieces\n0 1\n2 3  # tail\n")
    with pytest.warns(DisconnectedGraphWarning):
        g = load_edge_list(p)
    assert not g.connected


def test_pickle_round_trip():
    g = make_small_world(NetworkSpec(30, 4, 0.3, seed=3))
    h = pickle.loads(pickle.dumps(g))
    assert h == g and h.kind == g.kind
    assert np.array_equal(h.indptr, g.indptr)


def test_round_trip(tmp_path):
    g = make_small_world(NetworkSpec(30, 4, 0.3, seed=3))
    p = tmp_path / "g.edges"
    write_edge_list(g, p)
    assert load_edge_list(p) == g


def test_from_edges_rejects_self_loop():
    with pytest.raises(SelfLoop):
        Graph.from_edges(3, [(1, 1)])
    assert np.array_equal(Graph.from_edges(3, [(0, 1), (1, 2)]).degrees, [1, 2, 1])
