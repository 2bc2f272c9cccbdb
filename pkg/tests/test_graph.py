import networkx as nx
import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from conftest import cycle_graph, path_graph, random_graph
from core.errors import GraphError
from core.graph import (
    affinity,
    build_graph,
    hadamard_disjoint,
    normalize_adjacency,
    order_matrices,
    overlapping_pairs,
    power_support,
    power_supports,
)


def to_networkx(g) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(g.n))
    graph.add_edges_from(g.edges.tolist())
    return graph


# ========== build_graph ==========

def test_build_graph_drops_duplicates_and_self_loops():
    g = build_graph([(0, 1), (1, 0), (1, 1), (0, 1)], 3)
    assert g.edge_count == 1
    assert g.dropped == 3
    assert g.adjacency.nnz == 2
    assert g.edges.tolist() == [[0, 1]]


def test_build_graph_is_symmetric_and_sorted():
    g = build_graph([(2, 0), (1, 2)], 3)
    assert (g.adjacency != g.adjacency.T).nnz == 0
    assert g.neighbors(2).tolist() == [0, 1]
    assert g.degrees.tolist() == [1, 1, 2]


@pytest.mark.parametrize("edges", [[(0, 3)], [(-1, 0)]])
def test_build_graph_rejects_out_of_range(edges):
    with pytest.raises(GraphError):
        build_graph(edges, 3)


def test_build_graph_without_edges():
    g = build_graph([], 1)
    assert g.n == 1
    assert g.edge_count == 0


def test_build_graph_rejects_float_indices():
    with pytest.raises(GraphError):
        build_graph(np.array([[0.7, 1.0]]), 3)
    with pytest.raises(GraphError):
        build_graph([(0.0, 1.5)], 3)


# ========== Normalización ==========

def test_affinity_single_edge():
    S = affinity(build_graph([(0, 1)], 2)).to_dense()
    assert_allclose(S, np.full((2, 2), 0.5), atol=1e-15)


def test_affinity_isolated_node_is_identity_row():
    S = affinity(build_graph([(0, 1)], 3)).to_dense()
    assert S[2, 2] == 1.0
    assert S[2, :2].tolist() == [0.0, 0.0]


def test_affinity_matches_dense_formula():
    g = random_graph(15, 0.3, seed=3)
    A = g.adjacency.toarray() + np.eye(g.n)
    d = A.sum(axis=1)
    expected = A / np.sqrt(np.outer(d, d))
    assert_allclose(affinity(g).to_dense(), expected, atol=1e-15)


def test_normalize_adjacency_rejects_negative_entries():
    with pytest.raises(GraphError):
        normalize_adjacency(sp.csr_matrix(np.array([[0.0, -1.0], [-1.0, 0.0]])))


# ========== Matrices de orden k ==========

def test_path_order_counts(p4):
    orders = order_matrices(p4, 4)
    assert [o.nnz for o in orders] == [6, 4, 2, 0]
    assert orders[2].entries.tolist() == [[0, 3], [3, 0]]


def test_first_order_equals_adjacency():
    g = random_graph(25, 0.15, seed=1)
    first = order_matrices(g, 1)[0]
    assert np.array_equal(first.matrix.indptr, g.adjacency.indptr)
    assert np.array_equal(first.matrix.indices, g.adjacency.indices)


@pytest.mark.parametrize("seed", range(20))
def test_order_matrices_match_shortest_paths(seed):
    g = random_graph(30, 0.08, seed=seed)
    K = 5
    orders = order_matrices(g, K)
    lengths = dict(nx.all_pairs_shortest_path_length(to_networkx(g), cutoff=K))

    for order in orders:
        expected = {(i, j) for i, reach in lengths.items() for j, d in reach.items() if d == order.k}
        assert {tuple(pair) for pair in order.entries.tolist()} == expected


def test_unreachable_pairs_in_no_order():
    g = build_graph([(0, 1), (2, 3)], 4)
    orders = order_matrices(g, 3)
    assert [o.nnz for o in orders] == [4, 0, 0]


@pytest.mark.parametrize("seed", range(100))
def test_distance_orders_are_disjoint(seed):
    g = random_graph(30, 0.1, seed=seed)
    assert overlapping_pairs(order_matrices(g, 5)) == []


@pytest.mark.parametrize("seed", range(30))
def test_orders_lie_inside_power_supports(seed):
    g = random_graph(20, 0.15, seed=seed)
    for order in order_matrices(g, 5):
        walks = {tuple(pair) for pair in power_support(g, order.k).entries.tolist()}
        assert {tuple(pair) for pair in order.entries.tolist()} <= walks


@pytest.mark.parametrize("seed", range(20))
def test_orders_cover_all_reachable_pairs(seed):
    g = random_graph(20, 0.2, seed=seed)
    graph = to_networkx(g)
    if not nx.is_connected(graph):
        chain = np.column_stack([np.arange(g.n - 1), np.arange(1, g.n)])
        g = build_graph(np.vstack([g.edges, chain]), g.n)
        graph = to_networkx(g)
    K = nx.diameter(graph)
    assert sum(order.nnz for order in order_matrices(g, K)) == g.n * (g.n - 1)


@pytest.mark.parametrize("seed", range(10))
def test_orders_plus_unreachable_pairs_fill_off_diagonal(seed):
    g = random_graph(24, 0.06, seed=seed)
    sizes = [len(component) for component in nx.connected_components(to_networkx(g))]
    unreachable = g.n * (g.n - 1) - sum(s * (s - 1) for s in sizes)
    total = sum(order.nnz for order in order_matrices(g, g.n - 1))
    assert total + unreachable == g.n * (g.n - 1)


def test_order_matrices_independent_of_threads():
    g = random_graph(80, 0.05, seed=11)
    serial = order_matrices(g, 4, threads=1)
    parallel = order_matrices(g, 4, threads=4)
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.matrix.indptr, b.matrix.indptr)
        assert np.array_equal(a.matrix.indices, b.matrix.indices)


def test_order_matrices_rejects_bad_order(p4):
    with pytest.raises(GraphError):
        order_matrices(p4, 0)


# ========== Potencias ==========

def test_power_supports_overlap_on_cycle(c4):
    supports = power_supports(c4, 3)
    overlaps = overlapping_pairs(supports)
    assert (1, 3) in overlaps
    assert supports[0].mode == "power"


def test_power_support_excludes_diagonal(c4):
    second = power_support(c4, 2)
    assert second.matrix.diagonal().sum() == 0
    assert second.entries.tolist() == [[0, 2], [1, 3], [2, 0], [3, 1]]


def test_power_supports_agree_with_single_power():
    g = cycle_graph(7)
    for support in power_supports(g, 4):
        single = power_support(g, support.k)
        assert np.array_equal(support.matrix.indices, single.matrix.indices)


def test_power_support_is_boolean_walk_existence():
    g = random_graph(12, 0.3, seed=5)
    A = g.adjacency.toarray()
    walks = np.linalg.matrix_power(A, 3) > 0
    np.fill_diagonal(walks, False)
    assert np.array_equal(power_support(g, 3).matrix.toarray() > 0, walks)


# ========== Hadamard ==========

def test_hadamard_disjoint_detects_shared_pair():
    a = path_graph(3).support()
    b = sp.csr_matrix(([1.0], ([0], [1])), shape=(3, 3))
    assert not hadamard_disjoint(a, b)
    assert hadamard_disjoint(a, sp.csr_matrix((3, 3)))


def test_hadamard_disjoint_shape_mismatch():
    with pytest.raises(GraphError):
        hadamard_disjoint(path_graph(3).support(), path_graph(4).support())
