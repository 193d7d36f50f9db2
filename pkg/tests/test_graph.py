import itertools

import numpy as np
import pytest

from pathsum import (
    BlockPartition,
    DomainError,
    InformationModel,
    PartitionError,
    build_graph,
    connected_component,
    enumerate_simple_cycles,
    enumerate_simple_paths,
)
from pathsum.graph import members, subset_of

from conftest import c5_matrix, membrane_matrix, random_spd, random_tree


def complete(n):
    return InformationModel(np.eye(n) * n + np.ones((n, n)))


def brute_paths(adj, deleted, s, t):
    n = len(adj)
    alive = [v for v in range(n) if v not in deleted and v not in (s, t)]
    out = set()
    if s == t:
        return {(s,)}
    for k in range(len(alive) + 1):
        for mid in itertools.permutations(alive, k):
            p = (s,) + mid + (t,)
            if all(b in adj[a] for a, b in zip(p, p[1:])):
                out.add(p)
    return out


def brute_cycles(adj, loops, deleted, r):
    n = len(adj)
    alive = [v for v in range(n) if v not in deleted and v != r]
    out = {(r,)} if loops[r] else set()
    for k in range(1, len(alive) + 1):
        for mid in itertools.permutations(alive, k):
            c = (r,) + mid
            if all(b in adj[a] for a, b in zip(c, c[1:] + (r,))):
                out.add(c)
    return out


def test_complete_graph_path_counts():
    g = build_graph(complete(4))
    assert len(list(enumerate_simple_paths(g, 0, 0, 1))) == 5


def test_cycle_counts():
    g5 = build_graph(InformationModel(c5_matrix(0.3)))
    cycles = list(enumerate_simple_cycles(g5, 0, 0))
    # self-loop, two backtracks, two orientations of the pentagon
    assert len(cycles) == 5
    assert cycles[0] == (0,)
    g3 = build_graph(complete(3))
    assert len(list(enumerate_simple_cycles(g3, 0, 0))) == 5


def test_tree_cycles_are_loop_and_backtracks(rng):
    J = random_tree(rng, 12)
    g = build_graph(InformationModel(J))
    for v in g.vertices:
        cycles = list(enumerate_simple_cycles(g, 0, v))
        assert len(cycles) == 1 + len(g.adjacency[v])


@pytest.mark.parametrize("seed", range(8))
def test_enumeration_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    g = build_graph(InformationModel(random_spd(rng, n, rng.uniform(0.3, 1.0))))
    adj = [set(a) for a in g.adjacency]
    deleted = {int(x) for x in rng.choice(n, size=int(rng.integers(0, 2)), replace=False)}
    alive = [v for v in range(n) if v not in deleted]
    for s, t in itertools.product(alive, alive):
        got = list(enumerate_simple_paths(g, deleted, s, t))
        assert len(got) == len(set(got))
        assert set(got) == brute_paths(adj, deleted, s, t)
    for r in alive:
        got = list(enumerate_simple_cycles(g, deleted, r))
        assert set(got) == brute_cycles(adj, g.self_loop, deleted, r)


def test_deleting_vertices_never_adds_paths():
    g = build_graph(complete(6))
    base = set(enumerate_simple_paths(g, 0, 0, 5))
    for k in range(1, 5):
        smaller = set(enumerate_simple_paths(g, set(range(1, 1 + k)), 0, 5))
        assert smaller <= base
        assert len(smaller) < len(base)
        base = smaller


def test_enumeration_is_deterministic():
    g = build_graph(complete(5))
    assert list(enumerate_simple_paths(g, 0, 0, 3)) == list(enumerate_simple_paths(g, 0, 0, 3))


def test_connected_component_and_domain_errors():
    J = np.diag([2.0] * 6)
    J[0, 1] = J[1, 0] = J[1, 2] = J[2, 1] = J[3, 4] = J[4, 3] = 0.5
    g = build_graph(InformationModel(J))
    assert members(connected_component(g, 0, 0)) == [0, 1, 2]
    assert members(connected_component(g, {1}, 0)) == [0]
    assert members(connected_component(g, 0, 5)) == [5]
    with pytest.raises(DomainError):
        connected_component(g, {0}, 0)
    with pytest.raises(DomainError):
        list(enumerate_simple_paths(g, 0, 0, 9))


def test_block_graph_weights():
    J = membrane_matrix(1.0, 1.0)
    p = BlockPartition.contiguous([3, 3, 3])
    g = build_graph(InformationModel(J), p)
    assert g.n_vertices == 3 and not g.is_scalar
    assert g.adjacency == ((1, 2), (0, 2), (0, 1))
    np.testing.assert_array_equal(g.edge_weight(1, 0), J[3:6, 0:3])
    np.testing.assert_array_equal(g.self_weight(2), J[6:9, 6:9])


def test_drop_tolerance_removes_small_edges():
    J = np.eye(3)
    J[0, 1] = J[1, 0] = 1e-12
    J[1, 2] = J[2, 1] = 0.3
    g = build_graph(InformationModel(J), drop_tolerance=1e-10)
    assert not g.has_edge(0, 1) and g.has_edge(1, 2)


def test_partition_validation():
    with pytest.raises(PartitionError):
        BlockPartition.from_lists([[1, 2], [2, 3]], 3)
    with pytest.raises(PartitionError):
        BlockPartition.from_lists([[1], [2]], 3)
    with pytest.raises(PartitionError):
        BlockPartition.from_lists([[1, 4], [2, 3]], 3)
    with pytest.raises(PartitionError):
        BlockPartition.from_lists([[1, 2, 3], []], 3)


def test_subset_round_trip():
    assert members(subset_of([5, 0, 3])) == [0, 3, 5]
