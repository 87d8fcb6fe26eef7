from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import adj_from_edges, brute_matching_number, random_graph_edges
from percolab.graphgen import GraphSizeError, make_complete, percolate
from percolab.matching import (
    Matching,
    karp_sipser_reduce,
    matching_number,
    max_matching_blossom,
    maximum_matching,
    verify_matching,
)


def path(n):
    return adj_from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n):
    return adj_from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def test_ks_path_p4():
    red = karp_sipser_reduce(path(4))
    assert len(red.forced_edges) == 2 and red.core == {}
    assert matching_number(path(4)) == (2, True)


def test_ks_cycle_has_no_leaves():
    red = karp_sipser_reduce(cycle(6))
    assert red.forced_edges == []
    assert sorted(red.core) == list(range(6))
    assert all(len(nb) == 2 for nb in red.core.values())


def test_ks_star():
    star = adj_from_edges(6, [(0, j) for j in range(1, 6)])
    red = karp_sipser_reduce(star)
    assert red.forced_edges == [(1, 0)]
    assert red.removed_isolated == 4 and red.core == {}


def test_ks_forced_edges_touch_a_leaf():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = 30
        edges = random_graph_edges(rng, n, 0.08)
        adj = adj_from_edges(n, edges)
        red = karp_sipser_reduce(adj)
        alive = [True] * n
        # replay: each forced edge's first endpoint must be a leaf at its turn
        for v, u in red.forced_edges:
            live_nb = [w for w in adj[v] if alive[w]]
            assert live_nb == [u]
            for x in (v, u):
                alive[x] = False
        assert all(len(nb) >= 2 for nb in red.core.values())


def test_triangle():
    assert max_matching_blossom(cycle(3)).size == 1


def test_petersen():
    G = nx.petersen_graph()
    edges = list(G.edges())
    assert brute_matching_number(10, edges) == 5
    adj = adj_from_edges(10, edges)
    m = max_matching_blossom(adj)
    assert m.size == 5 and verify_matching(adj, m)


def test_empty_and_perfect():
    assert matching_number([]) == (0, True)
    assert matching_number([[] for _ in range(5)]) == (0, True)
    k = 7
    pm = adj_from_edges(2 * k, [(2 * i, 2 * i + 1) for i in range(k)])
    assert matching_number(pm) == (k, True)


def test_verify_matching():
    adj = path(4)
    assert verify_matching(adj, Matching.from_pairs([(0, 1), (2, 3)]))
    assert not verify_matching(adj, Matching.from_pairs([(0, 1), (1, 2)]))
    assert not verify_matching(adj, Matching.from_pairs([(0, 3)]))


def test_blossom_cap():
    with pytest.raises(GraphSizeError):
        max_matching_blossom(path(10), cap=5)
    # the cap applies to the core only in exact mode
    assert matching_number(path(10), cap=5) == (5, True)
    with pytest.raises(GraphSizeError):
        matching_number(cycle(10), cap=5)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_blossom_all_graphs_small(n):
    pairs = list(combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        adj = adj_from_edges(n, edges)
        assert max_matching_blossom(adj).size == brute_matching_number(n, edges)


def test_blossom_against_networkx(rng):
    for _ in range(300):
        n = int(rng.integers(5, 40))
        edges = random_graph_edges(rng, n, float(rng.uniform(0.05, 0.4)))
        adj = adj_from_edges(n, edges)
        G = nx.Graph(edges)
        m = max_matching_blossom(adj)
        assert verify_matching(adj, m)
        assert m.size == len(nx.max_weight_matching(G, maxcardinality=True))


def test_ks_reduction_exact_on_er_graphs(rng):
    for _ in range(200):
        n = int(rng.integers(2, 61))
        edges = random_graph_edges(rng, n, float(rng.uniform(0.01, 0.15)))
        adj = adj_from_edges(n, edges)
        red = karp_sipser_reduce(adj)
        ids = sorted(red.core)
        local = {v: i for i, v in enumerate(ids)}
        core_adj = [[local[w] for w in red.core[v]] for v in ids]
        assert len(red.forced_edges) + max_matching_blossom(core_adj).size == \
            max_matching_blossom(adj).size


def test_maximum_matching_is_valid_and_maximum(rng):
    for _ in range(100):
        n = int(rng.integers(2, 50))
        adj = adj_from_edges(n, random_graph_edges(rng, n, 0.08))
        m = maximum_matching(adj)
        assert verify_matching(adj, m)
        assert m.size == max_matching_blossom(adj).size


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_monotone_under_edge_addition(data):
    n = data.draw(st.integers(2, 12))
    pairs = list(combinations(range(n), 2))
    chosen = data.draw(st.lists(st.sampled_from(pairs), unique=True))
    extra = data.draw(st.sampled_from(pairs))
    before = matching_number(adj_from_edges(n, chosen))[0]
    after = matching_number(adj_from_edges(n, set(chosen) | {extra}))[0]
    assert after >= before


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_heuristic_is_lower_bound(data):
    n = data.draw(st.integers(1, 14))
    pairs = list(combinations(range(n), 2))
    edges = data.draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    seed = data.draw(st.integers(0, 2**32))
    adj = adj_from_edges(n, edges)
    h, exact = matching_number(adj, "heuristic", seed)
    assert exact is False
    assert h <= matching_number(adj)[0] == brute_matching_number(n, edges)


def test_heuristic_deterministic_under_seed():
    g = percolate(make_complete(300), 3 / 300, 1)
    assert matching_number(g, "heuristic", 5) == matching_number(g, "heuristic", 5)


def test_heuristic_close_to_exact_below_e():
    n = 10**4
    host = make_complete(n)
    gaps = []
    for s in range(20):
        g = percolate(host, 2 / n, s)
        gaps.append(matching_number(g)[0] - matching_number(g, "heuristic", s)[0])
    assert min(gaps) >= 0
    assert np.mean(gaps) <= 0.01 * n
