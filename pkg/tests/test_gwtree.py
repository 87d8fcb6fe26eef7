import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rooted_isomorphic
from percolab.gwtree import (
    GWMeasure,
    RootedGraph,
    RootedTree,
    TreeSizeError,
    canon_code,
    cap_probability,
    count_classes,
    enumerate_gw_measure,
    gw_ball_prob,
    sample_gw_codes,
    sample_gw_truncated,
    star_code,
    tree_from_code,
)


def tree(children):
    return RootedTree(tuple(tuple(c) for c in children))


def random_tree(rnd: random.Random, n: int) -> RootedTree:
    children = [[] for _ in range(n)]
    for v in range(1, n):
        children[rnd.randrange(v)].append(v)
    return tree(children)


def relabel(t: RootedTree, rnd: random.Random) -> RootedGraph:
    g = t.as_rooted_graph()
    perm = list(range(g.n))
    rnd.shuffle(perm)
    adj = [None] * g.n
    for v in range(g.n):
        nb = [perm[w] for w in g.adj[v]]
        rnd.shuffle(nb)
        adj[perm[v]] = nb
    return RootedGraph(adj, perm[0])


# --- canonical codes -------------------------------------------------------------


def test_single_vertex_code():
    cc = canon_code(RootedGraph([[]], 0))
    assert cc.code == "()" and cc.is_tree


def test_path_rooted_at_end_vs_middle():
    adj = [[1], [0, 2], [1]]
    end, mid = canon_code(RootedGraph(adj, 0)), canon_code(RootedGraph(adj, 1))
    assert end.code == "((()))" and mid.code == "(()())"
    assert end != mid


def test_children_permutation_invariant():
    a = tree([[1, 2], [3], []] + [[]])
    b = tree([[1, 2], [], [3], []])
    assert a.code() == b.code()
    assert canon_code(a.as_rooted_graph()) == canon_code(b.as_rooted_graph())


def test_code_roundtrip():
    rnd = random.Random(1)
    for _ in range(200):
        t = random_tree(rnd, rnd.randint(1, 15))
        assert tree_from_code(t.code()).code() == t.code()


def test_canon_rejects_disconnected():
    with pytest.raises(ValueError):
        canon_code(RootedGraph([[], []], 0))


def test_relabelings_keep_code():
    rnd = random.Random(7)
    for _ in range(300):
        t = random_tree(rnd, rnd.randint(1, 9))
        assert canon_code(relabel(t, rnd)).code == t.code()


def test_codes_agree_with_brute_force_isomorphism():
    rnd = random.Random(11)
    for _ in range(400):
        n = rnd.randint(2, 9)
        a, b = random_tree(rnd, n), random_tree(rnd, n)
        ga, gb = a.as_rooted_graph(), b.as_rooted_graph()
        assert (a.code() == b.code()) == rooted_isomorphic(ga.adj, 0, gb.adj, 0)


def test_leaf_move_changes_class():
    rnd = random.Random(5)
    for _ in range(300):
        t = random_tree(rnd, rnd.randint(3, 9))
        kids = [list(c) for c in t.children]
        leaves = [v for v in range(1, t.size) if not kids[v]]
        leaf = rnd.choice(leaves)
        for v in range(t.size):
            if leaf in kids[v]:
                kids[v].remove(leaf)
        new_parent = rnd.choice([v for v in range(t.size) if v != leaf])
        kids[new_parent].append(leaf)
        moved = tree(kids)
        iso = rooted_isomorphic(t.as_rooted_graph().adj, 0, moved.as_rooted_graph().adj, 0)
        assert (moved.code() == t.code()) == iso


def _random_connected(rnd, n, extra):
    edges = {(rnd.randrange(v), v) for v in range(1, n)}
    extra = max(1, min(extra, n * (n - 1) // 2 - (n - 1)))
    while len(edges) < n - 1 + extra:
        a, b = sorted(rnd.sample(range(n), 2))
        edges.add((a, b))
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    return adj


def test_non_tree_codes_are_exact():
    rnd = random.Random(3)
    for _ in range(300):
        n = rnd.randint(3, 8)
        a = _random_connected(rnd, n, rnd.randint(1, 3))
        b = _random_connected(rnd, n, rnd.randint(1, 3))
        ca, cb = canon_code(RootedGraph(a, 0)), canon_code(RootedGraph(b, 0))
        assert not ca.is_tree and ca.code.startswith("G")
        assert (ca.code == cb.code) == rooted_isomorphic(a, 0, b, 0)


def test_non_tree_code_relabel_invariant():
    rnd = random.Random(4)
    for _ in range(200):
        n = rnd.randint(3, 12)
        a = _random_connected(rnd, n, rnd.randint(1, 4))
        perm = list(range(n))
        rnd.shuffle(perm)
        b = [None] * n
        for v in range(n):
            b[perm[v]] = [perm[w] for w in a[v]]
        assert canon_code(RootedGraph(a, 0)).code == canon_code(RootedGraph(b, perm[0])).code


def test_large_symmetric_non_tree_falls_back_to_hash():
    n = 18
    adj = [[w for w in range(n) if w != v] for v in range(n)]  # K_18
    cc = canon_code(RootedGraph(adj, 0))
    assert cc.code.startswith("H") and not cc.is_tree


# --- sampling --------------------------------------------------------------------


def test_sample_radius_zero_and_c_zero():
    assert sample_gw_truncated(2.0, 0, 1).size == 1
    assert sample_gw_truncated(0.0, 5, 1).size == 1


def test_sample_is_seeded_and_truncated():
    a, b = sample_gw_truncated(2.0, 3, 42), sample_gw_truncated(2.0, 3, 42)
    assert a == b
    assert a.height <= 3


def test_sample_guard(monkeypatch):
    import percolab.gwtree as gw

    monkeypatch.setattr(gw, "GW_NODE_GUARD", 50)
    with pytest.raises(TreeSizeError):
        sample_gw_truncated(5.0, 6, 0)


def test_root_offspring_mean():
    n = 10**5
    counts, _ = sample_gw_codes(2.0, 2, n, 9)
    # root offspring = number of top-level children in each code
    from percolab.gwtree import children_of_code

    total = sum(len(children_of_code(code)) * k for code, k in counts.items())
    assert abs(total / n - 2.0) <= 3 * math.sqrt(2.0 / n)


def test_batch_sampler_matches_single_sampler_law():
    codes, _ = sample_gw_codes(1.0, 2, 20_000, 1)
    single = {}
    for s in range(20_000):
        c = sample_gw_truncated(1.0, 2, s).code()
        single[c] = single.get(c, 0) + 1
    for code in ("()", "(())", "((()))", "(()())"):
        a, b = codes[code] / 20_000, single.get(code, 0) / 20_000
        p = (a + b) / 2
        assert abs(a - b) <= 5 * math.sqrt(2 * p * (1 - p) / 20_000)


def test_batch_max_degree_matches_codes():
    codes, maxdeg = sample_gw_codes(1.5, 3, 2000, 4)
    assert maxdeg.size == 2000
    from_codes = np.concatenate(
        [np.full(k, tree_from_code(code).max_degree) for code, k in codes.items()])
    assert np.array_equal(np.sort(from_codes), np.sort(maxdeg))


def test_max_degree_tail_bound():
    c, r = 0.5, 2
    _, maxdeg = sample_gw_codes(c, r, 200_000, 2)
    for gamma in (5, 6, 8):
        assert gamma >= 10 * c
        emp = (maxdeg >= gamma).mean()
        assert emp <= 2 * gamma ** (r - 1) * math.exp(-gamma / 3)


# --- exact probabilities -----------------------------------------------------------


@pytest.mark.parametrize("c", [0.5, 1.0, 3.0])
def test_bare_root_and_single_child(c):
    assert gw_ball_prob("()", 1, c) == pytest.approx(math.exp(-c))
    assert gw_ball_prob("()", 3, c) == pytest.approx(math.exp(-c))
    assert gw_ball_prob("(())", 1, c) == pytest.approx(c * math.exp(-c))


def test_two_leaf_children_r2():
    c = 1.3
    expect = math.exp(-c) * c**2 / 2 * math.exp(-c) ** 2
    assert gw_ball_prob(tree([[1, 2], [], []]), 2, c) == pytest.approx(expect, rel=1e-14)


def test_ball_prob_height_check():
    with pytest.raises(ValueError):
        gw_ball_prob("((()))", 1, 1.0)


def test_ball_prob_against_monte_carlo():
    c, r, n = 1.0, 2, 400_000
    counts, _ = sample_gw_codes(c, r, n, 17)
    for code in ("()", "(())", "(()())", "((())())", "((()()))"):
        p = gw_ball_prob(code, r, c)
        assert abs(counts[code] / n - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_enumerate_r0():
    m = enumerate_gw_measure(1.0, 0, 5)
    assert m.mass == {"()": 1.0} and m.tail_mass == 0.0


@pytest.mark.parametrize("c", [0.5, 1.0, 2.5])
@pytest.mark.parametrize("D", [3, 8])
def test_enumerate_r1_is_poisson(c, D):
    m = enumerate_gw_measure(c, 1, D)
    assert set(m.mass) == {star_code(j) for j in range(D + 1)}
    for j in range(D + 1):
        assert m.mass[star_code(j)] == pytest.approx(math.exp(-c) * c**j / math.factorial(j),
                                                     rel=1e-13)
    tail = 1 - sum(math.exp(-c) * c**j / math.factorial(j) for j in range(D + 1))
    assert m.tail_mass == pytest.approx(tail, abs=1e-14)


@pytest.mark.parametrize(("c", "r", "D"), [(1.0, 2, 6), (2.0, 2, 5), (0.7, 3, 4), (1.0, 1, 12)])
def test_enumeration_mass_equals_cap_probability(c, r, D):
    m = enumerate_gw_measure(c, r, D)
    assert len(m.mass) == count_classes(r, D)
    assert math.fsum(m.mass.values()) == pytest.approx(cap_probability(c, r, D), abs=1e-10)
    assert abs(math.fsum(m.mass.values()) + m.tail_mass - 1) < 1e-10
    for code in m.mass:
        t = tree_from_code(code)
        assert t.height <= r and t.max_degree <= D
        assert m.mass[code] == pytest.approx(gw_ball_prob(code, r, c), rel=1e-12)


def test_enumeration_r2_c1_mass():
    m = enumerate_gw_measure(1.0, 2, 6)
    assert math.fsum(m.mass.values()) >= 0.99


def test_enumeration_guard():
    with pytest.raises(TreeSizeError):
        enumerate_gw_measure(1.0, 3, 12)


def test_gw_measure_csv_roundtrip(tmp_path):
    m = enumerate_gw_measure(1.0, 2, 4)
    path = tmp_path / "gw.csv"
    m.to_csv(path)
    back = GWMeasure.from_csv(path, 2, 1.0, 4)
    assert back.mass == m.mass and back.tail_mass == m.tail_mass
    assert path.read_text().splitlines()[0] == "canon_code,probability"
    assert path.read_text().splitlines()[-1].startswith("tail_mass,")


@settings(max_examples=50, deadline=None)
@given(c=st.floats(0.05, 4.0), D=st.integers(1, 9))
def test_r1_normalization(c, D):
    m = enumerate_gw_measure(c, 1, D)
    assert abs(math.fsum(m.mass.values()) + m.tail_mass - 1.0) < 1e-12
