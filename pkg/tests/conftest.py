"""Independent oracles shared by the test modules."""

from functools import lru_cache
from itertools import combinations

import networkx as nx
import numpy as np
import pytest


def brute_matching_number(n: int, edges) -> int:
    """Exhaustive maximum matching over vertex subsets (exponential; n <= ~12)."""
    nbr = [0] * n
    for u, v in edges:
        nbr[u] |= 1 << v
        nbr[v] |= 1 << u

    @lru_cache(maxsize=None)
    def best(mask: int) -> int:
        if mask == 0:
            return 0
        v = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << v)
        out = best(rest)
        cand = nbr[v] & rest
        while cand:
            w = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            out = max(out, 1 + best(rest & ~(1 << w)))
        return out

    return best((1 << n) - 1)


def adj_from_edges(n: int, edges) -> list[list[int]]:
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return [sorted(a) for a in adj]


def random_graph_edges(rng: np.random.Generator, n: int, p: float):
    return [(u, v) for u, v in combinations(range(n), 2) if rng.random() < p]


def rooted_isomorphic(adj1, root1, adj2, root2) -> bool:
    def to_nx(adj, root):
        G = nx.Graph()
        G.add_nodes_from((i, {"root": i == root}) for i in range(len(adj)))
        G.add_edges_from((i, j) for i, nb in enumerate(adj) for j in nb if i < j)
        return G

    return nx.is_isomorphic(to_nx(adj1, root1), to_nx(adj2, root2),
                            node_match=lambda a, b: a["root"] == b["root"])


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


# one line per acceptance criterion, echoed after the run even when output is captured
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
