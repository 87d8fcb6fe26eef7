"""Neighbourhood statistics of percolated graphs and the coupled exploration
against the Poisson Galton-Watson tree."""

from __future__ import annotations

import csv
import enum
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import networkx as nx
import numpy as np

from .analytic import binom_logpmf, poisson_logpmf
from .gwtree import (
    CanonCode,
    GWMeasure,
    RootedGraph,
    RootedTree,
    canon_code,
)

__all__ = [
    "CouplingReport",
    "LazyPercolation",
    "NeighborhoodMeasure",
    "Outcome",
    "TVDistance",
    "ball",
    "census",
    "count_tree",
    "coupled_bfe",
    "coupling_batch",
    "tv_distance",
]


def _adjacency(g) -> list[list[int]]:
    if hasattr(g, "adjacency_lists"):
        return g.adjacency_lists()
    return g


def ball(g, v: int, r: int) -> RootedGraph:
    """Induced subgraph on all vertices within distance ``r`` of ``v``, rooted at ``v``.

    Local vertex 0 is ``v``; ``labels`` maps local ids back to ``g``.
    """
    adj = _adjacency(g)
    return _ball_from_adj(adj, v, r)


def _ball_from_adj(adj, v: int, r: int) -> RootedGraph:
    local = {v: 0}
    order = [v]
    frontier = [v]
    for _ in range(r):
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if y not in local:
                    local[y] = len(order)
                    order.append(y)
                    nxt.append(y)
        frontier = nxt
        if not frontier:
            break
    sub = [[local[y] for y in adj[x] if y in local] for x in order]
    return RootedGraph(sub, 0, tuple(order))


def _ball_code(adj, v: int, r: int) -> CanonCode:
    # BFS tree codes are built inline; only balls with a cycle go through canon_code
    if r == 0 or not adj[v]:
        return _BARE
    local = {v: 0}
    order = [v]
    parent = [-1]
    kids: list[list[int]] = [[]]
    frontier = [0]
    edges_in = 0
    for _ in range(r):
        nxt = []
        for i in frontier:
            for y in adj[order[i]]:
                j = local.get(y)
                if j is None:
                    j = len(order)
                    local[y] = j
                    order.append(y)
                    parent.append(i)
                    kids.append([])
                    kids[i].append(j)
                    nxt.append(j)
        frontier = nxt
        if not frontier:
            break
    size = len(order)
    for x in order:
        for y in adj[x]:
            if y in local:
                edges_in += 1
    if edges_in // 2 != size - 1:
        return canon_code(_ball_from_adj(adj, v, r))
    codes = [""] * size
    for i in range(size - 1, -1, -1):
        ch = kids[i]
        if not ch:
            codes[i] = "()"
        elif len(ch) == 1:
            codes[i] = "(" + codes[ch[0]] + ")"
        else:
            codes[i] = "(" + "".join(sorted([codes[j] for j in ch])) + ")"
    return CanonCode(codes[0], True)


_BARE = CanonCode("()", True)


@dataclass
class NeighborhoodMeasure:
    """Empirical law of the depth-``r`` ball around a uniform vertex."""

    r: int
    counts: dict[str, int] = field(repr=False)
    n: int
    is_tree: dict[str, bool] = field(repr=False)

    @property
    def non_tree_mass(self) -> float:
        return sum(k for code, k in self.counts.items() if not self.is_tree[code]) / self.n

    def prob(self, code: str) -> float:
        return self.counts.get(code, 0) / self.n

    def probabilities(self) -> dict[str, float]:
        return {code: k / self.n for code, k in self.counts.items()}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["canon_code", "is_tree", "count", "probability"])
            for code in sorted(self.counts):
                k = self.counts[code]
                w.writerow([code, int(self.is_tree[code]), k, repr(k / self.n)])


def census(g, r: int) -> NeighborhoodMeasure:
    """Count the isomorphism classes of depth-``r`` balls over all vertices."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    adj = _adjacency(g)
    counts: Counter = Counter()
    is_tree: dict[str, bool] = {}
    # refinement-hash codes need a pairwise isomorphism check to stay exact
    hashed: dict[str, list[tuple[str, RootedGraph]]] = {}
    for v in range(len(adj)):
        cc = _ball_code(adj, v, r)
        code = cc.code
        if code.startswith("H"):
            code = _resolve_hashed(cc, hashed)
        counts[code] += 1
        is_tree[code] = cc.is_tree
    return NeighborhoodMeasure(r, dict(sorted(counts.items())), len(adj), is_tree)


def _to_nx(rg: RootedGraph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from((i, {"root": i == rg.root}) for i in range(rg.n))
    G.add_edges_from((i, j) for i, nb in enumerate(rg.adj) for j in nb if i < j)
    return G


def _resolve_hashed(cc: CanonCode, hashed) -> str:
    reps = hashed.setdefault(cc.code, [])
    G = _to_nx(cc.graph)
    for label, H in reps:
        if nx.is_isomorphic(G, H, node_match=lambda a, b: a["root"] == b["root"]):
            return label
    label = f"{cc.code}#{len(reps)}"
    reps.append((label, G))
    return label


def count_tree(g, t: RootedTree | str, r: int, measure: NeighborhoodMeasure | None = None) -> int:
    """Number of vertices whose depth-``r`` ball is isomorphic to ``t``."""
    code = t if isinstance(t, str) else t.code()
    if isinstance(t, RootedTree) and t.height > r:
        raise ValueError("tree height exceeds radius")
    if measure is None:
        measure = census(g, r)
    return measure.counts.get(code, 0)


class TVDistance(NamedTuple):
    value: float
    band: float  # true distance lies in [value - band, value]


def tv_distance(emp: NeighborhoodMeasure, gw: GWMeasure) -> TVDistance:
    """Half the L1 distance between the empirical ball law and the enumerated GW law.

    Classes the enumeration does not cover (cycles, degrees above the cap)
    carry zero GW mass; the unenumerated GW tail is added to the GW side.
    """
    if emp.r != gw.r:
        raise ValueError(f"radius mismatch: census r={emp.r}, GW r={gw.r}")
    terms = []
    for code, k in emp.counts.items():
        e = k / emp.n
        g = gw.mass.get(code, 0.0) if emp.is_tree[code] else 0.0
        terms.append(abs(e - g))
    for code, g in gw.mass.items():
        if code not in emp.counts:
            terms.append(g)
    terms.append(gw.tail_mass)
    return TVDistance(0.5 * math.fsum(sorted(terms)), gw.tail_mass)


# --- coupled breadth-first exploration ------------------------------------------


class Outcome(str, enum.Enum):
    SUCCESS = "success"
    ABORT_DEGREE_DEFICIT = "abort_degree_deficit"
    ABORT_OFFSPRING_MISMATCH = "abort_offspring_mismatch"
    ABORT_DEGREE_OVERFLOW = "abort_degree_overflow"
    ABORT_CROSS_EDGE = "abort_cross_edge"


@dataclass
class CouplingReport:
    steps_completed: int
    outcome: Outcome
    ball_isomorphic: bool | None = None
    graph_code: str | None = None
    gw_code: str | None = None


class LazyPercolation:
    """Percolated host whose edges are drawn on first inspection.

    ``reveal`` fixes an edge's state explicitly, as the exploration does.
    """

    def __init__(self, host, p: float, rng: np.random.Generator):
        self.host = host
        self.p = p
        self.rng = rng
        self.state: dict[tuple[int, int], bool] = {}

    def reveal(self, u: int, v: int, present: bool) -> None:
        self.state[(u, v) if u < v else (v, u)] = present

    def has_edge(self, u: int, v: int) -> bool:
        key = (u, v) if u < v else (v, u)
        s = self.state.get(key)
        if s is None:
            s = bool(self.rng.random() < self.p)
            self.state[key] = s
        return s

    def host_neighbors(self, v: int) -> list[int]:
        nb = self.host.neighbors(v)
        return nb.tolist() if isinstance(nb, np.ndarray) else list(nb)

    def ball(self, v: int, r: int) -> RootedGraph:
        local = {v: 0}
        order = [v]
        frontier = [v]
        for _ in range(r):
            nxt = []
            for x in frontier:
                for y in self.host_neighbors(x):
                    if y not in local and self.has_edge(x, y):
                        local[y] = len(order)
                        order.append(y)
                        nxt.append(y)
            frontier = nxt
        sub = [[local[y] for y in self.host_neighbors(x) if y in local and self.has_edge(x, y)]
               for x in order]
        return RootedGraph(sub, 0, tuple(order))


@lru_cache(maxsize=4096)
def _coupling_tables(k: int, p: float, c: float):
    """Cumulative tables for the maximal coupling of Bin(k, p) and Po(c)."""
    K = max(k, int(c + 12 * math.sqrt(c) + 30))
    support = np.arange(K + 1)
    a = np.exp(binom_logpmf(support, k, p))
    b = np.exp(poisson_logpmf(support, c))
    b[-1] += max(0.0, 1.0 - b.sum())
    shared = np.minimum(a, b)
    s = float(shared.sum())
    ra, rb = a - shared, b - shared
    return s, np.cumsum(shared), np.cumsum(ra), np.cumsum(rb)


def _inverse_cdf(cum: np.ndarray, u: float) -> int:
    return int(min(np.searchsorted(cum, u * cum[-1], side="right"), cum.size - 1))


def _coupled_offspring(k: int, p: float, c: float, rng: np.random.Generator) -> tuple[int, int]:
    s, cs, ca, cb = _coupling_tables(k, p, c)
    u = rng.random()
    if u < s or s >= 1.0:
        x = _inverse_cdf(cs, u / s if s > 0 else 0.0)
        return x, x
    w = (u - s) / (1.0 - s)
    return _inverse_cdf(ca, w), _inverse_cdf(cb, w)


def coupled_bfe(host, u: int, c: float, r: int, seed) -> CouplingReport:
    """Run the paired exploration of the percolated host around ``u`` and a GW tree.

    Offspring counts are drawn from a maximal coupling of ``Bin(d', c/d)`` and
    ``Po(c)``, where ``d'`` is the number of still unexplored host neighbours.
    On success the two depth-``r`` balls are re-extracted and compared by code.
    """
    rng = np.random.default_rng(seed)
    d = host.d
    p = c / d if d else 0.0
    lazy = LazyPercolation(host, p, rng)
    deficit = d - d**0.25
    overflow = 4 * math.log(d) if d > 1 else math.inf

    discovered = {u}
    gw_children: list[list[int]] = [[]]
    tree_edges: set[tuple[int, int]] = set()
    queue = deque([(u, 0, 0)])  # (graph vertex, gw node, depth)
    steps = 0
    while queue and queue[0][2] < r:
        v, w, depth = queue.popleft()
        avail = [x for x in lazy.host_neighbors(v) if x not in discovered]
        if len(avail) < deficit:
            return CouplingReport(steps, Outcome.ABORT_DEGREE_DEFICIT)
        x, y = _coupled_offspring(len(avail), p, c, rng)
        if x != y:
            return CouplingReport(steps, Outcome.ABORT_OFFSPRING_MISMATCH)
        if x >= overflow:
            return CouplingReport(steps, Outcome.ABORT_DEGREE_OVERFLOW)
        picked = set(rng.choice(len(avail), size=x, replace=False).tolist()) if x else set()
        for i, nb in enumerate(avail):
            kept = i in picked
            lazy.reveal(v, nb, kept)
            if kept:
                discovered.add(nb)
                tree_edges.add((v, nb) if v < nb else (nb, v))
                gw_children.append([])
                child = len(gw_children) - 1
                gw_children[w].append(child)
                queue.append((nb, child, depth + 1))
        steps += 1

    # edges among explored vertices that the exploration never revealed
    for a in discovered:
        for b in lazy.host_neighbors(a):
            if b > a and b in discovered and (a, b) not in tree_edges and lazy.has_edge(a, b):
                return CouplingReport(steps, Outcome.ABORT_CROSS_EDGE)

    gw_code = RootedTree(tuple(tuple(ch) for ch in gw_children)).code()
    graph_code = canon_code(lazy.ball(u, r)).code
    return CouplingReport(steps, Outcome.SUCCESS, graph_code == gw_code, graph_code, gw_code)


def coupling_batch(host, c: float, r: int, trials: int, seed) -> dict:
    """Repeat ``coupled_bfe`` from uniform roots; returns outcome counts and recheck failures."""
    ss = np.random.SeedSequence(seed)
    root_rng = np.random.default_rng(ss.spawn(1)[0])
    counts = Counter()
    recheck_failures = 0
    for i, child in enumerate(ss.spawn(trials)):
        if host.n < 2**63:
            u = int(root_rng.integers(host.n))
        else:
            u = int.from_bytes(root_rng.bytes((host.d + 7) // 8), "little") % host.n
        rep = coupled_bfe(host, u, c, r, child)
        counts[rep.outcome] += 1
        if rep.outcome is Outcome.SUCCESS and not rep.ball_isomorphic:
            recheck_failures += 1
    return {"trials": trials, "counts": counts, "recheck_failures": recheck_failures}
