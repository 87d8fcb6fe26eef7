"""Matching numbers: Karp-Sipser leaf removal, Edmonds' blossom algorithm,
and the randomized Karp-Sipser heuristic.

A graph view is either a list of neighbour lists (vertices ``0..n-1``) or any
object with an ``adjacency_lists()`` method, such as ``PercolatedGraph``.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graphgen import GraphSizeError

__all__ = [
    "KSReduction",
    "Matching",
    "Mode",
    "karp_sipser_reduce",
    "matching_number",
    "max_matching_blossom",
    "maximum_matching",
    "verify_matching",
]

DEFAULT_BLOSSOM_CAP = 10**6


class Mode(str, enum.Enum):
    EXACT = "exact"
    HEURISTIC = "heuristic"


@dataclass(frozen=True)
class Matching:
    edges: frozenset[tuple[int, int]]

    @property
    def size(self) -> int:
        return len(self.edges)

    @classmethod
    def from_pairs(cls, pairs) -> "Matching":
        return cls(frozenset((min(a, b), max(a, b)) for a, b in pairs))


@dataclass
class KSReduction:
    """Outcome of exhaustive leaf removal.

    ``core`` maps each surviving vertex to its surviving neighbours; every
    core vertex has degree at least two.
    """

    forced_edges: list[tuple[int, int]]
    core: dict[int, list[int]] = field(repr=False)
    removed_isolated: int

    @property
    def core_size(self) -> int:
        return len(self.core)


def _as_adj(g) -> list[list[int]]:
    if hasattr(g, "adjacency_lists"):
        return g.adjacency_lists()
    return [list(nb) for nb in g]


def verify_matching(g, m: Matching) -> bool:
    adj = _as_adj(g)
    n = len(adj)
    seen: set[int] = set()
    for u, v in m.edges:
        if not (0 <= u < n and 0 <= v < n) or u == v:
            return False
        if u in seen or v in seen:
            return False
        seen.add(u)
        seen.add(v)
        if v not in adj[u]:
            return False
    return True


# --- Karp-Sipser -----------------------------------------------------------


class _LeafRemover:
    """Mutable degree bookkeeping shared by the exact and heuristic passes."""

    def __init__(self, adj: list[list[int]]):
        self.adj = adj
        self.deg = [len(nb) for nb in adj]
        self.alive = [True] * len(adj)
        self.forced: list[tuple[int, int]] = []
        self.isolated = 0
        # smallest id first among initial leaves, then creation order
        self.queue = deque(v for v, k in enumerate(self.deg) if k <= 1)

    def _remove(self, v: int) -> None:
        self.alive[v] = False
        alive, deg, queue = self.alive, self.deg, self.queue
        for w in self.adj[v]:
            if alive[w]:
                deg[w] -= 1
                if deg[w] <= 1:
                    queue.append(w)

    def match(self, a: int, b: int) -> None:
        self.alive[a] = self.alive[b] = False
        self._remove(a)
        self._remove(b)

    def drain(self, record: list[tuple[int, int]]) -> None:
        alive, deg, queue, adj = self.alive, self.deg, self.queue, self.adj
        while queue:
            v = queue.popleft()
            if not alive[v]:
                continue
            if deg[v] == 0:
                alive[v] = False
                self.isolated += 1
                continue
            if deg[v] != 1:
                continue
            u = next(w for w in adj[v] if alive[w])
            record.append((v, u))
            self.match(v, u)


def karp_sipser_reduce(g) -> KSReduction:
    """Match leaves to their unique neighbours until no vertex has degree <= 1."""
    adj = _as_adj(g)
    lr = _LeafRemover(adj)
    lr.drain(lr.forced)
    alive = lr.alive
    core = {v: [w for w in adj[v] if alive[w]] for v in range(len(adj)) if alive[v]}
    return KSReduction(lr.forced, core, lr.isolated)


# --- Edmonds blossom ------------------------------------------------------


def _blossom_local(adj: list[list[int]]) -> list[int]:
    """Maximum matching on ``0..n-1`` as a mate array (-1 = exposed)."""
    n = len(adj)
    mate = [-1] * n
    for v in range(n):
        if mate[v] == -1:
            for w in adj[v]:
                if mate[w] == -1 and w != v:
                    mate[v], mate[w] = w, v
                    break

    parent = [-1] * n
    base = list(range(n))
    used = [False] * n
    in_blossom = [False] * n
    on_path = [False] * n

    def lca(a: int, b: int) -> int:
        touched = []
        while True:
            a = base[a]
            on_path[a] = True
            touched.append(a)
            if mate[a] == -1:
                break
            a = parent[mate[a]]
        while not on_path[base[b]]:
            b = parent[mate[base[b]]]
        for x in touched:
            on_path[x] = False
        return base[b]

    def mark_path(v: int, b: int, child: int, marked: list[int]) -> None:
        while base[v] != b:
            in_blossom[base[v]] = in_blossom[base[mate[v]]] = True
            marked.append(base[v])
            marked.append(base[mate[v]])
            parent[v] = child
            child = mate[v]
            v = parent[mate[v]]

    def search(root: int) -> int:
        used[root] = True
        queue = [root]
        tree = [root]
        qh = 0
        found = -1
        while qh < len(queue) and found == -1:
            v = queue[qh]
            qh += 1
            for to in adj[v]:
                if base[v] == base[to] or mate[v] == to:
                    continue
                if to == root or (mate[to] != -1 and parent[mate[to]] != -1):
                    cur = lca(v, to)
                    marked: list[int] = []
                    mark_path(v, cur, to, marked)
                    mark_path(to, cur, v, marked)
                    for i in tree:
                        if in_blossom[base[i]]:
                            base[i] = cur
                            if not used[i]:
                                used[i] = True
                                queue.append(i)
                    for x in marked:
                        in_blossom[x] = False
                elif parent[to] == -1:
                    parent[to] = v
                    tree.append(to)
                    if mate[to] == -1:
                        found = to
                        break
                    nxt = mate[to]
                    used[nxt] = True
                    queue.append(nxt)
                    tree.append(nxt)
        if found != -1:
            v = found
            while v != -1:
                pv = parent[v]
                ppv = mate[pv]
                mate[v], mate[pv] = pv, v
                v = ppv
        for i in tree:
            parent[i] = -1
            base[i] = i
            used[i] = False
        return found

    for v in range(n):
        if mate[v] == -1 and adj[v]:
            search(v)
    return mate


def max_matching_blossom(g, cap: int = DEFAULT_BLOSSOM_CAP) -> Matching:
    """Maximum-cardinality matching by augmenting paths with blossom contraction."""
    adj = _as_adj(g)
    if len(adj) > cap:
        raise GraphSizeError(
            f"{len(adj)} vertices exceeds the blossom cap {cap}; use heuristic mode"
        )
    mate = _blossom_local(adj)
    return Matching.from_pairs((v, w) for v, w in enumerate(mate) if w > v)


def _core_matching(core: dict[int, list[int]], cap: int) -> list[tuple[int, int]]:
    if len(core) > cap:
        raise GraphSizeError(
            f"Karp-Sipser core has {len(core)} vertices, above the blossom cap {cap}; "
            "use heuristic mode"
        )
    ids = sorted(core)
    local = {v: i for i, v in enumerate(ids)}
    adj = [[local[w] for w in core[v]] for v in ids]
    mate = _blossom_local(adj)
    return [(ids[v], ids[w]) for v, w in enumerate(mate) if w > v]


def maximum_matching(g, cap: int = DEFAULT_BLOSSOM_CAP) -> Matching:
    """Forced leaf edges plus a blossom matching of the Karp-Sipser core."""
    red = karp_sipser_reduce(g)
    return Matching.from_pairs(red.forced_edges + _core_matching(red.core, cap))


def _heuristic(adj: list[list[int]], seed: int) -> int:
    rng = np.random.default_rng(seed)
    lr = _LeafRemover(adj)
    record = lr.forced
    lr.drain(record)
    edges = [(u, v) for u in range(len(adj)) for v in adj[u] if u < v]
    alive = lr.alive
    while edges:
        # rejection from a shrinking pool keeps the draw uniform over live edges
        i = int(rng.integers(len(edges)))
        u, v = edges[i]
        if not (alive[u] and alive[v]):
            edges[i] = edges[-1]
            edges.pop()
            continue
        record.append((u, v))
        lr.match(u, v)
        lr.drain(record)
    return len(record)


def matching_number(g, mode: Mode | str = Mode.EXACT, seed: int = 0,
                    cap: int = DEFAULT_BLOSSOM_CAP) -> tuple[int, bool]:
    """Return ``(nu, exact)``.

    Exact mode sums forced leaf edges and a blossom matching of the core.
    Heuristic mode runs the full Karp-Sipser algorithm, matching a uniform
    random edge whenever no leaf is left; its value is a lower bound.
    """
    mode = Mode(mode)
    adj = _as_adj(g)
    if mode is Mode.HEURISTIC:
        return _heuristic(adj, seed), False
    red = karp_sipser_reduce(adj)
    return len(red.forced_edges) + len(_core_matching(red.core, cap)), True
