"""Poisson Galton-Watson trees: sampling, exact ball probabilities, enumeration,
and canonical codes for rooted graphs.

Tree codes are AHU strings: a vertex is ``"(" + sorted child codes + ")"``,
so a bare root is ``"()"``. Rooted graphs with a cycle get a code prefixed
with ``"G"`` (exact canonical adjacency string, up to ``NONTREE_EXACT_CAP``
vertices) or ``"H"`` (refinement hash, disambiguated by the census).
"""

from __future__ import annotations

import csv
import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

__all__ = [
    "CanonCode",
    "GWMeasure",
    "RootedGraph",
    "RootedTree",
    "canon_code",
    "cap_probability",
    "children_of_code",
    "count_classes",
    "default_delta_cap",
    "enumerate_gw_measure",
    "gw_ball_prob",
    "sample_gw_codes",
    "sample_gw_truncated",
    "star_code",
    "tree_from_code",
]

GW_NODE_GUARD = 10**7
ENUM_GUARD = 10**7
NONTREE_EXACT_CAP = 20
# search-tree nodes before a highly symmetric ball falls back to the hash code
SEARCH_BUDGET = 20_000


class TreeSizeError(ValueError):
    pass


@dataclass(frozen=True)
class RootedTree:
    """Children lists indexed by node id; node 0 is the root."""

    children: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.children)

    @property
    def height(self) -> int:
        h = 0
        frontier = [0]
        while True:
            nxt = [w for v in frontier for w in self.children[v]]
            if not nxt:
                return h
            h += 1
            frontier = nxt

    @property
    def max_degree(self) -> int:
        return max(len(ch) + (i > 0) for i, ch in enumerate(self.children))

    def code(self) -> str:
        return _tree_code(self.children, 0)

    def as_rooted_graph(self) -> "RootedGraph":
        adj: list[list[int]] = [[] for _ in self.children]
        for v, ch in enumerate(self.children):
            for w in ch:
                adj[v].append(w)
                adj[w].append(v)
        return RootedGraph(adj, 0)


@dataclass(frozen=True)
class RootedGraph:
    adj: list[list[int]]
    root: int = 0
    labels: tuple | None = field(default=None, compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.adj)

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2


@dataclass(frozen=True)
class CanonCode:
    code: str
    is_tree: bool
    graph: RootedGraph | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return self.code


def _tree_code(children, root: int) -> str:
    order = [root]
    for v in order:
        order.extend(children[v])
    codes: dict[int, str] = {}
    for v in reversed(order):
        codes[v] = "(" + "".join(sorted(codes[w] for w in children[v])) + ")"
    return codes[root]


def star_code(j: int) -> str:
    """Code of the star with ``j`` leaves rooted at its centre."""
    return "(" + "()" * j + ")"


def children_of_code(code: str) -> list[str]:
    """Split a tree code into its top-level child codes."""
    out, depth, start = [], 0, 1
    for i in range(1, len(code) - 1):
        if code[i] == "(":
            if depth == 0:
                start = i
            depth += 1
        else:
            depth -= 1
            if depth == 0:
                out.append(code[start : i + 1])
    return out


def tree_from_code(code: str) -> RootedTree:
    children: list[list[int]] = [[]]
    stack = [0]
    for ch in code[1:-1]:
        if ch == "(":
            children.append([])
            children[stack[-1]].append(len(children) - 1)
            stack.append(len(children) - 1)
        else:
            stack.pop()
    return RootedTree(tuple(tuple(c) for c in children))


# --- canonical codes ---------------------------------------------------------


def _bfs_depths(adj, root) -> list[int]:
    depth = [-1] * len(adj)
    depth[root] = 0
    order = [root]
    for v in order:
        for w in adj[v]:
            if depth[w] < 0:
                depth[w] = depth[v] + 1
                order.append(w)
    return depth


def _refine(adj, colors: list[int]) -> list[int]:
    """Colour refinement; new colours are ranks of (colour, sorted neighbour colours)."""
    n = len(adj)
    num = len(set(colors))
    while True:
        sigs = [(colors[v], tuple(sorted(colors[w] for w in adj[v]))) for v in range(n)]
        ranks = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if len(ranks) == num:
            return new
        colors, num = new, len(ranks)


class _BudgetExceeded(Exception):
    pass


def _exact_form(adj, colors: list[int], budget: list[int]) -> tuple:
    budget[0] -= 1
    if budget[0] < 0:
        raise _BudgetExceeded
    colors = _refine(adj, colors)
    n = len(adj)
    if len(set(colors)) == n:
        perm = sorted(range(n), key=colors.__getitem__)
        pos = {v: i for i, v in enumerate(perm)}
        return tuple(sorted((min(pos[v], pos[w]), max(pos[v], pos[w]))
                            for v in range(n) for w in adj[v] if v < w))
    cells = Counter(colors)
    target = min(c for c, k in cells.items() if k > 1)
    best = None
    for v in range(n):
        if colors[v] != target:
            continue
        # individualize v: split its cell by doubling and nudging
        trial = [2 * c + (1 if (c == target and u != v) else 0) for u, c in enumerate(colors)]
        form = _exact_form(adj, trial, budget)
        if best is None or form < best:
            best = form
    return best


def _nontree_hash(adj, root) -> str:
    depth = _bfs_depths(adj, root)
    colors = _refine(adj, [0 if v == root else depth[v] + 1 for v in range(len(adj))])
    n = len(adj)
    hist = sorted(Counter(colors).items())
    between = sorted(Counter(
        (min(colors[v], colors[w]), max(colors[v], colors[w]))
        for v in range(n) for w in adj[v] if v < w).items())
    return hashlib.sha256(repr((n, hist, between)).encode()).hexdigest()[:32]


def canon_code(ball: RootedGraph) -> CanonCode:
    """Canonical code of a connected rooted graph."""
    adj, root = ball.adj, ball.root
    n = len(adj)
    depth = _bfs_depths(adj, root)
    if min(depth) < 0:
        raise ValueError("rooted graph must be connected")
    if ball.num_edges == n - 1:
        children = [[w for w in adj[v] if depth[w] == depth[v] + 1] for v in range(n)]
        return CanonCode(_tree_code(children, root), True)
    if n <= NONTREE_EXACT_CAP:
        colors = [0 if v == root else depth[v] + 1 for v in range(n)]
        try:
            form = _exact_form(adj, colors, [SEARCH_BUDGET])
        except _BudgetExceeded:
            pass
        else:
            return CanonCode("G%d:" % n + ",".join(f"{a}-{b}" for a, b in form), False)
    return CanonCode("H%d:" % n + _nontree_hash(adj, root), False, ball)


# --- sampling ---------------------------------------------------------------


def sample_gw_truncated(c: float, r: int, seed) -> RootedTree:
    """Breadth-first ``Po(c)`` Galton-Watson tree cut at depth ``r``."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    rng = np.random.default_rng(seed)
    children: list[tuple[int, ...]] = []
    frontier = [0]
    total = 1
    for _ in range(r):
        ks = rng.poisson(c, size=len(frontier)) if c > 0 else np.zeros(len(frontier), int)
        nxt = []
        for k in ks.tolist():
            children.append(tuple(range(total, total + k)))
            nxt.extend(range(total, total + k))
            total += k
            if total > GW_NODE_GUARD:
                raise TreeSizeError(f"Galton-Watson sample exceeded {GW_NODE_GUARD} nodes")
        frontier = nxt
        if not frontier:
            break
    children.extend(() for _ in range(total - len(children)))
    return RootedTree(tuple(children))


def sample_gw_codes(c: float, r: int, samples: int, seed) -> tuple[Counter, np.ndarray]:
    """Draw many truncated trees at once.

    Returns a counter of codes and each tree's maximum degree.
    """
    rng = np.random.default_rng(seed)
    # levels[i] = offspring counts of the nodes at depth i
    levels = []
    width = samples
    for _ in range(r):
        ks = rng.poisson(c, size=width) if c > 0 else np.zeros(width, dtype=np.int64)
        levels.append(ks)
        width = int(ks.sum())
    codes = ["()"] * width
    maxdeg = np.ones(width, dtype=np.int64)
    for depth in range(r - 1, -1, -1):
        ks = levels[depth]
        if depth == r - 1:
            codes = [star_code(k) for k in ks.tolist()]
        else:
            bounds = np.concatenate([[0], np.cumsum(ks)]).tolist()
            codes = ["(" + "".join(sorted(codes[bounds[i] : bounds[i + 1]])) + ")"
                     for i in range(len(ks))]
        child_max = np.zeros(len(ks), dtype=np.int64)
        parent = np.repeat(np.arange(len(ks)), ks)
        if parent.size:
            np.maximum.at(child_max, parent, maxdeg)
        maxdeg = np.maximum(ks + (1 if depth > 0 else 0), child_max)
    if r == 0:
        maxdeg = np.zeros(samples, dtype=np.int64)
    return Counter(codes), maxdeg


# --- exact probabilities ------------------------------------------------------


@lru_cache(maxsize=None)
def _code_logprob(code: str, remaining: int, c: float) -> float:
    if remaining == 0:
        return 0.0
    kids = children_of_code(code)
    D = len(kids)
    if c == 0:
        if D:
            return -math.inf
        return 0.0
    lp = -c + D * math.log(c)
    for kid, mult in Counter(kids).items():
        lp -= math.lgamma(mult + 1)
        lp += mult * _code_logprob(kid, remaining - 1, c)
    return lp


def _code_height(code: str) -> int:
    depth = best = 0
    for ch in code:
        if ch == "(":
            depth += 1
            best = max(best, depth)
        else:
            depth -= 1
    return best - 1


def gw_ball_prob(t: RootedTree | str, r: int, c: float) -> float:
    """Probability that the depth-``r`` ball of the ``Po(c)`` tree is isomorphic to ``t``."""
    code = t if isinstance(t, str) else t.code()
    if _code_height(code) > r:
        raise ValueError(f"tree height {_code_height(code)} exceeds radius {r}")
    return math.exp(_code_logprob(code, r, float(c)))


@dataclass
class GWMeasure:
    r: int
    c: float
    delta_cap: int
    mass: dict[str, float] = field(repr=False)
    tail_mass: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["canon_code", "probability"])
            for code in sorted(self.mass):
                w.writerow([code, repr(self.mass[code])])
            w.writerow(["tail_mass", repr(self.tail_mass)])

    @classmethod
    def from_csv(cls, path, r: int, c: float, delta_cap: int) -> "GWMeasure":
        mass, tail = {}, 0.0
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        for code, prob in rows[1:]:
            if code == "tail_mass":
                tail = float(prob)
            else:
                mass[code] = float(prob)
        return cls(r, c, delta_cap, mass, tail)


def count_classes(r: int, delta_cap: int) -> int:
    """Number of rooted trees of height <= r with maximum degree <= delta_cap."""
    n = 1
    for level in range(r):
        is_root = level == r - 1
        kmax = delta_cap if is_root else delta_cap - 1
        n = sum(math.comb(n + k - 1, k) for k in range(max(kmax, -1) + 1))
    return n


def cap_probability(c: float, r: int, delta_cap: int) -> float:
    """P(every vertex of the depth-r ball has degree <= delta_cap), by recursion on levels."""
    s = 1.0
    pmf = [math.exp(-c) * c**j / math.factorial(j) for j in range(delta_cap + 1)]
    for level in range(r):
        is_root = level == r - 1
        kmax = delta_cap if is_root else delta_cap - 1
        s = math.fsum(pmf[j] * s**j for j in range(kmax + 1))
    return s


def default_delta_cap(c: float, r: int, tol: float = 1e-6) -> int:
    """Smallest degree cap leaving at most ``tol`` of the GW ball law unenumerated."""
    D = 1
    while 1.0 - cap_probability(c, r, D) > tol:
        D += 1
    return D


def enumerate_gw_measure(c: float, r: int, delta_cap: int) -> GWMeasure:
    """All rooted trees of height <= r and degree <= delta_cap with their GW probabilities."""
    if r < 0 or delta_cap < 0:
        raise ValueError("radius and degree cap must be non-negative")
    total = count_classes(r, delta_cap)
    if total > ENUM_GUARD:
        raise TreeSizeError(
            f"{total} tree classes exceed the enumeration guard {ENUM_GUARD}; "
            "use Monte-Carlo sampling instead"
        )
    c = float(c)
    # classes[(code, logprob)] for subtrees hanging below a non-root vertex
    classes = [("()", 0.0)]
    for level in range(r):
        is_root = level == r - 1
        kmax = delta_cap if is_root else delta_cap - 1
        classes.sort()
        nxt = []
        logc = math.log(c) if c > 0 else -math.inf
        for k in range(max(kmax, -1) + 1):
            if c == 0 and k:
                break
            base = -c + (k * logc if k else 0.0)
            for combo in combinations_with_replacement(classes, k):
                lp = base + sum(x[1] for x in combo)
                for mult in Counter(x[0] for x in combo).values():
                    lp -= math.lgamma(mult + 1)
                nxt.append(("(" + "".join(x[0] for x in combo) + ")", lp))
        classes = nxt
    mass = {code: math.exp(lp) for code, lp in classes}
    tail = 1.0 - math.fsum(mass.values())
    return GWMeasure(r, c, delta_cap, mass, max(tail, 0.0))
