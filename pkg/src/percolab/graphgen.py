"""Regular host graphs and seeded edge percolation.

Hosts are stored as CSR adjacency (``indptr``/``indices``) with sorted
neighbour lists. The complete graph is kept implicit because ``K_n`` for
``n = 10**5`` has ~5e9 edges; its neighbourhoods and edge indices are
computed on demand.

Edges are indexed lexicographically by ``(min endpoint, max endpoint)``.
Percolation is keyed on ``(seed, edge index)`` so the retained set never
depends on iteration order or chunking.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "Family",
    "GraphSizeError",
    "HostGraph",
    "HypercubeOracle",
    "ParityError",
    "GenerationError",
    "PercolatedGraph",
    "load_edge_list",
    "make_clique_union",
    "make_complete",
    "make_hypercube",
    "make_random_regular",
    "make_torus",
    "percolate",
    "uniform_keyed",
]

MAX_HYPERCUBE_DIM = 30
RANDOM_REGULAR_RETRY_CAP = 500
# Edge-index block size for sparse sampling on implicit (complete) hosts.
_BLOCK = 1 << 22


class GraphSizeError(ValueError):
    """Requested graph exceeds a size guard or is below the minimum size."""


class ParityError(ValueError):
    pass


class GenerationError(RuntimeError):
    pass


class Family(str, enum.Enum):
    HYPERCUBE = "hypercube"
    COMPLETE = "complete"
    RANDOM_REGULAR = "random_regular"
    TORUS = "torus"
    CLIQUE_UNION = "clique_union"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class HostGraph:
    """Finite host graph, d-regular unless built with ``allow_irregular``.

    ``indptr``/``indices`` are ``None`` for the implicit complete graph.
    """

    n: int
    d: int
    family: Family
    indptr: np.ndarray | None = field(default=None, repr=False)
    indices: np.ndarray | None = field(default=None, repr=False)
    params: dict = field(default_factory=dict)
    regular: bool = True

    @property
    def implicit(self) -> bool:
        return self.indptr is None

    @property
    def m(self) -> int:
        if self.implicit:
            return self.n * (self.n - 1) // 2
        return int(self.indptr[-1]) // 2

    def neighbors(self, v: int) -> np.ndarray:
        if self.implicit:
            return np.delete(np.arange(self.n, dtype=np.int64), v)
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        if self.implicit:
            return np.full(self.n, self.n - 1, dtype=np.int64)
        return np.diff(self.indptr)

    @cached_property
    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of ``(u, v)`` with ``u < v``, in edge-index order."""
        if self.implicit:
            raise GraphSizeError("implicit host: edges are not materialized")
        u = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        v = self.indices.astype(np.int64)
        keep = u < v
        return np.stack([u[keep], v[keep]], axis=1)

    def edge_endpoints(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map edge indices to endpoint arrays."""
        idx = np.asarray(idx, dtype=np.int64)
        if not self.implicit:
            e = self.edges[idx]
            return e[:, 0], e[:, 1]
        return _complete_unrank(self.n, idx)

    def edge_index(self, u: int, v: int) -> int:
        """Lexicographic index of edge ``{u, v}``; ``KeyError`` if absent."""
        u, v = min(u, v), max(u, v)
        if self.implicit:
            if u == v or not (0 <= u and v < self.n):
                raise KeyError((u, v))
            return u * self.n - u * (u + 1) // 2 + (v - u - 1)
        e = self.edges
        lo = np.searchsorted(e[:, 0], u, side="left")
        hi = np.searchsorted(e[:, 0], u, side="right")
        j = lo + np.searchsorted(e[lo:hi, 1], v)
        if j >= hi or e[j, 1] != v:
            raise KeyError((u, v))
        return int(j)


def _complete_unrank(n: int, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # row u starts at s(u) = u*n - u(u+1)/2; invert with the quadratic formula then fix rounding
    idx = np.asarray(idx, dtype=np.int64)
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * idx, 0.0))) / 2).astype(np.int64)
    u = np.clip(u, 0, n - 2)
    start = u * n - u * (u + 1) // 2
    for _ in range(3):
        over = start > idx
        u = np.where(over, u - 1, u)
        start = u * n - u * (u + 1) // 2
        nxt = (u + 1) * n - (u + 1) * (u + 2) // 2
        under = nxt <= idx
        u = np.where(under, u + 1, u)
        start = u * n - u * (u + 1) // 2
    v = idx - start + u + 1
    return u, v


def _csr_from_edges(n: int, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    src = np.concatenate([u, v]).astype(np.int64)
    dst = np.concatenate([v, u]).astype(np.int64)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst


def _build(n, d, family, u, v, params, *, allow_irregular=False) -> HostGraph:
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if np.any(u == v):
        raise ValueError("host graph must be loop-free")
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    keys = lo * n + hi
    if np.unique(keys).size != keys.size:
        raise ValueError("host graph must not contain multi-edges")
    indptr, indices = _csr_from_edges(n, lo, hi)
    deg = np.diff(indptr)
    regular = bool(n == 0 or deg.min() == deg.max())
    if regular and n:
        d = int(deg[0])
    elif not allow_irregular:
        raise ValueError(
            f"host graph is not regular (degrees {int(deg.min())}..{int(deg.max())})"
        )
    return HostGraph(n, d, family, indptr, indices, params, regular)


def make_hypercube(d: int) -> HostGraph:
    """Binary hypercube ``Q^d``: labels in ``[0, 2^d)``, neighbours differ in one bit."""
    if not 1 <= d <= MAX_HYPERCUBE_DIM:
        raise GraphSizeError(f"hypercube dimension must be in [1, {MAX_HYPERCUBE_DIM}], got {d}")
    n = 1 << d
    x = np.arange(n, dtype=np.int64)
    bits = np.int64(1) << np.arange(d, dtype=np.int64)
    nbrs = x[:, None] ^ bits[None, :]
    nbrs.sort(axis=1)
    indptr = np.arange(0, n * d + 1, d, dtype=np.int64)
    return HostGraph(n, d, Family.HYPERCUBE, indptr, nbrs.ravel(), {"d": d})


class HypercubeOracle:
    """Neighbour oracle for ``Q^d`` with ``d`` too large to materialize.

    Vertices are Python ints; only ``n``, ``d`` and ``neighbors`` are offered.
    """

    family = Family.HYPERCUBE
    regular = True

    def __init__(self, d: int):
        if d < 1:
            raise GraphSizeError("hypercube dimension must be positive")
        self.d = d
        self.n = 1 << d
        self._bits = [1 << i for i in range(d)]

    def neighbors(self, v: int) -> list[int]:
        return sorted(v ^ b for b in self._bits)


def make_complete(n: int) -> HostGraph:
    """Implicit complete graph ``K_n`` (``d = n - 1``)."""
    if n < 2:
        raise GraphSizeError(f"complete graph needs n >= 2, got {n}")
    return HostGraph(n, n - 1, Family.COMPLETE, params={"n": n})


def make_clique_union(k: int, d: int) -> HostGraph:
    """``k`` disjoint copies of ``K_{d+1}``."""
    if k < 1 or d < 1:
        raise GraphSizeError("clique union needs k >= 1 and d >= 1")
    s = d + 1
    if k * s * d // 2 > 5 * 10**8:
        raise GraphSizeError("clique union too large to materialize")
    a, b = np.triu_indices(s, 1)
    off = (np.arange(k, dtype=np.int64) * s)[:, None]
    u = (a[None, :] + off).ravel()
    v = (b[None, :] + off).ravel()
    return _build(k * s, d, Family.CLIQUE_UNION, u, v, {"k": k, "d": d})


def make_torus(side: int, dim: int) -> HostGraph:
    """Discrete torus ``(Z_side)^dim``, ``2*dim``-regular; ``side >= 3``."""
    if side < 3 or dim < 1:
        raise GraphSizeError("torus needs side >= 3 and dim >= 1")
    n = side**dim
    if n * dim > 5 * 10**8:
        raise GraphSizeError("torus too large to materialize")
    x = np.arange(n, dtype=np.int64)
    us, vs = [], []
    stride = 1
    for _ in range(dim):
        coord = (x // stride) % side
        nxt = x + stride * (np.where(coord == side - 1, 1 - side, 1))
        us.append(x)
        vs.append(nxt)
        stride *= side
    return _build(n, 2 * dim, Family.TORUS, np.concatenate(us), np.concatenate(vs),
                  {"side": side, "dim": dim})


def make_random_regular(n: int, d: int, seed: int) -> HostGraph:
    """Simple ``d``-regular graph by stub pairing with rejection.

    Stubs are shuffled and paired; pairs forming loops or repeated edges are
    sent back to the pool, which is re-paired until empty. A pool that stops
    shrinking triggers a full restart, up to ``RANDOM_REGULAR_RETRY_CAP``.
    """
    if (n * d) % 2:
        raise ParityError(f"n*d must be even, got n={n}, d={d}")
    if not 0 <= d < n:
        raise GraphSizeError(f"need 0 <= d < n, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    for _ in range(RANDOM_REGULAR_RETRY_CAP):
        keys = _try_pairing(n, d, rng)
        if keys is not None:
            return _build(n, d, Family.RANDOM_REGULAR, keys // n, keys % n,
                          {"n": n, "d": d, "seed": seed})
    raise GenerationError(
        f"random regular pairing failed {RANDOM_REGULAR_RETRY_CAP} times (n={n}, d={d})"
    )


def _try_pairing(n: int, d: int, rng: np.random.Generator) -> np.ndarray | None:
    accepted = np.empty(0, dtype=np.int64)
    pool = np.repeat(np.arange(n, dtype=np.int64), d)
    stalls = 0
    while pool.size:
        rng.shuffle(pool)
        a, b = pool[0::2], pool[1::2]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * n + hi
        ok = lo != hi
        # first occurrence of a key within this round wins
        _, first = np.unique(keys, return_index=True)
        is_first = np.zeros(keys.size, dtype=bool)
        is_first[first] = True
        ok &= is_first
        if accepted.size:
            pos = np.searchsorted(accepted, keys)
            pos = np.minimum(pos, accepted.size - 1)
            ok &= accepted[pos] != keys
        if not ok.any():
            stalls += 1
            if stalls > 50:
                return None
            continue
        stalls = 0
        accepted = np.sort(np.concatenate([accepted, keys[ok]]))
        pool = np.concatenate([a[~ok], b[~ok]])
    return accepted


def load_edge_list(path: str | Path, *, allow_irregular: bool = False) -> HostGraph:
    """Read a ``u v`` per line edge list (0-indexed, ``#`` comments)."""
    us, vs = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            us.append(int(parts[0]))
            vs.append(int(parts[1]))
    if not us:
        raise ValueError(f"{path}: empty edge list")
    n = max(max(us), max(vs)) + 1
    if min(min(us), min(vs)) < 0:
        raise ValueError(f"{path}: negative vertex id")
    return _build(n, 0, Family.CUSTOM, us, vs, {"path": str(path)},
                  allow_irregular=allow_irregular)


# --- percolation -----------------------------------------------------------

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def uniform_keyed(seed: int, idx: np.ndarray) -> np.ndarray:
    """Counter-based uniforms in [0, 1): one value per ``(seed, idx)`` key."""
    with np.errstate(over="ignore"):
        key = _splitmix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
        x = _splitmix64(np.asarray(idx, dtype=np.uint64) * _GOLDEN ^ key)
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True, eq=False)
class PercolatedGraph:
    """Retained-edge view of a host. ``retained`` holds sorted edge indices."""

    host: HostGraph
    retained: np.ndarray = field(repr=False)
    p: float
    seed: int

    @property
    def n(self) -> int:
        return self.host.n

    @property
    def num_edges(self) -> int:
        return int(self.retained.size)

    def mask(self) -> np.ndarray:
        """Bitset over host edge indices (explicit hosts only)."""
        out = np.zeros(self.host.m, dtype=bool)
        out[self.retained] = True
        return out

    @cached_property
    def edges(self) -> np.ndarray:
        u, v = self.host.edge_endpoints(self.retained)
        return np.stack([u, v], axis=1) if u.size else np.empty((0, 2), dtype=np.int64)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        e = self.edges
        return _csr_from_edges(self.n, e[:, 0], e[:, 1])

    def neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self.csr
        return indices[indptr[v] : indptr[v + 1]]

    def adjacency_lists(self) -> list[list[int]]:
        indptr, indices = self.csr
        flat = indices.tolist()
        bounds = indptr.tolist()
        return [flat[bounds[i] : bounds[i + 1]] for i in range(self.n)]


def percolate(host: HostGraph, p: float, seed: int) -> PercolatedGraph:
    """Retain each host edge independently with probability ``p``.

    Explicit hosts draw one keyed uniform per edge index. The implicit
    complete host is split into fixed blocks of edge indices; each block,
    keyed by ``(seed, block)``, draws a binomial count and a uniform subset.
    """
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"retention probability must lie in [0, 1], got {p}")
    m = host.m
    if host.implicit:
        retained = _percolate_blocks(m, p, seed)
    else:
        chunks = []
        for start in range(0, m, _BLOCK):
            idx = np.arange(start, min(m, start + _BLOCK), dtype=np.int64)
            chunks.append(idx[uniform_keyed(seed, idx) < p])
        retained = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    return PercolatedGraph(host, retained, float(p), int(seed))


def _percolate_blocks(m: int, p: float, seed: int) -> np.ndarray:
    out = []
    for b, start in enumerate(range(0, m, _BLOCK)):
        size = min(_BLOCK, m - start)
        rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, b])
        k = rng.binomial(size, p)
        if k:
            out.append(np.sort(rng.choice(size, k, replace=False)).astype(np.int64) + start)
    return np.concatenate(out) if out else np.empty(0, dtype=np.int64)
