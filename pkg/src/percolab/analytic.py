"""Exact numerics for the Karp-Sipser constants and binomial/Poisson comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, xlog1py, xlogy

__all__ = [
    "ChernoffCheck",
    "KSConstants",
    "binom_logpmf",
    "chernoff_check",
    "eval_F",
    "fixed_point_y",
    "one_sided_F",
    "poisson_logpmf",
    "solve_y",
    "tv_bin_po",
]

GRID_POINTS = 10_000
BISECT_TOL = 1e-13
NEAR_BOUNDARY = 1e-9


def _g(y, c):
    return np.exp(-c * np.exp(-c * y)) - y


def _roots(c: float, grid_points: int = GRID_POINTS, tol: float = BISECT_TOL) -> list[float]:
    ys = np.linspace(0.0, 1.0, grid_points + 1)
    gs = _g(ys, c)
    roots = []
    for i in range(grid_points):
        a, b = gs[i], gs[i + 1]
        if a == 0.0:
            roots.append(float(ys[i]))
            continue
        if a * b >= 0.0:
            continue
        lo, hi = float(ys[i]), float(ys[i + 1])
        glo = float(a)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            gm = float(_g(mid, c))
            if gm == 0.0:
                lo = hi = mid
                break
            if (gm > 0) == (glo > 0):
                lo, glo = mid, gm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    if gs[-1] == 0.0:
        roots.append(1.0)
    return roots


def solve_y(c: float) -> float:
    """Smallest root in (0, 1] of ``y = exp(-c exp(-c y))``.

    Sign changes are located on a uniform grid and each bracket is bisected;
    the minimum root wins. For ``c <= e`` the root is unique.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    roots = _roots(c)
    if not roots:
        # g(0) > 0 > g(1) for c > 0, so only float underflow at the boundary gets here
        return 1.0
    return roots[0]


def fixed_point_y(c: float, steps: int = 1_000_000, damping: float = 0.5) -> float:
    """Damped iteration from 0; the map is increasing, so it climbs to the smallest root."""
    y = 0.0
    for _ in range(steps):
        nxt = (1 - damping) * y + damping * math.exp(-c * math.exp(-c * y))
        if nxt == y:
            break
        y = nxt
    return y


@dataclass(frozen=True)
class KSConstants:
    c: float
    y: float
    F: float
    residual: float
    near_boundary: bool = False


def _F_from_y(c: float, y: float) -> float:
    e = math.exp(-c * y)
    return 1.0 - (y + e + c * y * e) / 2.0


def eval_F(c: float) -> KSConstants:
    """Asymptotic matching fraction ``F(c)`` together with its fixed point."""
    y = solve_y(c)
    residual = abs(y - math.exp(-c * math.exp(-c * y)))
    return KSConstants(c, y, _F_from_y(c, y), residual, 1.0 - y < NEAR_BOUNDARY)


def one_sided_F(c0: float = math.e, eps: float = 1e-3) -> tuple[float, float]:
    """``F`` just left and right of ``c0``; nothing is asserted at ``c0`` itself."""
    return eval_F(c0 - eps).F, eval_F(c0 + eps).F


# --- binomial vs Poisson ---------------------------------------------------


def binom_logpmf(k: np.ndarray, n: int, p: float) -> np.ndarray:
    k = np.asarray(k, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        out = (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
               + xlogy(k, p) + xlog1py(n - k, -p))
    return np.where((k < 0) | (k > n), -np.inf, out)


def poisson_logpmf(k: np.ndarray, c: float) -> np.ndarray:
    k = np.asarray(k, dtype=np.float64)
    return -c + xlogy(k, c) - gammaln(k + 1)


def _cutoff(d_prime: int, p: float, c: float, eps: float = 1e-15) -> int:
    # first K where both upper tails fall below eps; Poisson tail is bounded by
    # its next term times a geometric factor once k > 2c
    k = max(int(2 * c) + 1, int(d_prime * p) + 1, 1)
    while True:
        lp = poisson_logpmf(k, c)
        lb = binom_logpmf(k, d_prime, p) if k <= d_prime else -np.inf
        tail_scale = math.log(2.0)
        if (lp + tail_scale < math.log(eps)) and (
            k > d_prime or lb + math.log(max(1.0, d_prime - k + 1.0)) < math.log(eps)
        ):
            return k
        k += 1


def tv_bin_po(d_prime: int, p: float, c: float) -> float:
    """Total variation between ``Bin(d_prime, p)`` and ``Po(c)`` on the non-negative integers."""
    if d_prime < 0 or not 0.0 <= p <= 1.0 or c < 0:
        raise ValueError("need d_prime >= 0, 0 <= p <= 1, c >= 0")
    K = _cutoff(d_prime, p, c)
    k = np.arange(K + 1)
    diff = np.abs(np.exp(binom_logpmf(k, d_prime, p)) - np.exp(poisson_logpmf(k, c)))
    return 0.5 * math.fsum(np.sort(diff))


@dataclass(frozen=True)
class ChernoffCheck:
    binom_tail: float
    po_tail: float
    bound: float
    holds: bool | None  # None when t < 10c (not applicable)
    precondition_ok: bool


def _upper_tail(logpmf_fn, start: int, stop: int) -> float:
    if start > stop:
        return 0.0
    k = np.arange(start, stop + 1)
    return float(np.exp(logsumexp(logpmf_fn(k))))


def chernoff_check(d_prime: int, p: float, c: float, t: float) -> ChernoffCheck:
    """Exact ``P(Bin(d', p) >= t)`` and ``P(Po(c) >= t)`` against ``exp(-t/3)``."""
    start = max(0, math.ceil(t))
    b_tail = _upper_tail(lambda k: binom_logpmf(k, d_prime, p), start, d_prime)
    stop = max(start, _cutoff(0, 0.0, c)) + 50
    p_tail = _upper_tail(lambda k: poisson_logpmf(k, c), start, stop)
    bound = math.exp(-t / 3.0)
    ok = t >= 10 * c
    holds = (b_tail <= bound and p_tail <= bound) if ok else None
    return ChernoffCheck(b_tail, p_tail, bound, holds, ok)
