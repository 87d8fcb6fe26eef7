"""Experiment drivers. Each ``run_*`` returns an ``ExperimentResult`` whose rows
are ordered by the config grid, independent of worker scheduling."""

from __future__ import annotations

import hashlib
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

from .. import analytic, census as census_mod, graphgen, gwtree, matching
from .config import ExperimentConfig

THREADS_ENV = "PERCOLAB_THREADS"


@dataclass
class ExperimentResult:
    columns: list[str]
    rows: list[list]
    summary_columns: list[str] = field(default_factory=list)
    summary_rows: list[list] = field(default_factory=list)


def derive_seed(base_seed: int, params, index: int) -> int:
    """64-bit run seed from the base seed, the parameter tuple and the seed index."""
    blob = json.dumps([base_seed, params, index], sort_keys=True, default=str)
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "little")


def host_label(params: dict) -> str:
    return ",".join(f"{k}={v}" for k, v in params.items())


@lru_cache(maxsize=8)
def _host(family: str, key: tuple, host_seed: int, allow_irregular: bool = False):
    params = dict(key)
    if family == "hypercube":
        d = params["d"]
        if d > graphgen.MAX_HYPERCUBE_DIM:
            return graphgen.HypercubeOracle(d)
        return graphgen.make_hypercube(d)
    if family == "complete":
        return graphgen.make_complete(params["n"])
    if family == "random_regular":
        return graphgen.make_random_regular(params["n"], params["d"], host_seed)
    if family == "clique_union":
        return graphgen.make_clique_union(params["k"], params["d"])
    if family == "torus":
        return graphgen.make_torus(params["side"], params["dim"])
    return graphgen.load_edge_list(params["path"], allow_irregular=allow_irregular)


def build_host(cfg: ExperimentConfig, params: dict):
    return _host(cfg.host.family, tuple(sorted(params.items())), cfg.host.seed,
                 cfg.host.allow_irregular)


def _require_materialized(host):
    if not isinstance(host, graphgen.HostGraph):
        raise graphgen.GraphSizeError(
            f"hypercube dimension {host.d} is too large to materialize for this experiment")
    return host


def _retention(host, c: float) -> float:
    return min(1.0, c / host.d) if host.d else 0.0


def _pool_map(fn, cells, threads: int):
    if threads <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, cells, chunksize=max(1, len(cells) // (4 * threads))))


def resolve_threads(cfg: ExperimentConfig) -> int:
    env = os.environ.get(THREADS_ENV)
    return int(env) if env else cfg.threads


def _mean_std(xs: list[float]) -> tuple[float, float]:
    mean = math.fsum(xs) / len(xs)
    std = statistics.stdev(xs) if len(xs) > 1 else 0.0
    return mean, std


# --- theory --------------------------------------------------------------------

THEORY_COLUMNS = ["c", "y", "F", "residual", "near_boundary"]


def run_theory(cfg: ExperimentConfig) -> ExperimentResult:
    rows = []
    for c in cfg.c:
        k = analytic.eval_F(c)
        rows.append([c, k.y, k.F, k.residual, k.near_boundary])
    return ExperimentResult(THEORY_COLUMNS, rows)


# --- matching convergence ---------------------------------------------------------

MATCH_COLUMNS = ["family", "host", "d", "c", "seed", "nu", "n_vertices", "ratio", "exact"]
MATCH_SUMMARY = ["family", "host", "d", "c", "seeds", "mean_ratio", "std_ratio", "F", "abs_err"]


def _match_cell(args):
    cfg, params, c, seed = args
    host = _require_materialized(build_host(cfg, params))
    g = graphgen.percolate(host, _retention(host, c), seed)
    nu, exact = matching.matching_number(g, cfg.mode, seed)
    return [cfg.host.family, host_label(params), host.d, c, seed, nu, host.n, nu / host.n, exact]


def run_matching_convergence(cfg: ExperimentConfig) -> ExperimentResult:
    cells = []
    for params in cfg.host.grid():
        for c in cfg.c:
            key = [cfg.host.family, params, c]
            cells += [(cfg, params, c, derive_seed(cfg.base_seed, key, i)) for i in range(cfg.seeds)]
    if cfg.mode == "exact":
        for params in cfg.host.grid():
            host = build_host(cfg, params)
            if host.n > matching.DEFAULT_BLOSSOM_CAP:
                raise graphgen.GraphSizeError(
                    f"host has {host.n} vertices, above the exact-mode cap "
                    f"{matching.DEFAULT_BLOSSOM_CAP}; use mode = \"heuristic\"")
    rows = _pool_map(_match_cell, cells, resolve_threads(cfg))
    return ExperimentResult(MATCH_COLUMNS, rows, MATCH_SUMMARY, summarize_match(rows))


def summarize_match(rows) -> list[list]:
    groups: dict[tuple, list] = {}
    for row in rows:
        groups.setdefault((row[0], row[1], row[2], row[3]), []).append(row[7])
    out = []
    for (family, host, d, c), ratios in groups.items():
        mean, std = _mean_std(ratios)
        F = analytic.eval_F(c).F if c > 0 else 0.0
        out.append([family, host, d, c, len(ratios), mean, std, F, abs(mean - F)])
    return out


# --- local limit -----------------------------------------------------------------

LOCAL_COLUMNS = ["family", "host", "d", "c", "r", "seed", "tv", "tv_tail_band",
                 "non_tree_mass", "decay_bound"]
LOCAL_SUMMARY = ["family", "host", "d", "c", "r", "seeds", "median_tv", "mean_tv",
                 "decay_bound", "exceed_fraction"]


@lru_cache(maxsize=16)
def gw_measure(c: float, r: int, delta_cap: int, tail_tol: float) -> gwtree.GWMeasure:
    cap = delta_cap or gwtree.default_delta_cap(c, r, tail_tol)
    return gwtree.enumerate_gw_measure(c, r, cap)


def decay_bound(d: int, r: int) -> float:
    return math.exp(-0.25 * math.log(d) ** (1.0 / (2 * r)))


def _local_cell(args):
    cfg, params, c, r, seed = args
    host = _require_materialized(build_host(cfg, params))
    g = graphgen.percolate(host, _retention(host, c), seed)
    emp = census_mod.census(g, r)
    tv = census_mod.tv_distance(emp, gw_measure(c, r, cfg.delta_cap, cfg.tail_tol))
    return [cfg.host.family, host_label(params), host.d, c, r, seed, tv.value, tv.band,
            emp.non_tree_mass, decay_bound(host.d, r)]


def run_local_limit(cfg: ExperimentConfig) -> ExperimentResult:
    cells = []
    for params in cfg.host.grid():
        for c in cfg.c:
            for r in cfg.r:
                key = [cfg.host.family, params, c, r]
                cells += [(cfg, params, c, r, derive_seed(cfg.base_seed, key, i))
                          for i in range(cfg.seeds)]
    rows = _pool_map(_local_cell, cells, resolve_threads(cfg))
    return ExperimentResult(LOCAL_COLUMNS, rows, LOCAL_SUMMARY, summarize_local(rows))


def summarize_local(rows) -> list[list]:
    groups: dict[tuple, list] = {}
    for row in rows:
        groups.setdefault(tuple(row[:5]), []).append(row)
    out = []
    for key, rs in groups.items():
        tvs = [x[6] for x in rs]
        bound = rs[0][9]
        exceed = sum(t >= bound for t in tvs) / len(tvs)
        out.append([*key, len(tvs), statistics.median(tvs), math.fsum(tvs) / len(tvs), bound, exceed])
    return out


# --- binomial vs Poisson rate ------------------------------------------------------

BINPO_COLUMNS = ["d", "d_prime", "c", "tv", "tv_times_sqrt_d"]
BINPO_SUMMARY = ["c", "d_prime_rule", "min_tv_sqrt_d", "max_tv_sqrt_d", "band_ratio"]


def run_binpo_rate(cfg: ExperimentConfig) -> ExperimentResult:
    rows = []
    for c in cfg.c:
        for d in cfg.host.d:
            p = c / d
            for dp in (d, d - math.ceil(d**0.25)):
                tv = analytic.tv_bin_po(dp, p, c)
                rows.append([d, dp, c, tv, tv * math.sqrt(d)])
    return ExperimentResult(BINPO_COLUMNS, rows, BINPO_SUMMARY, summarize_binpo(rows))


def summarize_binpo(rows) -> list[list]:
    groups: dict[tuple, list] = {}
    for d, dp, c, tv, scaled in rows:
        groups.setdefault((c, "d" if dp == d else "d-ceil(d^1/4)"), []).append(scaled)
    out = []
    for (c, rule), xs in groups.items():
        lo, hi = min(xs), max(xs)
        out.append([c, rule, lo, hi, hi / lo if lo > 0 else (1.0 if hi == 0 else math.inf)])
    return out


# --- coupling ----------------------------------------------------------------------

COUPLING_COLUMNS = ["family", "host", "d", "c", "r", "trials", "seed", "success",
                    "abort_degree_deficit", "abort_offspring_mismatch", "abort_degree_overflow",
                    "abort_cross_edge", "recheck_failures", "failure_rate", "rate_bound",
                    "rate_ratio"]


def coupling_rate_bound(d: int, r: int) -> float:
    return math.log(d) ** r / math.sqrt(d)


def _coupling_cell(args):
    cfg, params, c, r, seed = args
    host = build_host(cfg, params)
    res = census_mod.coupling_batch(host, c, r, cfg.trials, seed)
    cnt = res["counts"]
    O = census_mod.Outcome
    fail = 1.0 - cnt[O.SUCCESS] / cfg.trials
    bound = coupling_rate_bound(host.d, r)
    return [cfg.host.family, host_label(params), host.d, c, r, cfg.trials, seed,
            cnt[O.SUCCESS], cnt[O.ABORT_DEGREE_DEFICIT], cnt[O.ABORT_OFFSPRING_MISMATCH],
            cnt[O.ABORT_DEGREE_OVERFLOW], cnt[O.ABORT_CROSS_EDGE], res["recheck_failures"],
            fail, bound, fail / bound]


def run_coupling_rate(cfg: ExperimentConfig) -> ExperimentResult:
    cells = []
    for params in cfg.host.grid():
        for c in cfg.c:
            for r in cfg.r:
                seed = derive_seed(cfg.base_seed, [cfg.host.family, params, c, r], 0)
                cells.append((cfg, params, c, r, seed))
    rows = _pool_map(_coupling_cell, cells, resolve_threads(cfg))
    return ExperimentResult(COUPLING_COLUMNS, rows)


# --- concentration -----------------------------------------------------------------

CONC_COLUMNS = ["family", "host", "d", "c", "r", "seed", "tree_code", "count"]
CONC_SUMMARY = ["family", "host", "d", "c", "r", "tree_code", "seeds", "mean_count", "stddev",
                "mean_pow_23", "deviation_fraction"]


def _conc_cell(args):
    cfg, params, c, r, seed = args
    host = _require_materialized(build_host(cfg, params))
    g = graphgen.percolate(host, _retention(host, c), seed)
    emp = census_mod.census(g, r)
    base = [cfg.host.family, host_label(params), host.d, c, r, seed]
    return [base + [code, k] for code, k in emp.counts.items() if emp.is_tree[code]]


def run_concentration(cfg: ExperimentConfig) -> ExperimentResult:
    cells = []
    for params in cfg.host.grid():
        for c in cfg.c:
            for r in cfg.r:
                key = [cfg.host.family, params, c, r]
                cells += [(cfg, params, c, r, derive_seed(cfg.base_seed, key, i))
                          for i in range(cfg.seeds)]
    rows = [row for chunk in _pool_map(_conc_cell, cells, resolve_threads(cfg)) for row in chunk]
    return ExperimentResult(CONC_COLUMNS, rows, CONC_SUMMARY,
                            summarize_concentration(rows, cfg.seeds, cfg.min_mean))


def summarize_concentration(rows, seeds: int, min_mean: float) -> list[list]:
    """Per tree class: mean, sd and deviation fraction over all seeds (absent = 0)."""
    groups: dict[tuple, dict[str, dict[int, int]]] = {}
    seed_lists: dict[tuple, list[int]] = {}
    for family, host, d, c, r, seed, code, k in rows:
        key = (family, host, d, c, r)
        groups.setdefault(key, {}).setdefault(code, {})[seed] = k
        sl = seed_lists.setdefault(key, [])
        if not sl or sl[-1] != seed:
            sl.append(seed)
    out = []
    for key, classes in groups.items():
        all_seeds = list(dict.fromkeys(seed_lists[key]))
        for code in sorted(classes):
            xs = [classes[code].get(s, 0) for s in all_seeds]
            # seeds in which no vertex had a tree ball never appear in the rows
            xs += [0] * (seeds - len(all_seeds))
            mean, std = _mean_std(xs)
            if mean < min_mean:
                continue
            thr = mean ** (2 / 3)
            frac = sum(abs(x - mean) >= thr for x in xs) / len(xs)
            out.append([*key, code, len(xs), mean, std, thr, frac])
    return out


# --- direct module access ------------------------------------------------------------

CENSUS_COLUMNS = ["canon_code", "is_tree", "count", "probability"]


def run_census(cfg: ExperimentConfig) -> ExperimentResult:
    params = cfg.host.grid()[0]
    host = _require_materialized(build_host(cfg, params))
    p = cfg.p if cfg.p >= 0 else _retention(host, cfg.c[0])
    emp = census_mod.census(graphgen.percolate(host, p, cfg.base_seed), cfg.r[0])
    rows = [[code, emp.is_tree[code], k, k / emp.n] for code, k in emp.counts.items()]
    return ExperimentResult(CENSUS_COLUMNS, rows)


PERCOLATE_COLUMNS = ["u", "v"]


def run_percolate(cfg: ExperimentConfig) -> ExperimentResult:
    params = cfg.host.grid()[0]
    host = _require_materialized(build_host(cfg, params))
    p = cfg.p if cfg.p >= 0 else _retention(host, cfg.c[0])
    g = graphgen.percolate(host, p, cfg.base_seed)
    return ExperimentResult(PERCOLATE_COLUMNS, g.edges.tolist())


RUNNERS = {
    "theory": run_theory,
    "match": run_matching_convergence,
    "local-limit": run_local_limit,
    "binpo": run_binpo_rate,
    "coupling": run_coupling_rate,
    "concentration": run_concentration,
    "census": run_census,
    "percolate": run_percolate,
}
