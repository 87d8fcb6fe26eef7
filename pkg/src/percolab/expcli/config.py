"""Experiment configuration: TOML file plus command-line overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import tomli

EXPERIMENTS = ("theory", "match", "local-limit", "binpo", "coupling", "concentration",
               "census", "percolate")
FAMILIES = ("hypercube", "complete", "random_regular", "torus", "clique_union", "custom")


class ConfigError(ValueError):
    pass


@dataclass
class HostSpec:
    family: str = "hypercube"
    d: list[int] = field(default_factory=list)
    n: list[int] = field(default_factory=list)
    k: list[int] = field(default_factory=list)
    side: list[int] = field(default_factory=list)
    dim: list[int] = field(default_factory=list)
    seed: int = 0  # random_regular host seed; the host stays fixed across percolation seeds
    path: str = ""
    allow_irregular: bool = False

    def grid(self) -> list[dict]:
        """Host parameter dicts, in config order."""
        f = self.family
        if f == "hypercube":
            return [{"d": d} for d in self.d]
        if f == "complete":
            return [{"n": n} for n in self.n]
        if f == "random_regular":
            return [{"n": n, "d": d} for n in self.n for d in self.d]
        if f == "clique_union":
            return [{"k": k, "d": d} for k in self.k for d in self.d]
        if f == "torus":
            return [{"side": s, "dim": m} for s in self.side for m in self.dim]
        return [{"path": self.path}]


@dataclass
class ExperimentConfig:
    experiment: str
    host: HostSpec = field(default_factory=HostSpec)
    c: list[float] = field(default_factory=lambda: [1.0])
    r: list[int] = field(default_factory=lambda: [1])
    seeds: int = 1
    base_seed: int = 0
    out: str = ""
    threads: int = 1
    # experiment-specific knobs
    mode: str = "exact"
    trials: int = 1000
    delta_cap: int = 0  # 0 = pick automatically from tail_tol
    tail_tol: float = 1e-6
    min_mean: float = 50.0
    p: float = -1.0  # census/percolate: explicit p overrides c/d when >= 0

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.host.family not in FAMILIES:
            raise ConfigError(f"unknown host family {self.host.family!r}")
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        if not self.c or not self.r:
            raise ConfigError("c and r grids must be non-empty")
        if any(x < 0 for x in self.c) or any(x < 0 for x in self.r):
            raise ConfigError("c and r must be non-negative")
        if self.experiment == "theory" and any(x <= 0 for x in self.c):
            raise ConfigError("theory needs a grid of positive c")
        needs_host = self.experiment not in ("theory", "binpo")
        if needs_host and not self.host.grid():
            raise ConfigError(f"host grid for family {self.host.family!r} is empty")
        if self.experiment == "binpo" and not self.host.d:
            raise ConfigError("binpo needs host.d as its d grid")
        if self.mode not in ("exact", "heuristic"):
            raise ConfigError("mode must be 'exact' or 'heuristic'")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("threads")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _listify(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def from_mapping(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    host_raw = dict(raw.pop("host", {}))
    for key in ("d", "n", "k", "side", "dim"):
        if key in host_raw:
            host_raw[key] = [int(x) for x in _listify(host_raw[key])]
    try:
        host = HostSpec(**host_raw)
    except TypeError as exc:
        raise ConfigError(f"bad [host] table: {exc}") from None
    seeds = raw.pop("seeds", 1)
    if isinstance(seeds, dict):
        raw.setdefault("base_seed", seeds.get("base", 0))
        seeds = seeds.get("count", 1)
    output = raw.pop("output", None)
    if isinstance(output, dict):
        raw.setdefault("out", output.get("path", ""))
    if "c" in raw:
        raw["c"] = [float(x) for x in _listify(raw["c"])]
    if "r" in raw:
        raw["r"] = [int(x) for x in _listify(raw["r"])]
    if "experiment" not in raw:
        raise ConfigError("config must name an experiment")
    try:
        return ExperimentConfig(host=host, seeds=int(seeds), **raw)
    except TypeError as exc:
        raise ConfigError(f"bad config key: {exc}") from None


def parse_override(text: str) -> tuple[list[str], object]:
    """``a.b=value`` with ``value`` parsed as a TOML value (bare words become strings)."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, value = text.split("=", 1)
    try:
        parsed = tomli.loads(f"v = {value}")["v"]
    except tomli.TOMLDecodeError:
        parsed = value
    return key.strip().split("."), parsed


def load(path: str | Path | None, overrides: dict | None = None,
         sets: list[str] | None = None) -> ExperimentConfig:
    raw: dict = {}
    if path:
        try:
            with open(path, "rb") as fh:
                raw = tomli.load(fh)
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for text in sets or []:
        keys, value = parse_override(text)
        if keys == ["seeds"] and isinstance(raw.get("seeds"), dict):
            keys = ["seeds", "count"]
        node = raw
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    return from_mapping(raw).validate()
