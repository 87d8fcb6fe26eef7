"""CSV writing with ``#`` header comments."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .. import __version__
from .config import ExperimentConfig

WALL_TIME_PREFIX = "# wall_time_s:"


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def render(cfg: ExperimentConfig, columns, rows, wall_time: float | None, kind: str = "rows") -> str:
    buf = io.StringIO()
    buf.write(f"# percolab {__version__}\n")
    buf.write(f"# experiment: {cfg.experiment} ({kind})\n")
    buf.write(f"# config_sha256: {cfg.digest()}\n")
    buf.write(f"# config: {json.dumps(cfg.to_dict(), sort_keys=True)}\n")
    buf.write(f"# columns: {','.join(columns)}\n")
    if wall_time is not None:
        buf.write(f"{WALL_TIME_PREFIX} {wall_time:.3f}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def summary_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".summary" + (path.suffix or ".csv"))


def write_result(cfg: ExperimentConfig, result, path: str | Path, wall_time: float | None) -> list[Path]:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(cfg, result.columns, result.rows, wall_time))
    written = [path]
    if result.summary_columns:
        sp = summary_path(path)
        sp.write_text(render(cfg, result.summary_columns, result.summary_rows, None, "summary"))
        written.append(sp)
    return written


def write_edge_list(cfg: ExperimentConfig, edges, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# percolab {__version__} percolate\n")
        fh.write(f"# config_sha256: {cfg.digest()}\n")
        for u, v in edges:
            fh.write(f"{u} {v}\n")


def read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Parse a result CSV, skipping comment lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, list(reader)
