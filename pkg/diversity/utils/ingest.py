# diversity/utils/ingest.py
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import IO, Literal

import numpy as np
import pandas as pd

from diversity.exceptions import ConfigurationError, EdgeListParseError, EmptyInputError
from diversity.utils.graph_core import (
    GraphSnapshot,
    TemporalEdgeList,
    build_snapshot,
    induced_subgraph,
    largest_connected_component,
)

log = logging.getLogger(__name__)

Scenario = Literal["full", "connected"]


# ============================================================
# ===================== Dataset config =======================
# ============================================================

@dataclass(frozen=True)
class DatasetDescriptor:
    name: str
    path: Path
    bipartite: bool = False
    notes: str = ""

    def __post_init__(self):
        if not self.name:
            raise ConfigurationError("dataset name must not be empty")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario = "full"
    timepoints: int = 100
    t1: int = 75
    include_anchor: bool = True

    def validate(self) -> "ScenarioConfig":
        if self.scenario not in ("full", "connected"):
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        if not 2 <= self.timepoints <= 10000:
            raise ConfigurationError(f"timepoints={self.timepoints} outside 2..10000")
        if not 1 <= self.t1 < self.timepoints:
            raise ConfigurationError(f"t1={self.t1} must satisfy 1 <= t1 < {self.timepoints}")
        return self

    def series_timepoints(self) -> list[int]:
        if self.scenario == "full":
            return list(range(1, self.timepoints + 1))
        start = self.t1 if self.include_anchor else self.t1 + 1
        return list(range(start, self.timepoints + 1))


def read_manifest(path: str | Path) -> list[DatasetDescriptor]:
    """
    One dataset per line: ``name<TAB>path<TAB>{unipartite|bipartite}``,
    optionally followed by free-text notes. Relative paths resolve against
    the manifest's directory.
    """
    path = Path(path)
    base = path.parent
    datasets: list[DatasetDescriptor] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", "%")):
            continue
        parts = raw.rstrip("\n").split("\t")
        if len(parts) < 3:
            raise ConfigurationError(f"manifest line {line_no}: expected name<TAB>path<TAB>kind")
        name, file_path, kind = (p.strip() for p in parts[:3])
        if kind not in ("unipartite", "bipartite"):
            raise ConfigurationError(f"manifest line {line_no}: kind must be unipartite or bipartite, got {kind!r}")
        if name in seen:
            raise ConfigurationError(f"manifest line {line_no}: duplicate dataset name {name!r}")
        seen.add(name)
        p = Path(file_path)
        datasets.append(DatasetDescriptor(
            name=name,
            path=p if p.is_absolute() else base / p,
            bipartite=kind == "bipartite",
            notes="\t".join(parts[3:]).strip(),
        ))
    if not datasets:
        raise ConfigurationError(f"manifest {path} lists no datasets")
    return datasets


# ============================================================
# ==================== KONECT edge files =====================
# ============================================================

def _read_text(source: str | os.PathLike | IO) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8-sig")
        except UnicodeDecodeError:
            return data.decode("latin-1")
    return data


def parse_edge_file(
    source: str | os.PathLike | IO,
    assume_order: bool = False,
    bipartite: bool | None = None,
) -> TemporalEdgeList:
    """
    Parse a KONECT-style edge list: ``u v [weight [timestamp]]`` per line,
    ``%`` comment lines. The weight column is validated and discarded.

    Args:
        source: path or (byte/text) stream
        assume_order: use file order as virtual time when timestamps are missing
        bipartite: force the partition flag; None reads it from a ``% bip`` header

    Returns:
        TemporalEdgeList sorted stably by timestamp, self-loops dropped.
    """
    text = _read_text(source)
    raw_lines = text.splitlines()

    if bipartite is None:
        first = raw_lines[0].lstrip("% \t").split() if raw_lines and raw_lines[0].startswith("%") else []
        bipartite = bool(first) and first[0] == "bip"

    line_nos, lines = [], []
    for i, line in enumerate(raw_lines, start=1):
        s = line.strip()
        if s and not s.startswith("%"):
            line_nos.append(i)
            lines.append(s)
    if not lines:
        raise EmptyInputError("edge file contains no edges")

    parts = pd.Series(lines).str.split(expand=True)
    if parts.shape[1] < 2 or parts[1].isna().any():
        bad = int(parts[1].isna().idxmax()) if parts.shape[1] >= 2 else 0
        raise EdgeListParseError("expected at least two columns", line_nos[bad])

    def numeric(col: int, what: str, required: bool) -> pd.Series:
        if col >= parts.shape[1]:
            if required:
                raise EdgeListParseError(f"missing {what}", line_nos[0])
            return pd.Series(np.nan, index=parts.index)
        raw = parts[col]
        values = pd.to_numeric(raw, errors="coerce")
        bad = values.isna() & raw.notna()
        if bad.any():
            idx = int(bad.idxmax())
            raise EdgeListParseError(f"non-numeric {what} {raw[idx]!r}", line_nos[idx])
        if required and values.isna().any():
            raise EdgeListParseError(f"missing {what}", line_nos[int(values.isna().idxmax())])
        return values

    u = numeric(0, "node id", True)
    v = numeric(1, "node id", True)
    numeric(2, "weight", False)
    if assume_order:
        ts = pd.Series(np.arange(len(lines), dtype=np.int64))
    else:
        ts = numeric(3, "timestamp", True)

    for series, what in ((u, "node id"), (v, "node id"), (ts, "timestamp")):
        frac = series != np.floor(series)
        if frac.any():
            idx = int(frac.idxmax())
            raise EdgeListParseError(f"{what} must be an integer", line_nos[idx])

    u = u.to_numpy(dtype=np.int64)
    v = v.to_numpy(dtype=np.int64)
    t = ts.to_numpy(dtype=np.int64)

    right_offset = 0
    if bipartite:
        right_offset = int(u.max())
        v = v + right_offset

    loops = u == v
    n_loops = int(loops.sum())
    if n_loops:
        log.warning(f"[INGEST] dropped self-loops={n_loops}")
    u, v, t = u[~loops], v[~loops], t[~loops]
    if len(t) == 0:
        raise EmptyInputError("edge file contains only self-loops")

    order = np.argsort(t, kind="stable")
    elist = TemporalEdgeList(
        u=u[order],
        v=v[order],
        t=t[order],
        bipartite=bipartite,
        right_offset=right_offset,
        node_count_hint=int(len(np.unique(np.concatenate([u, v])))),
        dropped_self_loops=n_loops,
    )
    log.info(f"[INGEST] edges={len(elist)} nodes={elist.node_count_hint} bipartite={bipartite}")
    return elist


def write_edge_file(elist: TemporalEdgeList, target: str | os.PathLike | IO) -> None:
    """Canonical KONECT TSV: ``u v 1 timestamp``, re-readable by parse_edge_file."""
    header = "% bip unweighted\n" if elist.bipartite else "% sym unweighted\n"
    frame = pd.DataFrame({
        "u": elist.u,
        "v": elist.v - elist.right_offset,
        "w": np.ones(len(elist), dtype=np.int64),
        "t": elist.t,
    })
    body = frame.to_csv(sep=" ", header=False, index=False, lineterminator="\n")
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header)
            fh.write(body)
    else:
        target.write(header)
        target.write(body)


def load_dataset(descriptor: DatasetDescriptor, assume_order: bool = False) -> TemporalEdgeList:
    return parse_edge_file(descriptor.path, assume_order=assume_order, bipartite=descriptor.bipartite)


# ============================================================
# ===================== Snapshot series ======================
# ============================================================

def make_timepoints(total_edges: int, T: int) -> list[int]:
    """Edge counts ``floor(total_edges * t / T)`` for t = 1..T."""
    if T < 1:
        raise ConfigurationError(f"T={T} must be at least 1")
    if total_edges < T:
        raise ConfigurationError(f"too few edges to split: {total_edges} edges for {T} timepoints")
    return [(total_edges * t) // T for t in range(1, T + 1)]


def series_points(elist: TemporalEdgeList, config: ScenarioConfig) -> tuple[np.ndarray | None, list[tuple[int, int]]]:
    """
    Anchor ids (None for the full scenario) and the (timepoint, edge count)
    pairs one scenario evaluates.
    """
    counts = make_timepoints(len(elist), config.timepoints)
    anchor_ids = None
    if config.scenario == "connected":
        anchor_ids = connected_anchor(elist, config)
        log.info(
            f"[SERIES] connected anchor t1={config.t1} vertices={len(anchor_ids)} "
            f"include_anchor={config.include_anchor}"
        )
    return anchor_ids, [(t, counts[t - 1]) for t in config.series_timepoints()]


def series_snapshot(elist: TemporalEdgeList, edge_count: int, anchor_ids: np.ndarray | None = None) -> GraphSnapshot:
    """One series point: the first ``edge_count`` edges, restricted to the anchor when given."""
    g = build_snapshot(elist, edge_count)
    return g if anchor_ids is None else induced_subgraph(g, anchor_ids)


def _build_many(
    elist: TemporalEdgeList,
    points: list[tuple[int, int]],
    anchor_ids: np.ndarray | None,
    jobs: int,
) -> list[GraphSnapshot]:
    def build(point: tuple[int, int]) -> GraphSnapshot:
        return series_snapshot(elist, point[1], anchor_ids)

    if jobs <= 1:
        return [build(p) for p in points]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(build, points))


def build_full_series(elist: TemporalEdgeList, config: ScenarioConfig, jobs: int = 1) -> list[GraphSnapshot]:
    """Snapshot t holds the floor(|E| t / T) oldest edges, t = 1..T."""
    _, points = series_points(elist, replace(config, scenario="full"))
    return _build_many(elist, points, None, jobs)


def connected_anchor(elist: TemporalEdgeList, config: ScenarioConfig) -> np.ndarray:
    """Original ids of the largest connected component at timepoint t1."""
    counts = make_timepoints(len(elist), config.timepoints)
    anchor = build_snapshot(elist, counts[config.t1 - 1])
    lcc, mapping = largest_connected_component(anchor)
    if lcc.n == 0:
        raise EmptyInputError("largest connected component at t1 is empty")
    return mapping


def build_connected_series(
    elist: TemporalEdgeList,
    config: ScenarioConfig,
    jobs: int = 1,
) -> tuple[np.ndarray, list[GraphSnapshot]]:
    """
    Fix the LCC vertex set at t1 and follow its induced subgraph for
    t = t1..T (t1+1..T without the anchor point).
    """
    anchor_ids, points = series_points(elist, replace(config, scenario="connected"))
    return anchor_ids, _build_many(elist, points, anchor_ids, jobs)


def node_counts(elist: TemporalEdgeList, counts: list[int]) -> np.ndarray:
    """Number of distinct vertices among the first k edges, for each k."""
    endpoints = np.stack([elist.u, elist.v], axis=1).ravel()
    _, first = np.unique(endpoints, return_index=True)
    first_edge = np.sort(first // 2)
    return np.searchsorted(first_edge, np.asarray(counts), side="left")
