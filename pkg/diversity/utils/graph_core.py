# diversity/utils/graph_core.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from diversity.exceptions import DomainError, EmptyInputError, RangeError

log = logging.getLogger(__name__)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


# ============================================================
# ================== Temporal edge history ===================
# ============================================================

@dataclass(frozen=True, eq=False)
class TemporalEdgeList:
    """
    Timestamped multigraph history, sorted stably by timestamp.

    For bipartite networks the right-hand ids are stored shifted by
    ``right_offset`` so both partitions share one id space; the edge file
    writer shifts them back.
    """
    u: np.ndarray
    v: np.ndarray
    t: np.ndarray
    bipartite: bool = False
    right_offset: int = 0
    node_count_hint: int = 0
    dropped_self_loops: int = 0

    def __post_init__(self):
        for name in ("u", "v", "t"):
            object.__setattr__(self, name, _frozen(np.array(getattr(self, name), dtype=np.int64)))
        if not (len(self.u) == len(self.v) == len(self.t)):
            raise ValueError("u, v and t must have the same length")
        if len(self.t) > 1 and np.any(np.diff(self.t) < 0):
            raise ValueError("edges must be sorted by timestamp")
        if np.any(self.u == self.v):
            raise DomainError("self-loops must be removed before building a TemporalEdgeList")
        if self.bipartite and len(self.u) and (
            self.u.max() > self.right_offset or self.v.min() <= self.right_offset
        ):
            raise DomainError("bipartite edges must connect the left and right partitions")

    @classmethod
    def from_pairs(
        cls,
        pairs: Iterable[tuple[int, int]],
        timestamps: Sequence[int] | None = None,
        bipartite: bool = False,
        right_offset: int = 0,
    ) -> "TemporalEdgeList":
        """
        Build from (u, v) pairs. Without timestamps the pair order is the time
        order (1, 2, 3, ...). Self-loops are dropped and counted.
        """
        arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        if timestamps is None:
            t = np.arange(1, len(arr) + 1, dtype=np.int64)
        else:
            t = np.asarray(timestamps, dtype=np.int64)
        loops = arr[:, 0] == arr[:, 1]
        n_loops = int(loops.sum())
        if n_loops:
            log.warning(f"[EDGES] dropped self-loops={n_loops}")
        arr, t = arr[~loops], t[~loops]
        order = np.argsort(t, kind="stable")
        return cls(
            u=arr[order, 0],
            v=arr[order, 1],
            t=t[order],
            bipartite=bipartite,
            right_offset=right_offset,
            node_count_hint=int(len(np.unique(arr))) if len(arr) else 0,
            dropped_self_loops=n_loops,
        )

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TemporalEdgeList):
            return NotImplemented
        return (
            np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.t, other.t)
            and self.bipartite == other.bipartite
            and self.right_offset == other.right_offset
        )

    __hash__ = None


# ============================================================
# ===================== Graph snapshots ======================
# ============================================================

@dataclass(frozen=True)
class DegreeSequence:
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(np.array(self.values, dtype=np.int64))
        if len(vals) and vals.min() < 1:
            raise DomainError("degree sequences hold positive degrees only")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class GraphSnapshot:
    """
    Immutable undirected multigraph.

    ``adjacency`` is a symmetric CSR matrix whose entries are edge
    multiplicities; ``node_ids`` maps dense index -> original node id and is
    ascending.
    """
    adjacency: sp.csr_matrix
    node_ids: np.ndarray
    bipartite: bool = False
    degrees: np.ndarray = field(init=False)
    n: int = field(init=False)
    m: int = field(init=False)

    def __post_init__(self):
        A = sp.csr_matrix(self.adjacency, dtype=np.float64, copy=True)
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        degrees = _frozen(np.asarray(A.sum(axis=1)).ravel().astype(np.int64))
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "node_ids", _frozen(np.array(self.node_ids, dtype=np.int64)))
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "n", A.shape[0])
        m2 = int(degrees.sum())
        # handshake identity
        assert m2 % 2 == 0, "degree sum must be even"
        object.__setattr__(self, "m", m2 // 2)
        assert len(self.node_ids) == self.n

    # --------------------------------------------------------
    def degree_sequence(self) -> DegreeSequence:
        return DegreeSequence(self.degrees[self.degrees > 0])

    def multiplicity(self, i: int, j: int) -> int:
        return int(self.adjacency[i, j])

    @property
    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        count, _ = connected_components(self)
        return count == 1

    def __repr__(self) -> str:
        kind = "bipartite" if self.bipartite else "unipartite"
        return f"GraphSnapshot(n={self.n}, m={self.m}, {kind})"


def from_edges(
    pairs: Iterable[tuple[int, int]],
    n: int | None = None,
    bipartite: bool = False,
    node_ids: Sequence[int] | None = None,
) -> GraphSnapshot:
    """
    Build a snapshot from dense-index pairs. Repeated pairs become parallel
    edges. With ``n`` given, vertices without edges are kept as isolated.
    """
    arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    if len(arr) and np.any(arr[:, 0] == arr[:, 1]):
        raise DomainError("self-loops are not allowed in a snapshot")
    if n is None:
        n = int(arr.max()) + 1 if len(arr) else 0
    if len(arr) and (arr.min() < 0 or arr.max() >= n):
        raise DomainError("edge endpoint outside 0..n-1")
    rows = np.concatenate([arr[:, 0], arr[:, 1]])
    cols = np.concatenate([arr[:, 1], arr[:, 0]])
    A = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    ids = np.arange(n) if node_ids is None else node_ids
    return GraphSnapshot(A, ids, bipartite=bipartite)


def build_snapshot(elist: TemporalEdgeList, edge_count: int) -> GraphSnapshot:
    """
    Snapshot made of the ``edge_count`` oldest edges; the vertex set is the
    set of their endpoints.
    """
    if edge_count < 1 or edge_count > len(elist):
        raise RangeError(f"edge_count={edge_count} outside 1..{len(elist)}")
    u = elist.u[:edge_count]
    v = elist.v[:edge_count]
    ids, inverse = np.unique(np.concatenate([u, v]), return_inverse=True)
    rows, cols = inverse[:edge_count], inverse[edge_count:]
    A = sp.coo_matrix(
        (np.ones(2 * edge_count), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(len(ids), len(ids)),
    ).tocsr()
    return GraphSnapshot(A, ids, bipartite=elist.bipartite)


def _subgraph_by_index(g: GraphSnapshot, idx: np.ndarray) -> GraphSnapshot:
    idx = np.sort(np.asarray(idx, dtype=np.int64))
    A = g.adjacency[idx][:, idx]
    return GraphSnapshot(A, g.node_ids[idx], bipartite=g.bipartite)


# ============================================================
# ================= Components and subgraphs =================
# ============================================================

def connected_components(g: GraphSnapshot) -> tuple[int, np.ndarray]:
    if g.n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    count, labels = _cc(g.adjacency, directed=False)
    return int(count), labels


def largest_connected_component(g: GraphSnapshot) -> tuple[GraphSnapshot, np.ndarray]:
    """
    Largest connected component; ties go to the component holding the
    smallest original node id.

    Returns:
        (component snapshot, array mapping new index -> original node id)
    """
    if g.m == 0:
        raise EmptyInputError("largest connected component of a graph without edges")
    count, labels = connected_components(g)
    if count == 1:
        return g, g.node_ids
    sizes = np.bincount(labels, minlength=count)
    best = np.flatnonzero(sizes == sizes.max())
    if len(best) > 1:
        # node_ids ascending: first vertex of a component holds its smallest id
        first_index = np.array([np.flatnonzero(labels == c)[0] for c in best])
        chosen = best[np.argmin(g.node_ids[first_index])]
    else:
        chosen = best[0]
    sub = _subgraph_by_index(g, np.flatnonzero(labels == chosen))
    return sub, sub.node_ids


def induced_subgraph(g: GraphSnapshot, keep: Iterable[int]) -> GraphSnapshot:
    """
    Subgraph on the vertices whose original ids are in ``keep``; parallel
    edges keep their multiplicity and vertices left without edges stay.
    """
    keep_ids = np.unique(np.fromiter(keep, dtype=np.int64))
    known = np.isin(keep_ids, g.node_ids)
    if not np.all(known):
        unknown = keep_ids[~known][:5].tolist()
        raise DomainError(f"unknown node ids in keep set: {unknown}")
    return _subgraph_by_index(g, np.searchsorted(g.node_ids, keep_ids))


def non_isolated(g: GraphSnapshot) -> tuple[GraphSnapshot, np.ndarray]:
    """Drop degree-0 vertices; returns the subgraph and its node-id mapping."""
    idx = np.flatnonzero(g.degrees > 0)
    if len(idx) == g.n:
        return g, g.node_ids
    log.debug(f"[GRAPH] excluded isolated vertices={g.n - len(idx)}")
    sub = _subgraph_by_index(g, idx)
    return sub, sub.node_ids


def simple_projection(g: GraphSnapshot) -> sp.csr_matrix:
    """0/1 adjacency with parallel edges collapsed."""
    S = g.adjacency.copy()
    S.data = np.ones_like(S.data)
    return S


def with_edge(g: GraphSnapshot, i: int, j: int) -> GraphSnapshot:
    """Copy of ``g`` plus one edge between dense indices i and j."""
    if i == j:
        raise DomainError("self-loops are not allowed in a snapshot")
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise DomainError(f"vertex index outside 0..{g.n - 1}")
    extra = sp.coo_matrix(([1.0, 1.0], ([i, j], [j, i])), shape=(g.n, g.n))
    return GraphSnapshot((g.adjacency + extra).tocsr(), g.node_ids, bipartite=g.bipartite)


def average_degree(g: GraphSnapshot) -> float:
    if g.n == 0:
        raise EmptyInputError("average degree of an empty graph")
    return 2.0 * g.m / g.n
