# diversity/utils/measures_connectivity.py
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import maximum_bipartite_matching, shortest_path

from diversity.exceptions import DomainError, EmptyInputError, ParameterError
from diversity.utils.graph_core import GraphSnapshot, largest_connected_component, simple_projection
from diversity.utils.spectral import SpectralOptions, algebraic_connectivity, normalized_adjacency_top_eigs

log = logging.getLogger(__name__)

BFS_CHUNK = 64


# ============================================================
# ================= 90-percentile diameter ===================
# ============================================================

@dataclass(frozen=True)
class DiameterOptions:
    percentile: float = 0.9
    sample_size: int = 500
    seed: int = 0
    interpolate: bool = True

    def __post_init__(self):
        if not 0 < self.percentile < 1:
            raise ValueError("percentile must lie in (0, 1)")
        if self.sample_size < 1:
            raise ValueError("sample_size must be at least 1")


def hop_histogram(g: GraphSnapshot, sources: np.ndarray) -> np.ndarray:
    """
    counts[d] = number of (source, target) pairs at distance d, targets
    other than the source. Parallel edges do not shorten paths.
    """
    S = simple_projection(g)
    counts = np.zeros(1, dtype=np.int64)
    for start in range(0, len(sources), BFS_CHUNK):
        chunk = sources[start:start + BFS_CHUNK]
        dist = shortest_path(S, method="D", directed=False, unweighted=True, indices=chunk)
        if not np.all(np.isfinite(dist)):
            raise DomainError("effective diameter needs a connected graph")
        hist = np.bincount(dist.astype(np.int64).ravel())
        if len(hist) > len(counts):
            counts = np.pad(counts, (0, len(hist) - len(counts)))
        counts[:len(hist)] += hist
    counts[0] = 0
    return counts


def percentile_from_histogram(counts: np.ndarray, percentile: float, interpolate: bool) -> float:
    total = counts.sum()
    if total == 0:
        raise EmptyInputError("no vertex pairs to measure")
    cdf = np.cumsum(counts) / total
    hop = int(np.searchsorted(cdf, percentile - 1e-12, side="left"))
    if not interpolate:
        return float(hop)
    below = cdf[hop - 1] if hop >= 1 else 0.0
    step = cdf[hop] - below
    return float(hop - 1 + (percentile - below) / step)


def effective_diameter(g: GraphSnapshot, opts: DiameterOptions) -> float:
    """
    Hop count covering ``opts.percentile`` of (source, target) pairs, from
    BFS on a seeded uniform sample of sources (all vertices when the sample
    size reaches n). Interpolated linearly between integer hop counts.
    """
    if g.n < 2:
        raise EmptyInputError("effective diameter needs at least two vertices")
    if not g.is_connected:
        raise DomainError("effective diameter needs a connected graph")
    if opts.sample_size >= g.n:
        sources = np.arange(g.n)
    else:
        rng = np.random.default_rng(opts.seed)
        sources = np.sort(rng.choice(g.n, size=opts.sample_size, replace=False))
    counts = hop_histogram(g, sources)
    return percentile_from_histogram(counts, opts.percentile, opts.interpolate)


# ============================================================
# ============== Random walk return probability ==============
# ============================================================

def rw_return_probability(
    g: GraphSnapshot,
    n_steps: int = 4,
    r: int = 50,
    opts: SpectralOptions | None = None,
) -> float:
    """
    theta_r(n) = sum of mu^n over the r largest-|mu| eigenvalues of the
    normalized adjacency matrix. With r >= |V| this is the full closed-walk
    sum over cycles weighted by inverse degrees.
    """
    value, _ = rw_return_terms(g, n_steps, r, opts)
    return value


def rw_return_terms(
    g: GraphSnapshot,
    n_steps: int = 4,
    r: int = 50,
    opts: SpectralOptions | None = None,
) -> tuple[float, int]:
    """theta_r(n) together with the number of eigenvalues summed (ties at r included)."""
    if n_steps < 2 or n_steps % 2:
        raise ParameterError(f"n_steps={n_steps} must be even and at least 2")
    opts = opts or SpectralOptions(r=r)
    eig = normalized_adjacency_top_eigs(g, r, opts)
    return float(np.sum(eig.values ** n_steps)), len(eig.values)


# ============================================================
# ================= Relative controllability =================
# ============================================================

@dataclass(frozen=True)
class ControllabilityResult:
    driver_count: int
    matching_size: int
    relative: float


def directed_two_matching_size(g: GraphSnapshot) -> int:
    """
    Maximum matching of the bipartite double cover: out-copies as rows,
    in-copies as columns, arcs u+ -> v- and v+ -> u- for every edge. For an
    undirected graph that biadjacency is the simple adjacency itself.
    """
    if g.m == 0:
        return 0
    match = maximum_bipartite_matching(simple_projection(g), perm_type="column")
    return int(np.count_nonzero(match >= 0))


def relative_controllability(g: GraphSnapshot) -> ControllabilityResult:
    """Driver nodes C = max(n - matching, 1) and C_r = C / n (Hopcroft-Karp)."""
    if g.n == 0:
        raise EmptyInputError("controllability of an empty graph")
    size = directed_two_matching_size(g)
    drivers = max(g.n - size, 1)
    return ControllabilityResult(driver_count=drivers, matching_size=size, relative=drivers / g.n)


# ============================================================
# ================= Algebraic connectivity ===================
# ============================================================

def algebraic_connectivity_measure(g: GraphSnapshot, opts: SpectralOptions | None = None) -> float:
    """lambda_2 of the Laplacian of the largest connected component."""
    lcc, _ = largest_connected_component(g)
    return algebraic_connectivity(lcc, opts or SpectralOptions())
