# diversity/utils/measures_linkpred.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.sparse as sp

from diversity.exceptions import SkippedMeasureError, UndefinedMeasureError
from diversity.utils.graph_core import GraphSnapshot, simple_projection
from diversity.utils.spectral import SpectralOptions, adjacency_top_eigs, spectral_norm

log = logging.getLogger(__name__)

NEAR_ZERO_EIGENVALUE = 1e-9


# ============================================================
# ================= Clustering coefficient ===================
# ============================================================

@dataclass(frozen=True)
class TriangleCensus:
    triangles: int
    wedges: int


def triangle_census(g: GraphSnapshot) -> TriangleCensus:
    """
    Triangles and wedges of the simple projection. Edges are oriented from
    lower to higher (degree, index) rank so each triangle is counted once.
    """
    S = simple_projection(g)
    d = np.asarray(S.sum(axis=1)).ravel()
    wedges = int(np.sum(d * (d - 1) // 2))
    if g.n < 3 or wedges == 0:
        return TriangleCensus(0, wedges)
    rank = np.empty(g.n, dtype=np.int64)
    rank[np.lexsort((np.arange(g.n), d))] = np.arange(g.n)
    coo = S.tocoo()
    keep = rank[coo.row] < rank[coo.col]
    U = sp.csr_matrix((np.ones(int(keep.sum())), (coo.row[keep], coo.col[keep])), shape=S.shape)
    triangles = int(round((U @ U).multiply(U).sum()))
    return TriangleCensus(triangles, wedges)


def clustering_coefficient(g: GraphSnapshot) -> float:
    """Global clustering (transitivity): 3 * triangles / wedges."""
    if g.bipartite:
        raise SkippedMeasureError("clustering coefficient is always zero on bipartite networks")
    census = triangle_census(g)
    if census.wedges == 0:
        return 0.0
    return 3.0 * census.triangles / census.wedges


# ============================================================
# ===================== Fractional rank ======================
# ============================================================

@dataclass(frozen=True)
class SpectrumSummary:
    lambda1: float
    top_abs_eigs: np.ndarray
    m: int


def spectrum_summary(g: GraphSnapshot, r: int, opts: SpectralOptions) -> SpectrumSummary:
    eig = adjacency_top_eigs(g, r, opts)
    top = np.abs(eig.values)
    return SpectrumSummary(lambda1=float(top[0]), top_abs_eigs=top, m=g.m)


def frobenius_squared(g: GraphSnapshot) -> float:
    """||A||_F^2 = sum over ordered pairs of multiplicity^2 (2|E| for simple graphs)."""
    return float(np.dot(g.adjacency.data, g.adjacency.data))


def fractional_rank(g: GraphSnapshot, opts: SpectralOptions | None = None, lambda1: float | None = None) -> float:
    """rank_F = ||A||_F^2 / lambda_1^2."""
    if lambda1 is None:
        lambda1, _ = spectral_norm(g, opts or SpectralOptions())
    frob = frobenius_squared(g)
    if frob != 2.0 * g.m:
        log.debug(f"[RANK] multigraph numerator: sum mult^2={frob:.0f} vs 2|E|={2 * g.m}")
    return frob / lambda1 ** 2


def power_law_from_eigenvalues(top_abs_eigs: np.ndarray) -> float:
    """
    alpha = 1 + r' / sum ln(|lambda_k| / lambda_min) over the retained top
    eigenvalues; values below 1e-9 * lambda_1 are dropped first.
    """
    vals = np.sort(np.abs(np.asarray(top_abs_eigs, dtype=np.float64)))[::-1]
    if len(vals) == 0 or vals[0] <= 0:
        raise UndefinedMeasureError("no nonzero eigenvalues")
    kept = vals[vals > NEAR_ZERO_EIGENVALUE * vals[0]]
    if len(kept) < 2:
        raise UndefinedMeasureError("eigenvalue power law needs at least two nonzero eigenvalues")
    s = float(np.sum(np.log(kept / kept[-1])))
    if s <= 0.0:
        return math.inf
    return 1.0 + len(kept) / s


def eigenvalue_power_law_exponent(g: GraphSnapshot, r: int, opts: SpectralOptions) -> float:
    if r < 2:
        raise UndefinedMeasureError("eigenvalue power law needs r >= 2")
    return power_law_from_eigenvalues(spectrum_summary(g, r, opts).top_abs_eigs)


# ============================================================
# ================ Rank-one update of lambda_1 ===============
# ============================================================

def estimate_lambda1_after_edge(g: GraphSnapshot | None, eig: tuple[float, np.ndarray], u: int, v: int) -> float:
    """First-order estimate lambda_1 + 2 u_1[u] u_1[v] after adding edge {u, v}."""
    lam, vec = eig
    return float(lam + 2.0 * vec[u] * vec[v])


def rank_shrink_threshold(lambda1: float, m: int, form: Literal["squared", "linear"] = "squared") -> float:
    """
    Centrality product above which adding one edge lowers rank_F to first
    order. ``squared`` keeps lambda_1 squared in rank_F, giving
    lambda_1 (sqrt(1 + 1/m) - 1) / 2; ``linear`` is the cruder lambda_1 / (2m).
    """
    if form == "linear":
        return lambda1 / (2.0 * m)
    return lambda1 * (math.sqrt(1.0 + 1.0 / m) - 1.0) / 2.0


def rank_shrink_predicate(
    g: GraphSnapshot,
    eig: tuple[float, np.ndarray],
    u: int,
    v: int,
    form: Literal["squared", "linear"] = "linear",
) -> bool:
    lam, vec = eig
    return bool(vec[u] * vec[v] > rank_shrink_threshold(lam, g.m, form))
