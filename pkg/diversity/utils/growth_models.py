# diversity/utils/growth_models.py
"""
Synthetic temporal networks for the three growth mechanisms: preferential
attachment (by degree or by eigenvector centrality), triangle closing and
spectral kernel growth. Every generator is deterministic under its seed and
stamps edges 1, 2, 3, ... in creation order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm, solve

from diversity.exceptions import GenerationComplete, ParameterError, UndefinedMeasureError
from diversity.utils.graph_core import GraphSnapshot, TemporalEdgeList, from_edges
from diversity.utils.ingest import make_timepoints, node_counts
from diversity.utils.measures_linkpred import estimate_lambda1_after_edge
from diversity.utils.spectral import SpectralOptions, adjacency_top_eigs, spectral_norm

log = logging.getLogger(__name__)

Model = Literal["ba", "eigenvector_pa", "triangle_closing", "kernel"]
KernelKind = Literal["exponential", "neumann"]

MAX_KERNEL_NODES = 512
RESOLVE_EVERY = 100
# observed range of the densification exponent in real networks
OBSERVED_GROWTH_RANGE = (1.1, 1.7)
RANK_SHRINK_GROWTH_LIMIT = 1.5


@dataclass(frozen=True)
class GrowthConfig:
    model: Model = "ba"
    n_target: int = 1000
    edges_per_step: int = 2
    kernel_kind: KernelKind = "exponential"
    kernel_alpha: float = 0.01
    seed: int = 0
    # edges of the random-tree seed graph (triangle closing, kernel); None spans all vertices
    seed_edges: int | None = None
    # total edges for the fixed-vertex models; None means edges_per_step * n_target
    n_edges: int | None = None
    epsilon: float = 0.01

    def validate(self) -> "GrowthConfig":
        if self.model not in ("ba", "eigenvector_pa", "triangle_closing", "kernel"):
            raise ParameterError(f"unknown growth model {self.model!r}")
        if self.n_target < 10:
            raise ParameterError(f"n_target={self.n_target} must be at least 10")
        if self.edges_per_step < 1:
            raise ParameterError("edges_per_step must be at least 1")
        if self.model in ("ba", "eigenvector_pa") and self.n_target <= self.edges_per_step + 1:
            raise ParameterError("n_target must exceed edges_per_step + 1")
        if self.model == "kernel":
            if self.n_target > MAX_KERNEL_NODES:
                raise ParameterError(f"kernel growth is dense; n_target must be <= {MAX_KERNEL_NODES}")
            if self.kernel_kind not in ("exponential", "neumann"):
                raise ParameterError(f"unknown kernel {self.kernel_kind!r}")
            if self.kernel_alpha <= 0:
                raise ParameterError("kernel_alpha must be positive")
        if self.epsilon < 0:
            raise ParameterError("epsilon must be non-negative")
        if self.seed_edges is not None and not 0 <= self.seed_edges <= self.n_target - 1:
            raise ParameterError(f"seed_edges must lie in 0..{self.n_target - 1}")
        return self

    @property
    def total_edges(self) -> int:
        return self.n_edges if self.n_edges is not None else self.edges_per_step * self.n_target

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GeneratedNetwork:
    elist: TemporalEdgeList
    metadata: dict = field(default_factory=dict)


def _to_elist(pairs: list[tuple[int, int]]) -> TemporalEdgeList:
    return TemporalEdgeList.from_pairs(pairs)


def _clique(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def _random_tree(n_vertices: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Random recursive tree: vertex i attaches to a uniform earlier vertex."""
    return [(int(rng.integers(i)), i) for i in range(1, n_vertices)]


# ============================================================
# ================= Barabasi-Albert (degree) =================
# ============================================================

def generate_ba(config: GrowthConfig) -> GeneratedNetwork:
    """
    Clique on m0+1 vertices, then each arriving vertex attaches m0 edges to
    distinct existing vertices drawn proportionally to degree.
    """
    config.validate()
    m0, n = config.edges_per_step, config.n_target
    rng = np.random.default_rng(config.seed)

    pairs = _clique(m0 + 1)
    # each vertex appears once per incident edge
    repeated = np.empty(2 * (len(pairs) + m0 * (n - m0 - 1)), dtype=np.int64)
    size = 0
    for a, b in pairs:
        repeated[size:size + 2] = (a, b)
        size += 2

    for source in range(m0 + 1, n):
        targets: list[int] = []
        while len(targets) < m0:
            pick = int(repeated[rng.integers(size)])
            if pick not in targets:
                targets.append(pick)
        for t in targets:
            pairs.append((source, t))
            repeated[size:size + 2] = (t, source)
            size += 2

    log.info(f"[GROWTH] ba n={n} m0={m0} edges={len(pairs)}")
    return GeneratedNetwork(_to_elist(pairs), {"model": "ba", "seed_graph": f"clique({m0 + 1})"})


# ============================================================
# ============ Preferential attachment (eigenvector) =========
# ============================================================

def generate_eigenvector_pa(config: GrowthConfig, opts: SpectralOptions | None = None) -> GeneratedNetwork:
    """
    Like generate_ba, with attachment weights given by the dominant
    adjacency eigenvector. The eigenpair is carried forward by the rank-one
    estimate after each arriving vertex and re-solved exactly every
    RESOLVE_EVERY edges (every tenth of the edge count while the graph is
    smaller); the drift at each re-solve goes into the metadata.
    """
    config.validate()
    opts = opts or SpectralOptions(seed=config.seed)
    m0, n = config.edges_per_step, config.n_target
    rng = np.random.default_rng(config.seed)

    pairs = _clique(m0 + 1)
    lam, vec = spectral_norm(from_edges(pairs), opts)
    x = np.zeros(n, dtype=np.float64)
    x[:m0 + 1] = vec
    since_resolve = 0
    checkpoints: list[dict] = []

    for source in range(m0 + 1, n):
        weights = np.clip(x[:source], 0.0, None)
        if np.count_nonzero(weights) < m0:
            weights = weights + 1e-12
        targets = rng.choice(source, size=m0, replace=False, p=weights / weights.sum())
        targets = [int(t) for t in targets]

        # eigen-equation value for the newcomer, then Rayleigh quotient of the extended vector
        x[source] = x[targets].sum() / lam
        numerator = lam
        for t in targets:
            numerator = estimate_lambda1_after_edge(None, (numerator, x), source, t)
            pairs.append((source, t))
        norm_sq = float(np.dot(x[:source + 1], x[:source + 1]))
        lam = numerator / norm_sq
        x[:source + 1] /= math.sqrt(norm_sq)

        since_resolve += m0
        if since_resolve >= min(RESOLVE_EVERY, max(m0, len(pairs) // 10)):
            exact, vec = spectral_norm(from_edges(pairs, n=source + 1), opts)
            drift = abs(lam - exact) / exact
            checkpoints.append({"edges": len(pairs), "estimate": lam, "exact": exact, "relative_drift": drift})
            log.debug(f"[GROWTH] eigenvector re-solve at edges={len(pairs)} drift={drift:.2e}")
            lam = exact
            x[:source + 1] = vec
            since_resolve = 0

    max_drift = max((c["relative_drift"] for c in checkpoints), default=0.0)
    log.info(f"[GROWTH] eigenvector_pa n={n} m0={m0} edges={len(pairs)} max_drift={max_drift:.2e}")
    return GeneratedNetwork(_to_elist(pairs), {
        "model": "eigenvector_pa",
        "seed_graph": f"clique({m0 + 1})",
        "resolve_every": RESOLVE_EVERY,
        "checkpoints": checkpoints,
        "max_relative_drift": max_drift,
    })


# ============================================================
# ===================== Triangle closing =====================
# ============================================================

def _seed_tree(config: GrowthConfig, rng: np.random.Generator) -> list[tuple[int, int]]:
    k = config.n_target - 1 if config.seed_edges is None else config.seed_edges
    return _random_tree(k + 1, rng) if k > 0 else []


def _uniform_non_edge(n: int, edges: set[tuple[int, int]], rng: np.random.Generator) -> tuple[int, int]:
    while True:
        i, j = (int(a) for a in rng.choice(n, size=2, replace=False))
        pair = (min(i, j), max(i, j))
        if pair not in edges:
            return pair


def _next_triangle_closing_pair(
    n: int,
    pairs: list[tuple[int, int]],
    edges: set[tuple[int, int]],
    epsilon: float,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Non-adjacent pair drawn with weight (common neighbours + epsilon)."""
    non_adjacent = n * (n - 1) // 2 - len(edges)
    if non_adjacent <= 0:
        raise GenerationComplete(f"complete graph on {n} vertices reached")
    if pairs:
        arr = np.asarray(pairs)
        S = sp.coo_matrix(
            (np.ones(2 * len(arr)), (np.concatenate([arr[:, 0], arr[:, 1]]), np.concatenate([arr[:, 1], arr[:, 0]]))),
            shape=(n, n),
        ).tocsr()
        C = S @ S
        C = sp.triu(C - C.multiply(S), k=1).tocoo()
        C.eliminate_zeros()
        cn_total = float(C.data.sum())
    else:
        C, cn_total = None, 0.0
    total = cn_total + epsilon * non_adjacent
    if total <= 0 or rng.random() * total >= cn_total:
        return _uniform_non_edge(n, edges, rng)
    idx = int(np.searchsorted(np.cumsum(C.data), rng.random() * cn_total, side="right"))
    idx = min(idx, len(C.data) - 1)
    return int(C.row[idx]), int(C.col[idx])


def generate_triangle_closing(config: GrowthConfig) -> GeneratedNetwork:
    """
    Random recursive tree seed on a fixed vertex set; each step adds the
    edge between a non-adjacent pair drawn proportionally to its common
    neighbour count plus epsilon. Stops early once the graph is complete.
    """
    config.validate()
    n = config.n_target
    rng = np.random.default_rng(config.seed)
    pairs = _seed_tree(config, rng)
    edges = set(pairs)
    target = max(config.total_edges, len(pairs))
    complete = False
    while len(pairs) < target:
        try:
            pair = _next_triangle_closing_pair(n, pairs, edges, config.epsilon, rng)
        except GenerationComplete as exc:
            log.info(f"[GROWTH] triangle closing stopped: {exc}")
            complete = True
            break
        pairs.append(pair)
        edges.add(pair)
    log.info(f"[GROWTH] triangle_closing n={n} edges={len(pairs)} complete={complete}")
    return GeneratedNetwork(_to_elist(pairs), {
        "model": "triangle_closing",
        "seed_graph": "random_recursive_tree",
        "epsilon": config.epsilon,
        "complete": complete,
    })


# ============================================================
# ====================== Kernel growth =======================
# ============================================================

def kernel_scores(A: np.ndarray, kind: KernelKind, alpha: float) -> np.ndarray:
    """exp(alpha A), or the Neumann kernel (I - alpha A)^-1 when alpha * lambda_1 < 1."""
    A = np.asarray(A, dtype=np.float64)
    if kind == "exponential":
        return expm(alpha * A)
    lam1 = float(np.max(np.abs(np.linalg.eigvalsh(A)))) if A.size else 0.0
    if alpha * lam1 >= 1.0:
        raise ParameterError(
            f"Neumann kernel diverges: kernel_alpha={alpha} * lambda_1={lam1:.4f} >= 1"
        )
    I = np.eye(A.shape[0])
    return solve(I - alpha * A, I, assume_a="sym")


def generate_kernel_growth(config: GrowthConfig) -> GeneratedNetwork:
    """
    Each step evaluates the kernel on the dense adjacency matrix and adds
    an edge between a non-adjacent pair drawn proportionally to its score
    (uniformly when every score is zero).
    """
    config.validate()
    n = config.n_target
    rng = np.random.default_rng(config.seed)
    pairs = _seed_tree(config, rng)
    A = np.zeros((n, n), dtype=np.float64)
    for i, j in pairs:
        A[i, j] = A[j, i] = 1.0
    iu, ju = np.triu_indices(n, k=1)
    target = max(config.total_edges, len(pairs))
    complete = False
    while len(pairs) < target:
        open_pairs = A[iu, ju] == 0
        if not open_pairs.any():
            complete = True
            log.info(f"[GROWTH] kernel growth stopped: complete graph on {n} vertices reached")
            break
        K = kernel_scores(A, config.kernel_kind, config.kernel_alpha)
        w = np.clip(K[iu, ju], 0.0, None) * open_pairs
        if w.sum() <= 0:
            w = open_pairs.astype(np.float64)
        k = int(rng.choice(len(w), p=w / w.sum()))
        i, j = int(iu[k]), int(ju[k])
        A[i, j] = A[j, i] = 1.0
        pairs.append((i, j))
    log.info(f"[GROWTH] kernel kind={config.kernel_kind} alpha={config.kernel_alpha} n={n} edges={len(pairs)}")
    return GeneratedNetwork(_to_elist(pairs), {
        "model": "kernel",
        "kernel": config.kernel_kind,
        "kernel_alpha": config.kernel_alpha,
        "seed_graph": "random_recursive_tree",
        "sampling": "proportional to kernel score over non-adjacent pairs",
        "complete": complete,
    })


GENERATORS = {
    "ba": generate_ba,
    "eigenvector_pa": generate_eigenvector_pa,
    "triangle_closing": generate_triangle_closing,
    "kernel": generate_kernel_growth,
}


def generate(config: GrowthConfig) -> GeneratedNetwork:
    net = GENERATORS[config.validate().model](config)
    net.metadata.update({"config": config.to_dict(), "edges": len(net.elist)})
    return net


# ============================================================
# ==================== Growth diagnostics ====================
# ============================================================

@dataclass(frozen=True)
class GrowthDiagnostic:
    c_hat: float | None
    predicted_rank_direction: Literal["Down"] | None
    in_observed_range: bool | None
    status: Literal["ok", "undefined"] = "ok"

    def to_dict(self) -> dict:
        return asdict(self)


def fit_growth_exponent(n_values: Sequence[float], m_values: Sequence[float]) -> GrowthDiagnostic:
    """Least-squares slope of log m against log n."""
    n_arr = np.asarray(n_values, dtype=np.float64)
    m_arr = np.asarray(m_values, dtype=np.float64)
    keep = (n_arr > 0) & (m_arr > 0)
    n_arr, m_arr = n_arr[keep], m_arr[keep]
    if len(np.unique(n_arr)) < 2:
        return GrowthDiagnostic(None, None, None, status="undefined")
    c_hat = float(np.polyfit(np.log(n_arr), np.log(m_arr), 1)[0])
    lo, hi = OBSERVED_GROWTH_RANGE
    in_range = lo <= c_hat <= hi
    if not in_range:
        log.info(f"[GROWTH] densification exponent {c_hat:.3f} outside observed range [{lo}, {hi}]")
    return GrowthDiagnostic(
        c_hat=c_hat,
        predicted_rank_direction="Down" if c_hat < RANK_SHRINK_GROWTH_LIMIT else None,
        in_observed_range=in_range,
    )


def superlinear_growth_diagnostic(elist: TemporalEdgeList, T: int = 100) -> GrowthDiagnostic:
    """
    Densification |E| ~ |V|^c over the full series; the fractional rank is
    expected to shrink when c < 3/2.
    """
    counts = make_timepoints(len(elist), T)
    return fit_growth_exponent(node_counts(elist, counts), counts)


def spectra_of(snapshots: Sequence[GraphSnapshot], k: int, opts: SpectralOptions) -> list[np.ndarray]:
    return [np.abs(adjacency_top_eigs(g, k, opts).values[:k]) for g in snapshots]


def linear_spectral_evolution(
    spectra: Sequence[Sequence[float]],
    times: Sequence[float] | None = None,
    k: int | None = None,
) -> dict:
    """
    Fit a linear growth rate to each of the top-k |eigenvalues| over time.
    When lambda_1 grows fastest the spectrum concentrates and the
    fractional rank is expected to shrink.
    """
    usable = [np.asarray(s, dtype=np.float64) for s in spectra if s is not None and len(s)]
    if len(usable) < 2:
        raise UndefinedMeasureError("spectral evolution needs at least two timepoints")
    k = min([len(s) for s in usable] + ([k] if k else []))
    M = np.stack([s[:k] for s in usable])
    t = np.arange(1, len(usable) + 1, dtype=np.float64) if times is None else np.asarray(
        [tt for tt, s in zip(times, spectra) if s is not None and len(s)], dtype=np.float64
    )
    rates = np.polyfit(t, M, 1)[0]
    fastest = bool(k == 1 or rates[0] >= rates[1:].max())
    return {
        "k": int(k),
        "rates": [float(r) for r in rates],
        "lambda1_fastest": fastest,
        "predicted_rank_direction": "Down" if fastest else None,
    }


def exponent_comparison(gamma: float | None, alpha: float | None) -> dict:
    """Degree exponent, eigenvalue exponent and gamma / 2 side by side."""
    def clean(x):
        return None if x is None or not math.isfinite(x) else float(x)

    gamma, alpha = clean(gamma), clean(alpha)
    half = None if gamma is None else gamma / 2.0
    return {
        "gamma": gamma,
        "alpha": alpha,
        "gamma_half": half,
        "alpha_minus_gamma_half": None if half is None or alpha is None else alpha - half,
    }
