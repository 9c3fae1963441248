# diversity/utils/spectral.py
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from diversity.exceptions import ConvergenceError, DomainError, EmptyInputError
from diversity.utils.graph_core import GraphSnapshot, connected_components

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralOptions:
    rel_tolerance: float = 1e-9
    max_iterations: int = 10000
    r: int = 50
    seed: int = 0
    dense_fallback_threshold: int = 512

    def __post_init__(self):
        if not 0 < self.rel_tolerance < 1:
            raise ValueError("rel_tolerance must lie in (0, 1)")
        if self.r < 1:
            raise ValueError("r must be at least 1")


@dataclass(frozen=True)
class EigenResult:
    """Eigenpairs sorted by descending absolute value."""
    values: np.ndarray
    vectors: np.ndarray | None
    residuals: np.ndarray


def _start_vector(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.random(n) + 0.5


def _use_dense(n: int, k: int, opts: SpectralOptions) -> bool:
    # ARPACK needs k < n
    return n <= opts.dense_fallback_threshold or k >= n - 1


def _residuals(M, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    if len(values) == 0:
        return np.zeros(0)
    scale = max(float(np.max(np.abs(values))), 1e-300)
    R = M @ vectors - vectors * values
    return np.linalg.norm(R, axis=0) / scale


def _order_by_magnitude(values: np.ndarray, vectors: np.ndarray | None):
    # stable: equal magnitudes keep ascending algebraic order (negative first)
    order = np.argsort(-np.abs(values), kind="stable")
    return values[order], (vectors[:, order] if vectors is not None else None)


def _with_ties(values: np.ndarray, r: int, tol: float) -> int:
    """Count of leading values to keep: r, extended over ties at position r."""
    if len(values) <= r:
        return len(values)
    cutoff = abs(values[r - 1])
    slack = tol * max(1.0, abs(values[0]))
    keep = r
    while keep < len(values) and abs(values[keep]) >= cutoff - slack:
        keep += 1
    return keep


# ============================================================
# =============== Generic symmetric eigensolves ==============
# ============================================================

def top_abs_eigs(M, r: int, opts: SpectralOptions, with_vectors: bool = False) -> EigenResult:
    """
    The ``r`` eigenvalues of the symmetric matrix ``M`` of largest absolute
    value (more when the r-th value is tied).
    """
    n = M.shape[0]
    if n == 0:
        raise EmptyInputError("eigenvalues of an empty matrix")
    r = min(r, n)
    if _use_dense(n, r + 5, opts):
        dense = M.toarray() if sp.issparse(M) else np.asarray(M)
        values, vectors = np.linalg.eigh(dense)
    else:
        k = min(n - 2, r + 5)
        try:
            values, vectors = eigsh(
                M, k=k, which="LM",
                v0=_start_vector(n, opts.seed),
                tol=opts.rel_tolerance, maxiter=opts.max_iterations,
            )
        except ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"Lanczos did not converge for {k} eigenvalues of a {n}x{n} matrix",
                best_value=exc.eigenvalues, best_vector=exc.eigenvectors,
            ) from exc
    values, vectors = _order_by_magnitude(values, vectors)
    keep = _with_ties(values, r, opts.rel_tolerance * 10)
    values, vectors = values[:keep], vectors[:, :keep]
    residuals = _residuals(M, values, vectors)
    return EigenResult(values=values, vectors=vectors if with_vectors else None, residuals=residuals)


def normalized_adjacency(g: GraphSnapshot) -> sp.csr_matrix:
    """Z = D^{-1/2} A D^{-1/2}."""
    if np.any(g.degrees == 0):
        raise DomainError("normalized adjacency needs every vertex to have degree >= 1")
    inv_sqrt = sp.diags(1.0 / np.sqrt(g.degrees.astype(np.float64)))
    return (inv_sqrt @ g.adjacency @ inv_sqrt).tocsr()


def laplacian(g: GraphSnapshot) -> sp.csr_matrix:
    return (sp.diags(g.degrees.astype(np.float64)) - g.adjacency).tocsr()


# ============================================================
# ===================== Graph spectra ========================
# ============================================================

def spectral_norm(g: GraphSnapshot, opts: SpectralOptions) -> tuple[float, np.ndarray]:
    """
    Dominant eigenpair (lambda_1, u_1) of the adjacency matrix. The vector
    is oriented to be nonnegative on the dominant component.
    """
    if g.m == 0:
        raise EmptyInputError("spectral norm of a graph without edges")
    A = g.adjacency
    if _use_dense(g.n, 1, opts):
        values, vectors = np.linalg.eigh(A.toarray())
        lam, vec = float(values[-1]), vectors[:, -1]
    else:
        try:
            values, vectors = eigsh(
                A, k=1, which="LA",
                v0=_start_vector(g.n, opts.seed),
                tol=opts.rel_tolerance, maxiter=opts.max_iterations,
            )
        except ArpackNoConvergence as exc:
            raise ConvergenceError(
                "dominant eigenpair did not converge",
                best_value=exc.eigenvalues, best_vector=exc.eigenvectors,
            ) from exc
        lam, vec = float(values[0]), vectors[:, 0]
    # a degenerate lambda_1 can mix components; keep the one holding the largest entry
    _, labels = connected_components(g)
    vec = np.where(labels == labels[int(np.argmax(np.abs(vec)))], np.abs(vec), 0.0)
    vec = vec / np.linalg.norm(vec)
    vec = np.where(np.abs(vec) < 1e-14, 0.0, vec)
    return lam, vec


def normalized_adjacency_top_eigs(g: GraphSnapshot, r: int, opts: SpectralOptions) -> EigenResult:
    """
    Largest-|mu| eigenvalues of D^{-1/2} A D^{-1/2}; equivalently the
    normalized-Laplacian eigenvalues farthest from 1 (L_norm = I - Z).
    """
    return top_abs_eigs(normalized_adjacency(g), r, opts)


def adjacency_top_eigs(g: GraphSnapshot, r: int, opts: SpectralOptions) -> EigenResult:
    if g.m == 0:
        raise EmptyInputError("adjacency spectrum of a graph without edges")
    return top_abs_eigs(g.adjacency, r, opts)


def algebraic_connectivity(g: GraphSnapshot, opts: SpectralOptions) -> float:
    """
    Second smallest eigenvalue of L = D - A for a connected graph.

    The iterative path finds the top eigenvalue of (cI - L) restricted to the
    complement of the all-ones vector, c = 2 * max degree + 1.
    """
    n = g.n
    if n < 2:
        raise EmptyInputError("algebraic connectivity needs at least two vertices")
    L = laplacian(g)
    c = 2.0 * float(g.degrees.max()) + 1.0
    if _use_dense(n, 2, opts):
        lam2 = float(np.linalg.eigvalsh(L.toarray())[1])
    else:
        def project(x):
            return x - x.mean()

        def matvec(x):
            x = project(np.asarray(x).ravel())
            return project(c * x - L @ x)

        op = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
        try:
            mu = eigsh(
                op, k=1, which="LA",
                v0=project(_start_vector(n, opts.seed)),
                tol=opts.rel_tolerance, maxiter=opts.max_iterations,
                return_eigenvectors=False,
            )
        except ArpackNoConvergence as exc:
            raise ConvergenceError(
                "Laplacian eigenvalue did not converge",
                best_value=(c - exc.eigenvalues[0]) if len(exc.eigenvalues) else None,
            ) from exc
        lam2 = c - float(mu[0])
    if lam2 < opts.rel_tolerance * c:
        if lam2 < -1e-6 * c:
            log.error(f"[SPECTRAL] negative Laplacian eigenvalue {lam2:.3e}")
        log.warning(f"[SPECTRAL] lambda_2={lam2:.3e} below tolerance; graph looks disconnected, reporting 0")
        return 0.0
    return lam2
