# diversity/utils/measures.py
"""
Evaluation of the diversity measures on one snapshot.

Every measure comes back as a MeasureValue; failures that only leave a hole
in a series (undefined, skipped, non-converged) are recorded, not raised.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Literal

import numpy as np

from diversity.exceptions import (
    ConfigurationError,
    ConvergenceError,
    DiversityError,
    EmptyInputError,
    SkippedMeasureError,
    UndefinedMeasureError,
)
from diversity.utils.graph_core import GraphSnapshot, average_degree, largest_connected_component, non_isolated
from diversity.utils.measures_connectivity import (
    DiameterOptions,
    effective_diameter,
    relative_controllability,
    rw_return_terms,
)
from diversity.utils.measures_degree import (
    degree_stats,
    gini_coefficient,
    jain_index,
    power_law_exponent,
    relative_entropy,
)
from diversity.utils.measures_linkpred import (
    clustering_coefficient,
    fractional_rank,
    power_law_from_eigenvalues,
)
from diversity.utils.spectral import SpectralOptions, adjacency_top_eigs, algebraic_connectivity, spectral_norm
from diversity.utils.trend_stats import MEASURE_IDS

log = logging.getLogger(__name__)

Status = Literal["ok", "missing", "undefined", "infinite", "skipped", "error"]
ThetaScope = Literal["lcc", "nonisolated"]


@dataclass(frozen=True)
class MeasureValue:
    measure: str
    value: float | None
    status: Status
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MeasureOptions:
    spectral: SpectralOptions = field(default_factory=SpectralOptions)
    diameter: DiameterOptions = field(default_factory=DiameterOptions)
    rw_steps: int = 4
    theta_scope: ThetaScope = "lcc"
    # eigenvalues kept per snapshot for the spectral evolution fit
    evolution_k: int = 5


class _SnapshotContext:
    """Shared intermediate results for one snapshot, computed on first use."""

    def __init__(self, g: GraphSnapshot, options: MeasureOptions):
        self.g = g
        self.options = options

    @cached_property
    def lcc(self) -> GraphSnapshot:
        sub, _ = largest_connected_component(self.g)
        if sub.n < self.g.n:
            log.debug(f"[MEASURES] LCC keeps {sub.n} of {self.g.n} vertices")
        return sub

    @cached_property
    def degrees(self):
        return degree_stats(self.g)

    @cached_property
    def lambda1(self) -> float:
        lam, _ = spectral_norm(self.g, self.options.spectral)
        return lam

    @cached_property
    def top_eigs(self) -> np.ndarray:
        eig = adjacency_top_eigs(self.g, self.options.spectral.r, self.options.spectral)
        return np.abs(eig.values)

    def theta_graph(self) -> GraphSnapshot:
        if self.options.theta_scope == "nonisolated":
            sub, _ = non_isolated(self.g)
            return sub
        return self.lcc


# ============================================================
# ====================== Measure table =======================
# ============================================================

def _avg_degree(ctx: _SnapshotContext):
    return average_degree(ctx.g), {}


def _gini(ctx: _SnapshotContext):
    return gini_coefficient(ctx.degrees), {}


def _jain(ctx: _SnapshotContext):
    return jain_index(ctx.degrees), {}


def _power_law(ctx: _SnapshotContext):
    return power_law_exponent(ctx.degrees), {"d_min": ctx.degrees.d_min}


def _entropy(ctx: _SnapshotContext):
    return relative_entropy(ctx.degrees), {}


def _diameter(ctx: _SnapshotContext):
    opts = ctx.options.diameter
    g = ctx.lcc
    return effective_diameter(g, opts), {
        "lcc_n": g.n,
        "sample_size": min(opts.sample_size, g.n),
        "seed": opts.seed,
    }


def _rw_return(ctx: _SnapshotContext):
    g = ctx.theta_graph()
    r = ctx.options.spectral.r
    value, summed = rw_return_terms(g, ctx.options.rw_steps, r, ctx.options.spectral)
    return value, {"r": summed, "n_steps": ctx.options.rw_steps, "scope": ctx.options.theta_scope}


def _controllability(ctx: _SnapshotContext):
    res = relative_controllability(ctx.g)
    return res.relative, {"drivers": res.driver_count, "matching": res.matching_size}


def _algebraic_connectivity(ctx: _SnapshotContext):
    g = ctx.lcc
    return algebraic_connectivity(g, ctx.options.spectral), {"lcc_n": g.n}


def _clustering(ctx: _SnapshotContext):
    return clustering_coefficient(ctx.g), {}


def _fractional_rank(ctx: _SnapshotContext):
    lam = ctx.lambda1
    return fractional_rank(ctx.g, lambda1=lam), {"lambda1": lam}


def _eigen_power_law(ctx: _SnapshotContext):
    top = ctx.top_eigs
    k = ctx.options.evolution_k
    return power_law_from_eigenvalues(top), {
        "r": len(top),
        "top_eigs": [float(x) for x in top[:k]],
    }


MEASURE_FUNCTIONS: dict[str, Callable[[_SnapshotContext], tuple[float, dict]]] = {
    "avg_degree": _avg_degree,
    "gini": _gini,
    "jain": _jain,
    "power_law": _power_law,
    "entropy": _entropy,
    "diameter": _diameter,
    "rw_return": _rw_return,
    "controllability": _controllability,
    "algebraic_connectivity": _algebraic_connectivity,
    "clustering": _clustering,
    "fractional_rank": _fractional_rank,
    "eigen_power_law": _eigen_power_law,
}
assert tuple(MEASURE_FUNCTIONS) == MEASURE_IDS


def parse_measure_list(raw: str | Iterable[str] | None) -> tuple[str, ...]:
    """Comma list (or iterable) of measure ids in catalog order; None means all."""
    if raw is None:
        return MEASURE_IDS
    items = [s.strip() for s in (raw.split(",") if isinstance(raw, str) else raw)]
    items = [s for s in items if s]
    unknown = sorted(set(items) - set(MEASURE_IDS))
    if unknown:
        raise ConfigurationError(f"unknown measures: {', '.join(unknown)}")
    return tuple(mid for mid in MEASURE_IDS if mid in items)


def evaluate_measure(ctx: _SnapshotContext, measure: str) -> MeasureValue:
    func = MEASURE_FUNCTIONS[measure]
    try:
        value, detail = func(ctx)
    except SkippedMeasureError as exc:
        return MeasureValue(measure, None, "skipped", {"reason": str(exc)})
    except UndefinedMeasureError as exc:
        return MeasureValue(measure, None, "undefined", {"reason": str(exc)})
    except EmptyInputError as exc:
        return MeasureValue(measure, None, "missing", {"reason": str(exc)})
    except ConvergenceError as exc:
        log.warning(f"[MEASURES] {measure} did not converge: {exc}")
        return MeasureValue(measure, None, "error", {"reason": str(exc)})
    except DiversityError as exc:
        log.warning(f"[MEASURES] {measure} failed on {ctx.g!r}: {exc}")
        return MeasureValue(measure, None, "error", {"reason": str(exc)})
    if math.isinf(value):
        return MeasureValue(measure, math.inf, "infinite", detail)
    return MeasureValue(measure, float(value), "ok", detail)


def evaluate_snapshot(
    g: GraphSnapshot,
    scenario: str,
    measures: Iterable[str],
    options: MeasureOptions,
) -> list[MeasureValue]:
    """
    Compute each requested measure on ``g``.

    Diameter, algebraic connectivity and (by default) the return
    probability use the largest connected component; in the connected
    scenario that is the whole snapshot. Everything else uses the whole
    snapshot. Clustering is skipped on bipartite snapshots.
    """
    ctx = _SnapshotContext(g, options)
    values = [evaluate_measure(ctx, mid) for mid in measures]
    if scenario == "connected" and g.m and not g.is_connected:
        log.warning(f"[MEASURES] connected-scenario snapshot is disconnected: {g!r}")
    return values
