# diversity/utils/measures_degree.py
"""
Degree-distribution measures: the preferential attachment side of
structural diversity.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from diversity.exceptions import EmptyInputError, UndefinedMeasureError
from diversity.utils.graph_core import GraphSnapshot

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DegreeStats:
    sorted_degrees: np.ndarray
    n: int
    sum: int
    sum_sq: int
    d_min: int

    @classmethod
    def from_degrees(cls, degrees) -> "DegreeStats":
        d = np.sort(np.asarray(degrees, dtype=np.int64))
        if len(d) == 0:
            raise EmptyInputError("degree statistics of an empty degree sequence")
        if d[0] < 1:
            raise ValueError("degree statistics take positive degrees only")
        d.flags.writeable = False
        return cls(
            sorted_degrees=d,
            n=len(d),
            sum=int(d.sum()),
            sum_sq=int(np.dot(d, d)),
            d_min=int(d[0]),
        )


def degree_stats(g: GraphSnapshot) -> DegreeStats:
    """Degree statistics over non-isolated vertices."""
    isolated = int(np.count_nonzero(g.degrees == 0))
    if isolated:
        log.info(f"[DEGREE] excluded isolated vertices={isolated} of n={g.n}")
    return DegreeStats.from_degrees(g.degree_sequence().values)


def gini_coefficient(ds: DegreeStats) -> float:
    """
    Sample Gini of the degree distribution,
    G = sum_i (2i - n - 1) x_i / (n sum x), x ascending.
    """
    if ds.n < 2:
        raise UndefinedMeasureError("Gini coefficient needs at least two vertices")
    i = np.arange(1, ds.n + 1, dtype=np.float64)
    x = ds.sorted_degrees.astype(np.float64)
    return float(np.dot(2.0 * i - ds.n - 1.0, x) / (ds.n * ds.sum))


def jain_index(ds: DegreeStats) -> float:
    """J = (sum d)^2 / (n sum d^2)."""
    return float(ds.sum) ** 2 / (ds.n * float(ds.sum_sq))


def jain_star_minimum(n: int) -> float:
    """Smallest Jain's index a simple connected graph on n vertices reaches (the star)."""
    return 4.0 * (n - 1) / (n * n)


def power_law_exponent(ds: DegreeStats) -> float:
    """
    gamma = 1 + n / sum ln(d / d_min), with d_min the observed minimum.
    Returns math.inf when every degree equals d_min.
    """
    if ds.n < 2:
        raise UndefinedMeasureError("power-law exponent needs at least two vertices")
    s = float(np.sum(np.log(ds.sorted_degrees / ds.d_min)))
    if s <= 0.0:
        return math.inf
    return 1.0 + ds.n / s


def relative_entropy(ds: DegreeStats) -> float:
    """Entropy of the half-edge distribution over vertices, divided by ln n."""
    if ds.n < 2:
        raise UndefinedMeasureError("relative edge distribution entropy needs at least two vertices")
    p = ds.sorted_degrees / float(ds.sum)
    return float(-np.sum(p * np.log(p)) / math.log(ds.n))
