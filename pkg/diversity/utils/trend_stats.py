# diversity/utils/trend_stats.py
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import norm

log = logging.getLogger(__name__)

Direction = Literal["Up", "Down"]

# Exact permutation distribution for tie-free series up to this length;
# normal approximation with continuity correction from here on.
EXACT_MAX_POINTS = 9
MIN_POINTS = 3


# ============================================================
# ================== Measure catalog (Table) =================
# ============================================================

@dataclass(frozen=True)
class MeasureSpec:
    id: str
    symbol: str
    name: str
    aspect: str
    range: tuple[float, float]
    range_closed: tuple[bool, bool]
    predicted: Direction
    monotone_proof: bool
    unipartite_only: bool = False

    def range_label(self) -> str:
        lo, hi = self.range
        left = "[" if self.range_closed[0] else "("
        right = "]" if self.range_closed[1] else ")"
        fmt = lambda x: "inf" if math.isinf(x) else f"{x:g}"
        return f"{left}{fmt(lo)}, {fmt(hi)}{right}"


INF = math.inf

CATALOG: tuple[MeasureSpec, ...] = (
    MeasureSpec("avg_degree", "d", "Average degree", "reference", (0, INF), (False, False), "Up", True),
    MeasureSpec("gini", "G", "Gini coefficient", "preferential attachment", (0, 1), (True, True), "Up", False),
    MeasureSpec("jain", "J", "Jain's index", "preferential attachment", (0, 1), (False, True), "Down", False),
    MeasureSpec("power_law", "gamma", "Power-law exponent", "preferential attachment", (1, INF), (False, False), "Down", False),
    MeasureSpec("entropy", "H_er", "Relative edge distribution entropy", "preferential attachment", (0, 1), (True, True), "Down", False),
    MeasureSpec("diameter", "delta_0.9", "90-percentile effective diameter", "connectivity", (0, INF), (False, False), "Down", True),
    MeasureSpec("rw_return", "theta_r(n)", "Random walk return probability", "connectivity", (1, INF), (True, False), "Down", False),
    MeasureSpec("controllability", "C_r", "Relative controllability", "connectivity", (0, 1), (False, True), "Down", True),
    MeasureSpec("algebraic_connectivity", "a", "Algebraic connectivity", "connectivity", (0, INF), (True, False), "Up", True),
    MeasureSpec("clustering", "c", "Clustering coefficient", "link prediction", (0, 1), (True, True), "Up", False, True),
    MeasureSpec("fractional_rank", "rank_F", "Fractional rank", "link prediction", (1, INF), (True, False), "Down", False),
    MeasureSpec("eigen_power_law", "alpha", "Eigenvalue power-law exponent", "link prediction", (1, INF), (False, False), "Up", False),
)

MEASURES: dict[str, MeasureSpec] = {spec.id: spec for spec in CATALOG}
MEASURE_IDS: tuple[str, ...] = tuple(MEASURES)


def opposite(direction: Direction) -> Direction:
    return "Down" if direction == "Up" else "Up"


# ============================================================
# ======================= Mann-Kendall =======================
# ============================================================

@dataclass
class MeasureSeries:
    dataset: str
    scenario: str
    measure: str
    points: list[tuple[int, float | None]] = field(default_factory=list)

    def __post_init__(self):
        ts = [t for t, _ in self.points]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("timepoints must be strictly increasing")

    def values(self) -> np.ndarray:
        vals = [v for _, v in self.points if v is not None and math.isfinite(v)]
        return np.asarray(vals, dtype=np.float64)


@dataclass(frozen=True)
class TrendResult:
    S: int
    variance: float
    z: float
    p: float
    p_up: float
    p_down: float
    direction: Direction | None
    significant: bool
    n_points: int
    exact: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def kendall_s(x: np.ndarray) -> int:
    x = np.asarray(x, dtype=np.float64)
    # row by row keeps memory linear in n
    return sum(int(np.sign(x[i + 1:] - x[i]).sum()) for i in range(len(x) - 1))


def tie_corrected_variance(x: np.ndarray) -> float:
    n = len(x)
    _, counts = np.unique(x, return_counts=True)
    ties = counts[counts > 1].astype(np.float64)
    return float((n * (n - 1) * (2 * n + 5) - np.sum(ties * (ties - 1) * (2 * ties + 5))) / 18.0)


def exact_s_distribution(n: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Null distribution of S for n distinct values: S = C(n,2) - 2 * inversions,
    inversion counts from the product of (1 + x + ... + x^(i-1)).
    Returns (support of S ascending, probabilities).
    """
    counts = np.array([1.0])
    for i in range(2, n + 1):
        counts = np.convolve(counts, np.ones(i))
    total = n * (n - 1) // 2
    inversions = np.arange(len(counts))
    s_values = total - 2 * inversions
    probs = counts / counts.sum()
    order = np.argsort(s_values)
    return s_values[order], probs[order]


def mann_kendall(
    series: MeasureSeries | Sequence[float],
    sig_level: float = 0.05,
    predicted: Direction | None = None,
    two_sided: bool = False,
) -> TrendResult | None:
    """
    Mann-Kendall monotone trend test on the non-missing points.

    ``p`` is one-sided toward ``predicted`` (two-sided when requested or no
    direction is predicted). ``direction`` is the observed significant
    direction, which may oppose the prediction. Returns None when fewer
    than three points remain.
    """
    if isinstance(series, MeasureSeries):
        x = series.values()
    else:
        x = np.asarray([v for v in series if v is not None and math.isfinite(v)], dtype=np.float64)
    n = len(x)
    if n < MIN_POINTS:
        return None

    S = kendall_s(x)
    var = tie_corrected_variance(x)
    if S > 0:
        z = (S - 1) / math.sqrt(var)
    elif S < 0:
        z = (S + 1) / math.sqrt(var)
    else:
        z = 0.0

    exact = n <= EXACT_MAX_POINTS and len(np.unique(x)) == n
    if exact:
        support, probs = exact_s_distribution(n)
        p_up = float(probs[support >= S].sum())
        p_down = float(probs[support <= S].sum())
    else:
        p_up = float(norm.sf(z))
        p_down = float(norm.cdf(z))

    if two_sided or predicted is None:
        p = min(1.0, 2.0 * min(p_up, p_down))
        up_hit, down_hit = S > 0 and p < sig_level, S < 0 and p < sig_level
    else:
        p = p_up if predicted == "Up" else p_down
        up_hit, down_hit = S > 0 and p_up < sig_level, S < 0 and p_down < sig_level

    direction: Direction | None = "Up" if up_hit else "Down" if down_hit else None
    return TrendResult(
        S=S, variance=var, z=float(z), p=float(p), p_up=p_up, p_down=p_down,
        direction=direction, significant=direction is not None, n_points=n, exact=exact,
    )


# ============================================================
# ================ Cross-dataset aggregation =================
# ============================================================

def binomial_aggregate(k: int, n: int, sig_level: float = 0.05) -> float:
    """Upper tail P(X >= k) for X ~ Binomial(n, sig_level), summed in log space."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if k == 0:
        return 1.0
    x = np.arange(k, n + 1, dtype=np.float64)
    log_terms = (
        gammaln(n + 1) - gammaln(x + 1) - gammaln(n - x + 1)
        + x * math.log(sig_level) + (n - x) * math.log1p(-sig_level)
    )
    return float(min(1.0, math.exp(logsumexp(log_terms))))


@dataclass(frozen=True)
class TrendRecord:
    dataset: str
    scenario: str
    measure: str
    result: TrendResult | None
    bipartite: bool = False


@dataclass(frozen=True)
class AggregateResult:
    measure: str
    scenario: str
    n: int
    k: int
    p_binomial: float
    verdict: str
    predicted: Direction
    k_opposite: int = 0
    p_opposite: float = 1.0

    def cell(self) -> str:
        """Table cell: verdict followed by the number of networks in parentheses."""
        if self.verdict == "NoTrend":
            return f"({self.k})"
        count = self.k if self.verdict == self.predicted else self.k_opposite
        return f"{self.verdict} ({count})"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["cell"] = self.cell()
        return out


def verdict_table(
    records: Iterable[TrendRecord],
    sig_level: float = 0.05,
    catalog: dict[str, MeasureSpec] = MEASURES,
) -> list[AggregateResult]:
    """
    Per (measure, scenario): k datasets significant in the predicted
    direction out of n tested; the verdict is the predicted direction when
    the binomial tail of k is below ``sig_level``, the opposite direction
    when the tail of the opposite count is, and NoTrend otherwise.
    Bipartite datasets never count toward unipartite-only measures.
    """
    groups: dict[tuple[str, str], list[TrendRecord]] = {}
    for rec in records:
        groups.setdefault((rec.measure, rec.scenario), []).append(rec)

    rows: list[AggregateResult] = []
    order = {mid: i for i, mid in enumerate(catalog)}
    for (measure, scenario) in sorted(groups, key=lambda key: (order.get(key[0], len(order)), key[1])):
        spec = catalog[measure]
        tested = [
            r for r in groups[(measure, scenario)]
            if r.result is not None and not (spec.unipartite_only and r.bipartite)
        ]
        n = len(tested)
        k = sum(1 for r in tested if r.result.direction == spec.predicted)
        k_opp = sum(1 for r in tested if r.result.direction == opposite(spec.predicted))
        p = binomial_aggregate(k, n, sig_level)
        p_opp = binomial_aggregate(k_opp, n, sig_level)
        if n and p < sig_level:
            verdict = spec.predicted
        elif n and p_opp < sig_level:
            verdict = opposite(spec.predicted)
        else:
            verdict = "NoTrend"
        rows.append(AggregateResult(
            measure=measure, scenario=scenario, n=n, k=k, p_binomial=p, verdict=verdict,
            predicted=spec.predicted, k_opposite=k_opp, p_opposite=p_opp,
        ))
    return rows
