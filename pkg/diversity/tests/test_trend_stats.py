import itertools
import math
import tracemalloc
from fractions import Fraction

import numpy as np
import pytest

from diversity.utils.trend_stats import (
    CATALOG,
    MEASURES,
    MeasureSeries,
    TrendRecord,
    TrendResult,
    binomial_aggregate,
    exact_s_distribution,
    kendall_s,
    mann_kendall,
    tie_corrected_variance,
    verdict_table,
)


def enumerated_s(n: int) -> np.ndarray:
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int8)
    S = np.zeros(len(perms), dtype=np.int64)
    for i, j in itertools.combinations(range(n), 2):
        S += np.sign(perms[:, j] - perms[:, i])
    return S


def exact_tail(S: int, n: int, upper: bool) -> float:
    support, probs = exact_s_distribution(n)
    return float(probs[support >= S].sum() if upper else probs[support <= S].sum())


def binomial_oracle(k: int, n: int, alpha: Fraction = Fraction(1, 20)) -> float:
    return float(sum(math.comb(n, x) * alpha ** x * (1 - alpha) ** (n - x) for x in range(k, n + 1)))


# --------------------------------------------------------------- catalog

def test_catalog_has_twelve_measures_with_predicted_directions():
    assert len(CATALOG) == 12
    expected = {
        "avg_degree": "Up", "gini": "Up", "jain": "Down", "power_law": "Down", "entropy": "Down",
        "diameter": "Down", "rw_return": "Down", "controllability": "Down",
        "algebraic_connectivity": "Up", "clustering": "Up", "fractional_rank": "Down", "eigen_power_law": "Up",
    }
    assert {spec.id: spec.predicted for spec in CATALOG} == expected
    assert MEASURES["clustering"].unipartite_only
    assert MEASURES["jain"].range_label() == "(0, 1]"


# ----------------------------------------------------------- Mann-Kendall

def test_increasing_ten_points():
    res = mann_kendall(list(range(1, 11)), predicted="Up")
    assert res.S == 45
    assert res.variance == pytest.approx(125.0)
    assert res.z == pytest.approx(3.9355, abs=1e-4)
    assert res.p == pytest.approx(4.2e-5, abs=1e-5)
    assert res.direction == "Up" and res.significant


def test_decreasing_series_mirrors_increasing():
    up = mann_kendall(list(range(1, 11)), predicted="Up")
    down = mann_kendall(list(range(10, 0, -1)), predicted="Down")
    assert down.S == -45
    assert down.p == pytest.approx(up.p)
    assert down.direction == "Down"


def test_constant_series():
    res = mann_kendall([3.0] * 8, predicted="Up")
    assert res.S == 0
    assert res.p == pytest.approx(0.5)
    assert res.direction is None and not res.significant


def test_opposite_direction_is_reported():
    res = mann_kendall(list(range(20, 0, -1)), predicted="Up")
    assert res.p > 0.5
    assert res.direction == "Down"


def test_too_few_points():
    assert mann_kendall([1.0, None, 2.0]) is None
    series = MeasureSeries("d", "full", "gini", [(1, 1.0), (2, None), (3, math.inf), (4, 2.0)])
    assert mann_kendall(series) is None


def test_missing_points_are_skipped():
    series = MeasureSeries("d", "full", "gini", [(t, None if t % 3 == 0 else float(t)) for t in range(1, 13)])
    res = mann_kendall(series, predicted="Up")
    assert res.n_points == 8
    assert res.S == 28


def test_series_timepoints_must_increase():
    with pytest.raises(ValueError):
        MeasureSeries("d", "full", "gini", [(2, 1.0), (1, 2.0)])


def test_tie_correction():
    x = np.array([1, 2, 2, 3, 3, 3], dtype=float)
    assert tie_corrected_variance(x) == pytest.approx((6 * 5 * 17 - 2 * 1 * 9 - 3 * 2 * 11) / 18)
    assert tie_corrected_variance(np.arange(7.0)) == pytest.approx(7 * 6 * 19 / 18)


@pytest.mark.parametrize("n", range(3, 9))
def test_exact_distribution_matches_enumeration(n):
    S = enumerated_s(n)
    support, probs = exact_s_distribution(n)
    values, counts = np.unique(S, return_counts=True)
    assert support[probs > 0].tolist() == values.tolist()
    assert probs[probs > 0] == pytest.approx(counts / counts.sum())


def test_p_values_match_exact_distribution_for_short_series():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(3, 11))
        x = rng.permutation(n).astype(float) + rng.random()
        S = kendall_s(x)
        up = mann_kendall(x, predicted="Up")
        down = mann_kendall(x, predicted="Down")
        assert up.p == pytest.approx(exact_tail(S, n, upper=True), abs=0.01)
        assert down.p == pytest.approx(exact_tail(S, n, upper=False), abs=0.01)


@pytest.mark.parametrize("n", [5, 6, 12, 40])
def test_strictly_monotone_series_is_significant(n):
    assert mann_kendall(np.linspace(0, 1, n), predicted="Up").significant
    assert mann_kendall(np.linspace(1, 0, n), predicted="Down").significant


def test_kendall_s_matches_pairwise_count():
    rng = np.random.default_rng(3)
    x = rng.integers(0, 6, size=40).astype(float)
    expected = sum(int(np.sign(x[j] - x[i])) for i, j in itertools.combinations(range(40), 2))
    assert kendall_s(x) == expected


def test_long_series_stays_within_linear_memory():
    x = np.arange(10_000, dtype=float)
    tracemalloc.start()
    try:
        res = mann_kendall(x, predicted="Up")
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    assert res.S == 10_000 * 9_999 // 2
    assert res.direction == "Up"
    assert peak < 16 * 2 ** 20


def test_two_sided_doubles_the_tail():
    x = [1, 3, 2, 5, 4, 6, 8, 7, 9, 11, 10, 12]
    one = mann_kendall(x, predicted="Up")
    two = mann_kendall(x, predicted="Up", two_sided=True)
    assert two.p == pytest.approx(min(1.0, 2 * one.p))


# ------------------------------------------------------------ aggregation

def test_binomial_aggregate_edges():
    assert binomial_aggregate(0, 27) == 1.0
    assert binomial_aggregate(27, 27) == pytest.approx(0.05 ** 27, rel=1e-9)
    with pytest.raises(ValueError):
        binomial_aggregate(5, 4)


def test_binomial_aggregate_matches_rational_arithmetic():
    for n in range(1, 51):
        for k in range(0, n + 1):
            assert binomial_aggregate(k, n) == pytest.approx(binomial_oracle(k, n), rel=1e-9, abs=1e-12)


def test_binomial_aggregate_is_non_increasing_in_k():
    values = [binomial_aggregate(k, 27) for k in range(28)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def trend(direction):
    S = {"Up": 30, "Down": -30, None: 1}[direction]
    return TrendResult(
        S=S, variance=100.0, z=S / 10, p=0.01, p_up=0.01, p_down=0.99,
        direction=direction, significant=direction is not None, n_points=100,
    )


@pytest.fixture
def table_fixture():
    """27 datasets, 14 of them bipartite."""
    records = []
    for i in range(27):
        bip = i < 14
        name = f"net{i:02d}"
        records.append(TrendRecord(name, "full", "gini", trend("Up"), bip))
        records.append(TrendRecord(name, "full", "jain", trend("Up" if i < 20 else None), bip))
        records.append(TrendRecord(name, "full", "diameter", trend("Down" if i < 2 else None), bip))
        records.append(TrendRecord(name, "full", "clustering", None if bip else trend("Up" if i < 20 else None), bip))
        records.append(TrendRecord(name, "full", "power_law", None if i == 0 else trend("Down"), bip))
    return {(row.measure, row.scenario): row for row in verdict_table(records)}


def test_verdict_predicted_direction(table_fixture):
    row = table_fixture[("gini", "full")]
    assert (row.n, row.k, row.verdict) == (27, 27, "Up")
    assert row.p_binomial == pytest.approx(0.05 ** 27, rel=1e-9)
    assert row.cell() == "Up (27)"


def test_verdict_opposite_direction(table_fixture):
    row = table_fixture[("jain", "full")]
    assert row.k == 0 and row.k_opposite == 20
    assert row.verdict == "Up"
    assert row.cell() == "Up (20)"


def test_verdict_no_trend_reports_count(table_fixture):
    row = table_fixture[("diameter", "full")]
    assert row.k == 2
    assert row.p_binomial >= 0.05
    assert row.verdict == "NoTrend"
    assert row.cell() == "(2)"


def test_clustering_excludes_bipartite(table_fixture):
    row = table_fixture[("clustering", "full")]
    assert row.n == 13
    assert row.k == 6
    assert row.verdict == "Up"


def test_insufficient_series_are_not_counted(table_fixture):
    assert table_fixture[("power_law", "full")].n == 26


def test_table_rows_follow_catalog_order(table_fixture):
    order = [m for m, _ in table_fixture]
    assert order == ["gini", "jain", "power_law", "diameter", "clustering"]
