# diversity/utils/pipeline.py
"""
Run orchestration behind the management commands: analyze datasets into a
report bundle, write generated networks, and verify an existing bundle.
"""
from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable

import django
import numpy as np
import pandas as pd
import scipy
from django.conf import settings

from diversity.exceptions import ConfigurationError, DiversityError, VerificationError
from diversity.utils.graph_core import TemporalEdgeList
from diversity.utils.growth_models import (
    GeneratedNetwork,
    GrowthConfig,
    exponent_comparison,
    generate,
    linear_spectral_evolution,
    superlinear_growth_diagnostic,
)
from diversity.utils.ingest import (
    DatasetDescriptor,
    ScenarioConfig,
    load_dataset,
    read_manifest,
    series_points,
    series_snapshot,
    write_edge_file,
)
from diversity.utils.measures import MeasureOptions, MeasureValue, evaluate_snapshot, parse_measure_list
from diversity.utils.measures_connectivity import DiameterOptions
from diversity.utils.spectral import SpectralOptions
from diversity.utils.trend_stats import MEASURES, MeasureSeries, TrendRecord, TrendResult, mann_kendall, verdict_table

log = logging.getLogger(__name__)

SERIES_COLUMNS = ["dataset", "scenario", "measure", "timepoint", "node_count", "edge_count", "value", "status"]
TREND_COLUMNS = [
    "dataset", "scenario", "measure", "S", "variance", "z", "p", "direction", "significant",
    "p_up", "p_down", "n_points", "exact", "status",
]
SERIES_STATUSES = {"ok", "missing", "undefined", "infinite", "skipped", "error"}
SCENARIOS = ("full", "connected")


def _round_value(v: float) -> float:
    # 12 significant digits keep reruns byte-identical across BLAS orderings
    return float(f"{v:.12g}")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")


def _atomic_write(target: Path, write) -> None:
    """Write through a temp file in the target directory, then rename."""
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            write(fh)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ============================================================
# ======================= Run config =========================
# ============================================================

@dataclass(frozen=True)
class RunConfig:
    manifest: str | None = None
    datasets: tuple[str, ...] = ()
    scenarios: tuple[str, ...] = SCENARIOS
    timepoints: int = 100
    t1: int = 75
    sig_level: float = 0.05
    measures: tuple[str, ...] = tuple(MEASURES)
    rank_r: int = 50
    rw_steps: int = 4
    diameter_samples: int = 500
    diameter_percentile: float = 0.9
    seed: int = 0
    rel_tolerance: float = 1e-9
    max_iterations: int = 10000
    dense_fallback_threshold: int = 512
    out: str = "reports"
    jobs: int = 1
    assume_order: bool = False
    two_sided: bool = False
    exclude_anchor: bool = False
    theta_scope: str = "lcc"

    @classmethod
    def from_options(cls, options: dict) -> "RunConfig":
        """Command options over settings.DIVERSITY over built-in defaults."""
        conf = getattr(settings, "DIVERSITY", {})

        def pick(key: str, setting: str, default):
            value = options.get(key)
            if value is None:
                return conf.get(setting, default)
            return value

        scenario = options.get("scenario") or "both"
        return cls(
            manifest=options.get("manifest"),
            datasets=tuple(options.get("dataset") or ()),
            scenarios=SCENARIOS if scenario == "both" else (scenario,),
            timepoints=pick("timepoints", "TIMEPOINTS", 100),
            t1=pick("t1", "T1", 75),
            sig_level=pick("sig_level", "SIG_LEVEL", 0.05),
            measures=parse_measure_list(options.get("measures")),
            rank_r=pick("rank_r", "RANK_R", 50),
            rw_steps=pick("rw_steps", "RW_STEPS", 4),
            diameter_samples=pick("diameter_samples", "DIAMETER_SAMPLES", 500),
            diameter_percentile=conf.get("DIAMETER_PERCENTILE", 0.9),
            seed=pick("seed", "SEED", 0),
            rel_tolerance=conf.get("REL_TOLERANCE", 1e-9),
            max_iterations=conf.get("MAX_ITERATIONS", 10000),
            dense_fallback_threshold=conf.get("DENSE_FALLBACK_THRESHOLD", 512),
            out=str(pick("out", "OUTPUT_DIR", "reports")),
            jobs=pick("jobs", "JOBS", 1),
            assume_order=bool(options.get("assume_order")),
            two_sided=bool(options.get("two_sided")),
            exclude_anchor=bool(options.get("exclude_anchor")),
            theta_scope=options.get("theta_scope") or "lcc",
        )

    def validate(self) -> "RunConfig":
        if not self.manifest and not self.datasets:
            raise ConfigurationError("give a --manifest or at least one --dataset")
        if not self.measures:
            raise ConfigurationError("the measure set is empty")
        if not self.scenarios or any(s not in SCENARIOS for s in self.scenarios):
            raise ConfigurationError(f"scenarios must be drawn from {SCENARIOS}")
        if not 0 < self.sig_level < 1:
            raise ConfigurationError(f"sig_level={self.sig_level} must lie in (0, 1)")
        if self.rank_r < 1:
            raise ConfigurationError("rank_r must be at least 1")
        if self.rw_steps < 2 or self.rw_steps % 2:
            raise ConfigurationError(f"rw_steps={self.rw_steps} must be even and at least 2")
        if self.diameter_samples < 1:
            raise ConfigurationError("diameter_samples must be at least 1")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be at least 1")
        if self.theta_scope not in ("lcc", "nonisolated"):
            raise ConfigurationError(f"unknown theta scope {self.theta_scope!r}")
        for scenario in self.scenarios:
            self.scenario_config(scenario).validate()
        return self

    def scenario_config(self, scenario: str) -> ScenarioConfig:
        return ScenarioConfig(
            scenario=scenario,
            timepoints=self.timepoints,
            t1=self.t1,
            include_anchor=not self.exclude_anchor,
        )

    def measure_options(self) -> MeasureOptions:
        return MeasureOptions(
            spectral=SpectralOptions(
                rel_tolerance=self.rel_tolerance,
                max_iterations=self.max_iterations,
                r=self.rank_r,
                seed=self.seed,
                dense_fallback_threshold=self.dense_fallback_threshold,
            ),
            diameter=DiameterOptions(
                percentile=self.diameter_percentile,
                sample_size=self.diameter_samples,
                seed=self.seed,
            ),
            rw_steps=self.rw_steps,
            theta_scope=self.theta_scope,
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["versions"] = {
            "django": django.get_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
        }
        return out


def resolve_datasets(config: RunConfig) -> list[DatasetDescriptor]:
    """Manifest entries first, then ``PATH[:bipartite]`` datasets."""
    datasets = read_manifest(config.manifest) if config.manifest else []
    for raw in config.datasets:
        path, kind = raw, "unipartite"
        head, sep, tail = raw.rpartition(":")
        if sep and tail in ("bipartite", "unipartite"):
            path, kind = head, tail
        p = Path(path)
        datasets.append(DatasetDescriptor(name=p.stem, path=p, bipartite=kind == "bipartite"))
    names = [d.name for d in datasets]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigurationError(f"duplicate dataset names: {', '.join(dupes)}")
    return datasets


# ============================================================
# ===================== Snapshot workers =====================
# ============================================================

_WORKER: dict = {}


def _init_worker(elist: TemporalEdgeList, anchor_ids, scenario: str, measures, options: MeasureOptions) -> None:
    _WORKER.update(elist=elist, anchor_ids=anchor_ids, scenario=scenario, measures=measures, options=options)


def _evaluate_point(task: tuple[int, int]) -> tuple[int, int, int, list[MeasureValue]]:
    timepoint, edge_count = task
    g = series_snapshot(_WORKER["elist"], edge_count, _WORKER["anchor_ids"])
    values = evaluate_snapshot(g, _WORKER["scenario"], _WORKER["measures"], _WORKER["options"])
    return timepoint, g.n, g.m, values


def _run_points(tasks: list[tuple[int, int]], init_args: tuple, jobs: int):
    if jobs <= 1:
        _init_worker(*init_args)
        try:
            return [_evaluate_point(t) for t in tasks]
        finally:
            _WORKER.clear()
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=init_args) as pool:
        results = list(pool.map(_evaluate_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return sorted(results, key=lambda r: r[0])


# ============================================================
# ========================= Analyze ==========================
# ============================================================

@dataclass
class ReportBundle:
    out_dir: Path
    series_path: Path
    trends_path: Path
    summary_path: Path
    run_config_path: Path
    plot_dir: Path
    failures_path: Path
    failures: list[dict] = field(default_factory=list)
    aggregates: list = field(default_factory=list)

    @classmethod
    def at(cls, out_dir: str | Path) -> "ReportBundle":
        out = Path(out_dir)
        return cls(
            out_dir=out,
            series_path=out / "series.csv",
            trends_path=out / "trends.csv",
            summary_path=out / "summary.json",
            run_config_path=out / "run_config.json",
            plot_dir=out / "plot_data",
            failures_path=out / "failures.json",
        )


def _series_rows(dataset: str, scenario: str, results) -> list[dict]:
    rows = []
    for timepoint, n, m, values in results:
        for mv in values:
            if mv.status == "ok":
                value = _round_value(mv.value)
            elif mv.status == "infinite":
                value = math.inf
            else:
                value = None
            rows.append({
                "dataset": dataset, "scenario": scenario, "measure": mv.measure,
                "timepoint": timepoint, "node_count": n, "edge_count": m,
                "value": value, "status": mv.status,
            })
    return rows


def trend_for(rows: Iterable[dict], dataset: str, scenario: str, measure: str, config: RunConfig) -> TrendResult | None:
    points = [
        (int(r["timepoint"]), r["value"] if r["status"] == "ok" else None)
        for r in rows
    ]
    series = MeasureSeries(dataset, scenario, measure, sorted(points))
    return mann_kendall(series, config.sig_level, predicted=MEASURES[measure].predicted, two_sided=config.two_sided)


def _trend_row(dataset: str, scenario: str, measure: str, result: TrendResult | None, skipped: bool) -> dict:
    row = {"dataset": dataset, "scenario": scenario, "measure": measure}
    if result is None:
        row.update({
            "S": None, "variance": None, "z": None, "p": None, "direction": "None", "significant": False,
            "p_up": None, "p_down": None, "n_points": None, "exact": False,
            "status": "skipped" if skipped else "insufficient",
        })
        return row
    row.update({
        "S": result.S, "variance": result.variance, "z": result.z, "p": result.p,
        "direction": result.direction or "None", "significant": result.significant,
        "p_up": result.p_up, "p_down": result.p_down, "n_points": result.n_points,
        "exact": result.exact, "status": "tested",
    })
    return row


def _analyze_dataset(descriptor: DatasetDescriptor, config: RunConfig) -> dict:
    """Series rows, trend rows and summary sections for one dataset."""
    elist = load_dataset(descriptor, assume_order=config.assume_order)
    options = config.measure_options()
    if descriptor.bipartite and "clustering" in config.measures:
        log.info(f"[ANALYZE] {descriptor.name}: clustering skipped for bipartite network")

    series_rows: list[dict] = []
    trends: list[tuple[TrendRecord, dict]] = []
    exponents: dict[str, dict] = {}
    evolution: dict[str, dict] = {}

    for scenario in config.scenarios:
        sc = config.scenario_config(scenario).validate()
        anchor_ids, tasks = series_points(elist, sc)
        results = _run_points(tasks, (elist, anchor_ids, scenario, config.measures, options), config.jobs)
        rows = _series_rows(descriptor.name, scenario, results)
        series_rows.extend(rows)

        for measure in config.measures:
            mrows = [r for r in rows if r["measure"] == measure]
            skipped = all(r["status"] == "skipped" for r in mrows)
            result = None if skipped else trend_for(mrows, descriptor.name, scenario, measure, config)
            record = TrendRecord(descriptor.name, scenario, measure, result, bipartite=descriptor.bipartite)
            trends.append((record, _trend_row(descriptor.name, scenario, measure, result, skipped)))

        final = {mv.measure: mv for mv in results[-1][3]} if results else {}

        def final_value(mid):
            mv = final.get(mid)
            return mv.value if mv is not None and mv.status in ("ok", "infinite") else None

        exponents[scenario] = exponent_comparison(final_value("power_law"), final_value("eigen_power_law"))
        spectra = [
            mv.detail.get("top_eigs")
            for _, _, _, values in results for mv in values
            if mv.measure == "eigen_power_law" and mv.status in ("ok", "infinite")
        ]
        if len(spectra) >= 2:
            evolution[scenario] = linear_spectral_evolution(spectra, k=options.evolution_k)

    growth = superlinear_growth_diagnostic(elist, config.timepoints).to_dict()
    return {
        "series": series_rows,
        "trends": trends,
        "exponents": exponents,
        "spectral_evolution": evolution,
        "growth": growth,
        "info": {
            "name": descriptor.name,
            "path": str(descriptor.path),
            "bipartite": descriptor.bipartite,
            "edges": len(elist),
            "dropped_self_loops": elist.dropped_self_loops,
        },
    }


def _plot_name(dataset: str, scenario: str, measure: str) -> str:
    return f"{dataset}__{scenario}__{measure}"


def _write_plot_data(bundle: ReportBundle, series: pd.DataFrame, trend_rows: list[dict]) -> None:
    bundle.plot_dir.mkdir(parents=True, exist_ok=True)
    for row in trend_rows:
        key = (row["dataset"], row["scenario"], row["measure"])
        name = _plot_name(*key)
        part = series[
            (series["dataset"] == key[0]) & (series["scenario"] == key[1]) & (series["measure"] == key[2])
        ]
        part[["timepoint", "value"]].to_csv(
            bundle.plot_dir / f"{name}.tsv", sep="\t", index=False, lineterminator="\n"
        )
        predicted = MEASURES[row["measure"]].predicted
        _write_json(bundle.plot_dir / f"{name}.verdict.json", {
            "dataset": row["dataset"],
            "scenario": row["scenario"],
            "measure": row["measure"],
            "predicted": predicted,
            "observed": row["direction"],
            "p": row["p"],
            "significant": bool(row["significant"]),
            "follows_prediction": row["direction"] == predicted,
        })


def run_analyze(config: RunConfig) -> ReportBundle:
    """
    Every enabled measure at every timepoint of every dataset and scenario,
    a Mann-Kendall test per series and the cross-dataset verdict table.
    A dataset that fails is recorded in failures.json and skipped.
    """
    config.validate()
    datasets = resolve_datasets(config)
    bundle = ReportBundle.at(config.out)
    bundle.out_dir.mkdir(parents=True, exist_ok=True)
    log.info(
        f"[ANALYZE] datasets={len(datasets)} scenarios={','.join(config.scenarios)} "
        f"measures={len(config.measures)} jobs={config.jobs} theta_scope={config.theta_scope}"
    )

    series_rows: list[dict] = []
    trend_rows: list[dict] = []
    records: list[TrendRecord] = []
    infos, exponents, evolution, growth = [], {}, {}, {}
    for descriptor in datasets:
        try:
            out = _analyze_dataset(descriptor, config)
        except (DiversityError, OSError) as exc:
            log.error(f"[ANALYZE] {descriptor.name} failed: {exc}")
            bundle.failures.append({"dataset": descriptor.name, "error": str(exc), "type": type(exc).__name__})
            continue
        series_rows.extend(out["series"])
        for record, row in out["trends"]:
            records.append(record)
            trend_rows.append(row)
        infos.append(out["info"])
        exponents[descriptor.name] = out["exponents"]
        evolution[descriptor.name] = out["spectral_evolution"]
        growth[descriptor.name] = out["growth"]

    series = pd.DataFrame(series_rows, columns=SERIES_COLUMNS)
    series.to_csv(bundle.series_path, index=False, lineterminator="\n")
    trends = pd.DataFrame(trend_rows, columns=TREND_COLUMNS)
    trends.to_csv(bundle.trends_path, index=False, lineterminator="\n")
    _write_plot_data(bundle, series, trend_rows)

    bundle.aggregates = verdict_table(records, config.sig_level)
    _write_json(bundle.summary_path, {
        "sig_level": config.sig_level,
        "two_sided": config.two_sided,
        "datasets": infos,
        "row_counts": {"series": len(series), "trends": len(trends)},
        "table": [
            {**agg.to_dict(), "observed": agg.verdict, "name": MEASURES[agg.measure].name}
            for agg in bundle.aggregates
        ],
        "exponents": exponents,
        "spectral_evolution": evolution,
        "growth": growth,
    })
    _write_json(bundle.run_config_path, config.to_dict())
    _write_json(bundle.failures_path, bundle.failures)
    log.info(f"[ANALYZE] wrote bundle to {bundle.out_dir} (series rows={len(series)}, failures={len(bundle.failures)})")
    return bundle


# ============================================================
# ========================= Generate =========================
# ============================================================

def run_generate(config: GrowthConfig, out_path: str | Path) -> GeneratedNetwork:
    """
    Generate a network and write it as a KONECT edge file plus a
    ``.meta.json`` sidecar. Nothing is written when generation fails.
    """
    net = generate(config)
    target = Path(out_path)
    _atomic_write(target, lambda fh: write_edge_file(net.elist, fh))
    meta = target.with_name(target.name + ".meta.json")
    _atomic_write(meta, lambda fh: fh.write(json.dumps(net.metadata, indent=2, sort_keys=True, default=_json_default) + "\n"))
    log.info(f"[GENERATE] model={config.model} edges={len(net.elist)} -> {target}")
    return net


# ============================================================
# ========================== Verify ==========================
# ============================================================

def _cell(value: str) -> float | None:
    return None if value == "" else float(value)


def _read_csv(path: Path, columns: list[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise VerificationError(f"schema error in {path.name}: {exc}") from exc
    if list(frame.columns) != columns:
        raise VerificationError(f"schema error in {path.name}: columns {list(frame.columns)} != {columns}")
    return frame


def _check_close(name: str, recorded: str, expected: float | None, record: dict) -> None:
    got = _cell(recorded)
    if expected is None and got is None:
        return
    if expected is None or got is None or not math.isclose(got, expected, rel_tol=1e-9, abs_tol=1e-12):
        raise VerificationError(
            f"trend mismatch for {record['dataset']}/{record['scenario']}/{record['measure']}: "
            f"{name}={recorded!r}, recomputed {expected!r}",
            record=record,
        )


def run_verify(bundle_dir: str | Path) -> dict:
    """
    Re-read a bundle, check its schema, recompute every Mann-Kendall test
    from series.csv and the verdict table from the recomputed trends.
    Raises VerificationError naming the first divergent record.
    """
    bundle = ReportBundle.at(bundle_dir)
    for path in (bundle.series_path, bundle.trends_path, bundle.summary_path, bundle.run_config_path):
        if not path.exists():
            raise VerificationError(f"missing bundle file {path.name}")

    summary = json.loads(bundle.summary_path.read_text(encoding="utf-8"))
    run_conf = json.loads(bundle.run_config_path.read_text(encoding="utf-8"))
    config = replace(
        RunConfig(),
        sig_level=run_conf["sig_level"],
        two_sided=run_conf["two_sided"],
        measures=tuple(run_conf["measures"]),
    )
    series = _read_csv(bundle.series_path, SERIES_COLUMNS)
    trends = _read_csv(bundle.trends_path, TREND_COLUMNS)

    counts = summary.get("row_counts", {})
    if counts.get("series") != len(series):
        raise VerificationError(f"schema error in series.csv: {len(series)} rows, summary expects {counts.get('series')}")
    if counts.get("trends") != len(trends):
        raise VerificationError(f"schema error in trends.csv: {len(trends)} rows, summary expects {counts.get('trends')}")
    bad_status = ~series["status"].isin(SERIES_STATUSES)
    if bad_status.any():
        row = series[bad_status].iloc[0].to_dict()
        raise VerificationError(f"schema error in series.csv: status {row['status']!r}", record=row)
    unknown = ~series["measure"].isin(list(MEASURES))
    if unknown.any():
        row = series[unknown].iloc[0].to_dict()
        raise VerificationError(f"schema error in series.csv: unknown measure {row['measure']!r}", record=row)

    series_records = series.to_dict("records")
    for r in series_records:
        r["value"] = _cell(r["value"])
    groups: dict[tuple[str, str, str], list[dict]] = {}
    for r in series_records:
        groups.setdefault((r["dataset"], r["scenario"], r["measure"]), []).append(r)

    bipartite = {d["name"]: bool(d["bipartite"]) for d in summary.get("datasets", [])}
    records: list[TrendRecord] = []
    for row in trends.to_dict("records"):
        key = (row["dataset"], row["scenario"], row["measure"])
        if key not in groups:
            raise VerificationError(f"trend row without series: {'/'.join(key)}", record=row)
        skipped = row["status"] == "skipped"
        result = None if skipped else trend_for(groups[key], *key, config)
        if result is None:
            if row["S"] != "":
                raise VerificationError(f"trend mismatch for {'/'.join(key)}: expected no test", record=row)
        else:
            if row["S"] == "" or int(float(row["S"])) != result.S:
                raise VerificationError(
                    f"trend mismatch for {'/'.join(key)}: S={row['S']!r}, recomputed {result.S}", record=row
                )
            _check_close("variance", row["variance"], result.variance, row)
            _check_close("z", row["z"], result.z, row)
            _check_close("p", row["p"], result.p, row)
            if row["direction"] != (result.direction or "None"):
                raise VerificationError(
                    f"trend mismatch for {'/'.join(key)}: direction={row['direction']!r}, "
                    f"recomputed {result.direction}",
                    record=row,
                )
        records.append(TrendRecord(*key, result, bipartite=bipartite.get(row["dataset"], False)))

    table = {(a.measure, a.scenario): a for a in verdict_table(records, config.sig_level)}
    for entry in summary.get("table", []):
        agg = table.get((entry["measure"], entry["scenario"]))
        if agg is None:
            raise VerificationError(f"summary row without trends: {entry['measure']}/{entry['scenario']}", record=entry)
        if (entry["k"], entry["n"], entry["verdict"]) != (agg.k, agg.n, agg.verdict) or not math.isclose(
            entry["p_binomial"], agg.p_binomial, rel_tol=1e-9, abs_tol=1e-15
        ):
            raise VerificationError(
                f"summary mismatch for {entry['measure']}/{entry['scenario']}: "
                f"k={entry['k']} n={entry['n']} verdict={entry['verdict']}, "
                f"recomputed k={agg.k} n={agg.n} verdict={agg.verdict}",
                record=entry,
            )
    if len(table) != len(summary.get("table", [])):
        raise VerificationError("summary table does not cover every measure/scenario in trends.csv")

    log.info(f"[VERIFY] {bundle.out_dir}: series={len(series)} trends={len(trends)} aggregates={len(table)} pass")
    return {"status": "pass", "series_rows": len(series), "trend_rows": len(trends), "aggregate_rows": len(table)}
