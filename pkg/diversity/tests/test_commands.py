import json
import shutil
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

MEASURES = "avg_degree,gini,jain,clustering,fractional_rank"


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)

    def call(self, name, *args, **options):
        out, err = StringIO(), StringIO()
        call_command(name, *args, stdout=out, stderr=err, **options)
        return out.getvalue(), err.getvalue()

    def generate_ba(self, name="ba.tsv", n=60, seed=0):
        path = self.tmp / name
        self.call("generate", model="ba", n=n, edges_per_step=2, seed=seed, out=str(path))
        return path

    def analyze(self, dataset, out, **options):
        defaults = {"timepoints": 10, "t1": 5, "measures": MEASURES, "out": str(out)}
        defaults.update(options)
        return self.call("analyze", dataset=[str(dataset)], **defaults)


class GenerateCommandTests(CommandTestCase):
    def test_writes_edge_file_and_metadata(self):
        path = self.tmp / "ba1000.tsv"
        out, _ = self.call("generate", model="ba", n=1000, edges_per_step=2, out=str(path))
        lines = [line for line in path.read_text().splitlines() if not line.startswith("%")]
        self.assertEqual(len(lines), 1997)
        self.assertEqual([int(line.split()[3]) for line in lines], list(range(1, 1998)))
        meta = json.loads(Path(f"{path}.meta.json").read_text())
        self.assertEqual(meta["model"], "ba")
        self.assertEqual(meta["config"]["seed"], 0)
        self.assertIn("edges=1997", out)

    def test_same_seed_gives_identical_files(self):
        a = self.generate_ba("a.tsv", seed=3)
        b = self.generate_ba("b.tsv", seed=3)
        self.assertEqual(a.read_bytes(), b.read_bytes())

    def test_divergent_neumann_kernel_leaves_no_file(self):
        path = self.tmp / "kernel.tsv"
        with self.assertRaises(CommandError):
            self.call("generate", model="kernel", kernel="neumann", kernel_alpha=1.0, n=20, out=str(path))
        self.assertFalse(path.exists())
        self.assertEqual(list(self.tmp.iterdir()), [])

    def test_invalid_model_size(self):
        with self.assertRaises(CommandError):
            self.call("generate", model="kernel", n=1000, out=str(self.tmp / "big.tsv"))


class AnalyzeCommandTests(CommandTestCase):
    def test_bundle_layout(self):
        dataset = self.generate_ba()
        out_dir = self.tmp / "bundle"
        out, _ = self.analyze(dataset, out_dir)

        series = pd.read_csv(out_dir / "series.csv")
        self.assertEqual(
            list(series.columns),
            ["dataset", "scenario", "measure", "timepoint", "node_count", "edge_count", "value", "status"],
        )
        full = series[series["scenario"] == "full"]
        self.assertEqual(len(full), 5 * 10)
        connected = series[series["scenario"] == "connected"]
        self.assertEqual(sorted(connected["timepoint"].unique()), list(range(5, 11)))

        summary = json.loads((out_dir / "summary.json").read_text())
        self.assertEqual(summary["row_counts"]["series"], len(series))
        self.assertEqual({row["measure"] for row in summary["table"]}, set(MEASURES.split(",")))
        self.assertIn("ba", summary["growth"])

        run_config = json.loads((out_dir / "run_config.json").read_text())
        self.assertEqual(run_config["timepoints"], 10)
        self.assertIn("numpy", run_config["versions"])

        plot = out_dir / "plot_data" / "ba__full__gini.tsv"
        self.assertEqual(plot.read_text().splitlines()[0], "timepoint\tvalue")
        verdict = json.loads((out_dir / "plot_data" / "ba__full__gini.verdict.json").read_text())
        self.assertEqual(verdict["predicted"], "Up")
        self.assertIn("Done.", out)

    def test_average_degree_grows(self):
        dataset = self.generate_ba(n=200)
        out_dir = self.tmp / "bundle"
        self.analyze(dataset, out_dir, scenario="full", measures="avg_degree")
        trends = pd.read_csv(out_dir / "trends.csv")
        row = trends.iloc[0]
        self.assertEqual(row["direction"], "Up")
        self.assertTrue(row["significant"])

    def test_rerun_is_byte_identical(self):
        dataset = self.generate_ba()
        self.analyze(dataset, self.tmp / "one")
        self.analyze(dataset, self.tmp / "two")
        for name in ("series.csv", "trends.csv", "summary.json"):
            self.assertEqual((self.tmp / "one" / name).read_bytes(), (self.tmp / "two" / name).read_bytes())

    def test_worker_pool_matches_inline_run(self):
        dataset = self.generate_ba()
        self.analyze(dataset, self.tmp / "inline", scenario="full")
        self.analyze(dataset, self.tmp / "pool", scenario="full", jobs=2)
        self.assertEqual(
            (self.tmp / "inline" / "series.csv").read_bytes(),
            (self.tmp / "pool" / "series.csv").read_bytes(),
        )

    def test_bipartite_dataset_skips_clustering(self):
        rng = np.random.default_rng(1)
        path = self.tmp / "bip.tsv"
        lines = ["% bip unweighted"]
        for t in range(1, 61):
            lines.append(f"{int(rng.integers(1, 11))} {int(rng.integers(1, 9))} 1 {t}")
        path.write_text("\n".join(lines) + "\n")

        out_dir = self.tmp / "bundle"
        self.call(
            "analyze", dataset=[f"{path}:bipartite"], scenario="full",
            timepoints=6, t1=3, measures="gini,clustering", out=str(out_dir),
        )
        series = pd.read_csv(out_dir / "series.csv", keep_default_na=False)
        clustering = series[series["measure"] == "clustering"]
        self.assertEqual(len(clustering), 6)
        self.assertEqual(set(clustering["status"]), {"skipped"})
        trends = pd.read_csv(out_dir / "trends.csv", keep_default_na=False)
        self.assertEqual(trends.set_index("measure").loc["clustering", "status"], "skipped")
        summary = json.loads((out_dir / "summary.json").read_text())
        table = {row["measure"]: row for row in summary["table"]}
        self.assertEqual(table["clustering"]["n"], 0)
        self.assertTrue(summary["datasets"][0]["bipartite"])

    def test_failing_dataset_is_recorded(self):
        good = self.generate_ba()
        missing = self.tmp / "missing.tsv"
        out_dir = self.tmp / "bundle"
        _, err = self.call(
            "analyze", dataset=[str(good), str(missing)], scenario="full",
            timepoints=10, t1=5, measures="gini", out=str(out_dir),
        )
        failures = json.loads((out_dir / "failures.json").read_text())
        self.assertEqual([f["dataset"] for f in failures], ["missing"])
        self.assertIn("missing", err)
        series = pd.read_csv(out_dir / "series.csv")
        self.assertEqual(set(series["dataset"]), {"ba"})

    def test_empty_measure_set(self):
        dataset = self.generate_ba()
        with self.assertRaises(CommandError):
            self.analyze(dataset, self.tmp / "bundle", measures="")

    def test_unknown_measure(self):
        dataset = self.generate_ba()
        with self.assertRaises(CommandError):
            self.analyze(dataset, self.tmp / "bundle", measures="gini,modularity")

    def test_no_dataset(self):
        with self.assertRaises(CommandError):
            self.call("analyze", out=str(self.tmp / "bundle"))

    def test_manifest(self):
        dataset = self.generate_ba()
        manifest = self.tmp / "manifest.tsv"
        manifest.write_text(f"# name\tpath\tkind\nsynthetic\t{dataset.name}\tunipartite\tBA n=60\n")
        out_dir = self.tmp / "bundle"
        self.call("analyze", manifest=str(manifest), scenario="full", timepoints=10, t1=5,
                  measures="gini", out=str(out_dir))
        series = pd.read_csv(out_dir / "series.csv")
        self.assertEqual(set(series["dataset"]), {"synthetic"})


class VerifyCommandTests(CommandTestCase):
    def setUp(self):
        super().setUp()
        self.bundle = self.tmp / "bundle"
        self.analyze(self.generate_ba(), self.bundle)

    def test_untouched_bundle_passes(self):
        out, _ = self.call("verify", str(self.bundle))
        self.assertIn("Bundle verified", out)

    def test_edited_p_value_fails(self):
        path = self.bundle / "trends.csv"
        trends = pd.read_csv(path, dtype=str, keep_default_na=False)
        idx = trends.index[trends["status"] == "tested"][0]
        trends.loc[idx, "p"] = "0.987654321"
        trends.to_csv(path, index=False, lineterminator="\n")

        err = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command("verify", str(self.bundle), stdout=StringIO(), stderr=err)
        self.assertIn("p=", str(ctx.exception))
        self.assertIn(trends.loc[idx, "measure"], str(ctx.exception))
        self.assertIn("first divergent record", err.getvalue())

    def test_truncated_series_is_a_schema_error(self):
        path = self.bundle / "series.csv"
        lines = path.read_text().splitlines(keepends=True)
        path.write_text("".join(lines[: len(lines) // 2]))
        with self.assertRaisesMessage(CommandError, "schema error"):
            self.call("verify", str(self.bundle))

    def test_renamed_column_is_a_schema_error(self):
        path = self.bundle / "trends.csv"
        text = path.read_text()
        path.write_text(text.replace("variance", "var", 1))
        with self.assertRaisesMessage(CommandError, "schema error"):
            self.call("verify", str(self.bundle))

    def test_missing_file(self):
        (self.bundle / "summary.json").unlink()
        with self.assertRaisesMessage(CommandError, "missing bundle file"):
            self.call("verify", str(self.bundle))
