# diversity/management/commands/analyze.py
from django.core.management.base import BaseCommand, CommandError

from diversity.exceptions import DiversityError
from diversity.management.commands._logfile import add_logfile_argument, attach_logfile, detach_logfile
from diversity.utils.pipeline import RunConfig, run_analyze


class Command(BaseCommand):
    help = "Compute the diversity measures over time for each dataset and test them for trends"

    def add_arguments(self, parser):
        parser.add_argument("--manifest", type=str, help="TAB-separated dataset manifest")
        parser.add_argument(
            "--dataset", action="append", metavar="PATH[:bipartite]",
            help="Edge file to analyze (repeatable); alternative to --manifest",
        )
        parser.add_argument("--scenario", choices=["full", "connected", "both"], default="both")
        parser.add_argument("--timepoints", type=int, help="Number of timepoints T (default 100)")
        parser.add_argument("--t1", type=int, help="Anchor timepoint of the connected scenario (default 75)")
        parser.add_argument("--sig-level", type=float, help="Significance level (default 0.05)")
        parser.add_argument("--rank-r", type=int, help="Eigenvalues used by spectral measures (default 50)")
        parser.add_argument("--rw-steps", type=int, help="Random walk length n (default 4)")
        parser.add_argument("--diameter-samples", type=int, help="BFS sources for the diameter (default 500)")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--measures", type=str, help="Comma list of measure ids (default all)")
        parser.add_argument("--out", type=str, help="Output directory")
        parser.add_argument("--jobs", type=int, help="Worker processes")
        parser.add_argument("--assume-order", action="store_true", help="Use file order when timestamps are missing")
        parser.add_argument("--two-sided", action="store_true", help="Two-sided Mann-Kendall tests")
        parser.add_argument("--exclude-anchor", action="store_true", help="Start the connected series after t1")
        parser.add_argument("--theta-scope", choices=["lcc", "nonisolated"], default="lcc")
        add_logfile_argument(parser)

    def handle(self, *args, **options):
        handler = attach_logfile(options.get("logfile"))
        try:
            config = RunConfig.from_options(options)
            bundle = run_analyze(config)
        except DiversityError as exc:
            raise CommandError(str(exc)) from exc
        finally:
            detach_logfile(handler)

        for failure in bundle.failures:
            self.stderr.write(f"{failure['dataset']}: {failure['type']}: {failure['error']}")
        for agg in bundle.aggregates:
            self.stdout.write(f"{agg.measure:<24} {agg.scenario:<10} {agg.cell()}")
        self.stdout.write(self.style.SUCCESS(
            f"Done. bundle={bundle.out_dir} aggregates={len(bundle.aggregates)} failures={len(bundle.failures)}"
        ))
