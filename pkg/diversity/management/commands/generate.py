# diversity/management/commands/generate.py
from django.core.management.base import BaseCommand, CommandError

from diversity.exceptions import DiversityError
from diversity.management.commands._logfile import add_logfile_argument, attach_logfile, detach_logfile
from diversity.utils.growth_models import GrowthConfig
from diversity.utils.pipeline import run_generate


class Command(BaseCommand):
    help = "Generate a synthetic temporal network and write it as a KONECT edge file"

    def add_arguments(self, parser):
        parser.add_argument("--model", choices=["ba", "eigenvector_pa", "triangle_closing", "kernel"], default="ba")
        parser.add_argument("--n", type=int, default=1000, help="Number of vertices")
        parser.add_argument("--edges-per-step", type=int, default=2)
        parser.add_argument("--kernel", choices=["exponential", "neumann"], default="exponential")
        parser.add_argument("--kernel-alpha", type=float, default=0.01)
        parser.add_argument("--seed-edges", type=int, default=None, help="Edges of the random-tree seed graph")
        parser.add_argument("--edges", type=int, default=None, help="Total edges for the fixed-vertex models")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out", type=str, required=True, help="Edge file to write")
        add_logfile_argument(parser)

    def handle(self, *args, **options):
        handler = attach_logfile(options.get("logfile"))
        config = GrowthConfig(
            model=options["model"],
            n_target=options["n"],
            edges_per_step=options["edges_per_step"],
            kernel_kind=options["kernel"],
            kernel_alpha=options["kernel_alpha"],
            seed=options["seed"],
            seed_edges=options["seed_edges"],
            n_edges=options["edges"],
        )
        try:
            net = run_generate(config, options["out"])
        except DiversityError as exc:
            raise CommandError(str(exc)) from exc
        finally:
            detach_logfile(handler)

        self.stdout.write(self.style.SUCCESS(
            f"Done. model={config.model} edges={len(net.elist)} out={options['out']}"
        ))
