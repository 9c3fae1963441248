# diversity/management/commands/verify.py
from django.core.management.base import BaseCommand, CommandError

from diversity.exceptions import DiversityError, VerificationError
from diversity.management.commands._logfile import add_logfile_argument, attach_logfile, detach_logfile
from diversity.utils.pipeline import run_verify


class Command(BaseCommand):
    help = "Re-check a report bundle: schema, Mann-Kendall results and the verdict table"

    def add_arguments(self, parser):
        parser.add_argument("bundle", type=str, help="Report bundle directory")
        add_logfile_argument(parser)

    def handle(self, *args, **options):
        handler = attach_logfile(options.get("logfile"))
        try:
            report = run_verify(options["bundle"])
        except VerificationError as exc:
            if exc.record:
                self.stderr.write(f"first divergent record: {exc.record}")
            raise CommandError(str(exc)) from exc
        except (DiversityError, KeyError, ValueError) as exc:
            raise CommandError(f"unreadable bundle: {exc}") from exc
        finally:
            detach_logfile(handler)

        self.stdout.write(self.style.SUCCESS(
            f"Bundle verified: series rows={report['series_rows']} trend rows={report['trend_rows']} "
            f"aggregates={report['aggregate_rows']}"
        ))
