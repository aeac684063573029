from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from ... import __version__, cli
from ...reporting import ReportFormat

_OUTCOMES = {
    cli.EXIT_KO: "some rule is KO",
    cli.EXIT_ERROR: "some rule is in ERROR",
    cli.EXIT_USAGE: "nothing was run",
    cli.EXIT_DIVERGENCE: "evaluators diverged",
}


class Command(BaseCommand):
    help = "Validate datasets against B rules: validate, check, test or explain."
    requires_system_checks = []

    def get_version(self):
        return __version__

    def add_arguments(self, parser):
        commands = parser.add_subparsers(dest="subcommand", required=True, metavar="{validate,check,test,explain}")

        validate = commands.add_parser("validate", help="Run a rule base against a dataset.")
        self._common(validate)
        validate.add_argument("--data", nargs="+", type=Path, default=[], help="Data files or directories.")
        validate.add_argument("--format", choices=[f.value for f in ReportFormat], default=None)
        validate.add_argument("--out", type=Path, help="Write the report here instead of standard output.")
        validate.add_argument("--counterexamples", type=Path, help="Also write every counterexample to this CSV.")
        validate.add_argument("--redundant", action="store_true", default=None, help="Cross-check both evaluators.")
        validate.add_argument("--jobs", type=int, help="Rules evaluated in parallel (default: BDV_JOBS).")
        validate.add_argument("--fail-fast", action="store_true", help="Stop scheduling rules after one is not OK.")
        validate.add_argument("--save", action="store_true", default=None, help="Keep the report in the database.")

        check = commands.add_parser("check", help="Parse and typecheck rules against a schema.")
        self._common(check)

        test = commands.add_parser("test", help="Run rule-testing scenarios.")
        test.add_argument("scenarios", nargs="*", type=Path, help="Scenario files (.bdt).")
        test.add_argument("--rules", nargs="+", type=Path, default=[], help="Rule files (.bdr).")

        explain = commands.add_parser("explain", help="Show how a rule is typed and why it fails.")
        explain.add_argument("rule", help="Rule name.")
        self._common(explain)
        explain.add_argument("--data", nargs="+", type=Path, default=[], help="Data files or directories.")
        explain.add_argument("--fixture", type=Path, help="Scenario file whose fixture is used as data.")
        explain.add_argument("--scenario", help="Scenario of --fixture to use.")

    @staticmethod
    def _common(parser):
        parser.add_argument("--schema", type=Path, required=True, help="Schema file (.bds).")
        parser.add_argument("--rules", nargs="+", type=Path, default=[], help="Rule files (.bdr).")

    def handle(self, *args, subcommand, **options):
        match subcommand:
            case "validate":
                code = self.validate(options)
            case "check":
                code = cli.cmd_check(options["rules"], options["schema"], self.stdout, self.stderr)
            case "test":
                code = cli.cmd_test(options["scenarios"], options["rules"], self.stdout, self.stderr)
            case "explain":
                code = cli.cmd_explain(
                    options["rule"],
                    options["rules"],
                    options["schema"],
                    self.stdout,
                    self.stderr,
                    data=options["data"],
                    fixture=options["fixture"],
                    scenario=options["scenario"],
                )
        if code:
            raise CommandError(f"bdv {subcommand}: {_OUTCOMES[code]}", returncode=code)

    def validate(self, options) -> int:
        defaults = settings.BDV
        config = cli.build_config(
            self.stderr,
            schema_path=options["schema"],
            data=options["data"],
            rules=options["rules"],
            format=options["format"] or defaults["FORMAT"],
            out=options["out"],
            counterexamples=options["counterexamples"],
            redundant=defaults["REDUNDANT"] if options["redundant"] is None else options["redundant"],
            jobs=cli.default_jobs() if options["jobs"] is None else options["jobs"],
            fail_fast=options["fail_fast"],
            save=defaults["SAVE_CAMPAIGNS"] if options["save"] is None else options["save"],
        )
        if config is None:
            return cli.EXIT_USAGE
        return cli.cmd_validate(config, self.stdout, self.stderr)
