"""
The four `bdv` commands. Each returns the process exit code:

    0  every rule OK / every scenario passed
    1  some rule KO (validate), or some scenario failed or rule uncovered (test)
    2  some rule in ERROR (validate)
    3  usage, load, syntax or typing problem before anything ran
    4  the two evaluators diverged in redundant mode
"""

import logging
import os
from pathlib import Path
from typing import TextIO

from django.conf import settings
from pydantic import Field, ValidationError, field_validator

from .diagnostics import undecodable
from .exceptions import CampaignError, DiagnosticError, EvaluatorDivergence, TypeDiagnosticError
from .explain import explain_rule
from .harness import coverage_check, load_scenario_file, rule_files, run_scenarios
from .ingest import Schema, load_dataset, load_schema_file
from .lang import Rule, parse_rule_file, typecheck
from .lang.typecheck import Declarations
from .models import CampaignRun
from .reporting import ReportFormat, export_counterexamples, render_report
from .rules import CampaignOptions, exit_status, run_campaign

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_KO = 1
EXIT_ERROR = 2
EXIT_USAGE = 3
EXIT_DIVERGENCE = 4


def default_jobs() -> int:
    return settings.BDV.get("JOBS") or os.cpu_count() or 1


class CampaignConfig(CampaignOptions):
    schema_path: Path
    data: list[Path] = Field(default_factory=list)
    rules: list[Path]
    format: ReportFormat = ReportFormat.TEXT
    out: Path | None = None
    counterexamples: Path | None = None
    save: bool = False

    @field_validator("rules")
    @classmethod
    def at_least_one_rule_file(cls, value):
        if not value:
            raise ValueError("at least one rule file is required")
        return value


def _report_problems(err: TextIO, problems):
    for problem in problems:
        err.write(f"{problem}\n")


def load_rules(paths: list[Path]) -> list[Rule]:
    """
    Parse every rule file. Raises DiagnosticError with the diagnostics of all files.
    """
    rules: list[Rule] = []
    diagnostics = []
    for path in paths:
        try:
            rules += parse_rule_file(Path(path).read_text(encoding="utf-8"), str(path))
        except UnicodeDecodeError as exc:
            diagnostics.append(undecodable(path, exc))
        except DiagnosticError as exc:
            diagnostics += exc.diagnostics
    if diagnostics:
        raise DiagnosticError(diagnostics)
    return rules


def typecheck_rules(rules: list[Rule], decls: Declarations) -> list[Rule]:
    typed = []
    diagnostics = []
    for rule in rules:
        try:
            typed.append(typecheck(rule, decls))
        except TypeDiagnosticError as exc:
            diagnostics += exc.diagnostics
    if diagnostics:
        raise TypeDiagnosticError(diagnostics)
    return typed


def _schema_declarations(schema: Schema) -> Declarations:
    carriers = frozenset(c.name for c in schema.carriers)
    return Declarations(carriers, {c.name: c.type for c in schema.constants})


def _write(text: str, out: Path | None, stdout: TextIO):
    if out is None:
        stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_validate(config: CampaignConfig, stdout: TextIO, stderr: TextIO) -> int:
    try:
        schema = load_schema_file(config.schema_path)
        universe = load_dataset(schema, config.data)
        rules = typecheck_rules(load_rules(config.rules), universe.declarations)
    except DiagnosticError as exc:
        _report_problems(stderr, exc.diagnostics)
        return EXIT_USAGE
    except OSError as exc:
        stderr.write(f"{exc.filename}: {exc.strerror}\n")
        return EXIT_USAGE
    try:
        report = run_campaign(rules, universe, config)
    except CampaignError as exc:
        stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except EvaluatorDivergence as exc:
        stderr.write(f"internal divergence: {exc}\n")
        return EXIT_DIVERGENCE
    _write(render_report(report, config.format), config.out, stdout)
    if config.counterexamples is not None:
        export_counterexamples(report, config.counterexamples)
    if config.save:
        CampaignRun.objects.record(report, str(config.schema_path))
    return exit_status(report)


def cmd_check(rule_paths: list[Path], schema_path: Path, stdout: TextIO, stderr: TextIO) -> int:
    if not rule_paths:
        stderr.write("no rule file given\n")
        return EXIT_USAGE
    try:
        schema = load_schema_file(schema_path)
        rules = typecheck_rules(load_rules(rule_paths), _schema_declarations(schema))
    except DiagnosticError as exc:
        _report_problems(stderr, exc.diagnostics)
        return EXIT_USAGE
    except OSError as exc:
        stderr.write(f"{exc.filename}: {exc.strerror}\n")
        return EXIT_USAGE
    stdout.write(f"{len(rules)} rule(s) parse and typecheck\n")
    return EXIT_OK


def cmd_test(scenario_paths: list[Path], rule_paths: list[Path], stdout: TextIO, stderr: TextIO) -> int:
    if not scenario_paths:
        stderr.write("no scenario file given\n")
        return EXIT_USAGE
    try:
        scenarios = [s for path in scenario_paths for s in load_scenario_file(path)]
        # without --rules, coverage is measured over every rule of the FROM files
        rules = load_rules(rule_paths or [path for path in rule_files(scenarios) if path.is_file()])
    except DiagnosticError as exc:
        _report_problems(stderr, exc.diagnostics)
        return EXIT_USAGE
    except OSError as exc:
        stderr.write(f"{exc.filename}: {exc.strerror}\n")
        return EXIT_USAGE
    report = run_scenarios(scenarios, rules)
    report.uncovered = coverage_check(rules or {s.rule for s in scenarios}, scenarios)
    for result in report.results:
        if result.passed:
            stdout.write(f"PASS  {result.name}  ({result.rule}: {result.actual})\n")
        else:
            stdout.write(f"FAIL  {result.name}  ({result.rule}: expected {result.expected}, got {result.actual})\n")
            for problem in result.problems:
                stdout.write(f"        {problem}\n")
    for name in report.uncovered:
        stdout.write(f"UNCOVERED  {name}  (needs an OK and a KO scenario)\n")
    passed = sum(r.passed for r in report.results)
    stdout.write(f"{passed}/{len(report.results)} scenario(s) passed, {len(report.uncovered)} rule(s) uncovered\n")
    return EXIT_OK if report.passed else EXIT_KO


def cmd_explain(
    rule_name: str,
    rule_paths: list[Path],
    schema_path: Path,
    stdout: TextIO,
    stderr: TextIO,
    data: list[Path] | None = None,
    fixture: Path | None = None,
    scenario: str | None = None,
) -> int:
    """
    With `data` the rule is explained on the loaded dataset; with `fixture` on the fixture of a
    scenario of that file (the named one, else the first testing this rule).
    """
    try:
        schema = load_schema_file(schema_path)
        rules = {rule.name: rule for rule in load_rules(rule_paths)}
        if rule_name not in rules:
            stderr.write(f"unknown rule {rule_name}\n")
            return EXIT_USAGE
        universe = None
        if fixture is not None:
            scenarios = load_scenario_file(fixture)
            if scenario:
                candidates = [s for s in scenarios if s.name == scenario]
            else:
                candidates = [s for s in scenarios if s.rule == rule_name]
            if not candidates:
                stderr.write(f"no scenario {scenario or 'for ' + rule_name} in {fixture}\n")
                return EXIT_USAGE
            universe = load_dataset(candidates[0].fixture)
        elif data:
            universe = load_dataset(schema, data)
        explanation = explain_rule(rules[rule_name], _schema_declarations(schema), universe)
    except DiagnosticError as exc:
        _report_problems(stderr, exc.diagnostics)
        return EXIT_USAGE
    except OSError as exc:
        stderr.write(f"{exc.filename}: {exc.strerror}\n")
        return EXIT_USAGE
    stdout.write(explanation.render())
    return EXIT_OK


def build_config(stderr: TextIO, **options) -> CampaignConfig | None:
    try:
        return CampaignConfig(**options)
    except ValidationError as exc:
        for error in exc.errors():
            where = ".".join(str(part) for part in error["loc"])
            stderr.write(f"{where}: {error['msg']}\n")
        return None
