"""
Rule-testing scenarios (`.bdt` files).

    SCENARIO unlinked_signal_is_reported
      RULE signal_linked FROM "signalling.bdr"
      FIXTURE
        CARRIERS
          t_signal = {s1, s2}
          t_interlocking = {ik1}
        CONSTANTS
          territory : t_signal +-> t_interlocking = {s1 |-> ik1, s2 |-> ik1}
          linked : t_signal +-> t_interlocking = {s1 |-> ik1}
      EXPECT KO 1 ASSIGNMENTS (sig = s2)
    END

A scenario runs its rule through `run_rule` on the fixture universe and passes when the
status, the counterexample count and the listed assignments match.
"""

import logging
from collections import Counter
from collections.abc import Iterable, Mapping
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, SkipValidation

from .diagnostics import Diagnostic, SourceSpan, undecodable
from .eval import WDKind
from .exceptions import DiagnosticError, ScenarioError, SyntaxDiagnosticError
from .ingest import Schema, load_dataset
from .ingest.loader import AtomTable, InvalidValue, literal_value
from .ingest.schema import SchemaParser, check_declarations
from .kernel import to_text
from .lang import ast, parse_rule_file, typecheck
from .lang.lexer import Kind
from .lang.parser import ParseFailure
from .rules import RuleResult, Status, run_rule

logger = logging.getLogger(__name__)


class Expectation(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    status: Status
    count: int | None = None
    assignments: tuple[SkipValidation[dict[str, ast.Expr]], ...] = ()
    wd_kind: WDKind | None = None

    def __str__(self):
        match self.status:
            case Status.KO:
                return f"KO {self.count}"
            case Status.ERROR:
                return f"ERROR {self.wd_kind}"
        return "OK"


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    rule: str
    rule_file: str | None = None
    fixture: Schema
    expect: Expectation
    span: SkipValidation[SourceSpan | None] = None


class ScenarioResult(BaseModel):
    name: str
    rule: str
    passed: bool
    expected: str
    actual: str
    problems: list[str] = Field(default_factory=list)


class HarnessReport(BaseModel):
    results: list[ScenarioResult] = Field(default_factory=list)
    uncovered: list[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results) and not self.uncovered


# ---------------------------------------------------------------------------- #
# --------------------------------- Parsing ---------------------------------- #
# ---------------------------------------------------------------------------- #
class _ScenarioParser(SchemaParser):
    def scenario(self, file: str) -> tuple[Scenario | None, list[Diagnostic]]:
        start = self.expect("SCENARIO")
        name = self.expect_ident("scenario name").text
        self.expect("RULE")
        rule = self.expect_ident("rule name").text
        rule_file = self.expect_string().text if self.accept("FROM") else None
        self.expect("FIXTURE")
        carriers, constants, diagnostics = self.schema(stop=("EXPECT", "END", "SCENARIO"))
        diagnostics += check_declarations(carriers, constants)
        for decl in constants:
            if decl.source.literal is None:
                diagnostics.append(
                    Diagnostic(f"fixture constant {decl.name} must be given by a literal", decl.span, "fixture")
                )
        self.expect("EXPECT")
        expect = self.expectation()
        self.expect("END")
        if diagnostics:
            return None, diagnostics
        fixture = Schema(carriers=tuple(carriers), constants=tuple(constants), file=file)
        scenario = Scenario(
            name=name, rule=rule, rule_file=rule_file, fixture=fixture, expect=expect, span=self.span_from(start)
        )
        return scenario, []

    def expectation(self) -> Expectation:
        token = self.expect_ident("OK, KO or ERROR")
        match token.text:
            case "OK":
                return Expectation(status=Status.OK)
            case "KO":
                if self.tok.kind is not Kind.INT:
                    raise self.error(f"expected counterexample count after KO, found {self.tok}")
                count = int(self.advance().text)
                assignments = []
                if self.accept("ASSIGNMENTS"):
                    assignments.append(self._assignment())
                    while self.at("("):
                        assignments.append(self._assignment())
                return Expectation(status=Status.KO, count=count, assignments=tuple(assignments))
            case "ERROR":
                kind = self._wd_kind()
                return Expectation(status=Status.ERROR, wd_kind=kind)
        raise self.error(f"expected OK, KO or ERROR, found {token}", token)

    def _wd_kind(self) -> WDKind:
        start = self.tok
        if start.kind is Kind.STRING:
            text = self.advance().text
        else:
            parts = [self.expect_ident("well-definedness error kind").text]
            while self.accept("-"):
                parts.append(self.advance().text)
            text = "-".join(parts)
        try:
            return WDKind(text)
        except ValueError:
            raise self.error(f"unknown well-definedness error kind {text}", start) from None

    def _assignment(self) -> dict[str, ast.Expr]:
        self.expect("(")
        values = {}
        while True:
            var = self.expect_ident("variable").text
            self.expect("=")
            values[var] = self.expression()
            if not self.accept(","):
                break
        self.expect(")")
        return values


def parse_scenario_file(text: str, file: str = "<scenarios>") -> list[Scenario]:
    """
    Raises ScenarioError listing every problem; no partial result.
    """
    try:
        parser = _ScenarioParser.from_text(text, file)
    except SyntaxDiagnosticError as exc:
        raise ScenarioError(exc.diagnostics) from None
    scenarios: list[Scenario] = []
    diagnostics: list[Diagnostic] = []
    seen: dict[str, Scenario] = {}
    while not parser.at_end():
        start = parser.pos
        try:
            scenario, problems = parser.scenario(file)
        except ParseFailure as exc:
            diagnostics.append(exc.diagnostic)
            if parser.pos == start or not parser.at("SCENARIO"):
                parser.advance()
            parser.skip_to("SCENARIO")
            continue
        diagnostics += problems
        if scenario is None:
            continue
        if scenario.name in seen:
            diagnostics.append(Diagnostic(f"duplicate scenario name {scenario.name}", scenario.span, "duplicate"))
            continue
        seen[scenario.name] = scenario
        scenarios.append(scenario)
    if diagnostics:
        raise ScenarioError(diagnostics)
    return scenarios


def load_scenario_file(path: str | Path) -> list[Scenario]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioError([undecodable(path, exc)]) from None
    return parse_scenario_file(text, str(path))


# ---------------------------------------------------------------------------- #
# --------------------------------- Running ---------------------------------- #
# ---------------------------------------------------------------------------- #
def _describe(result: RuleResult) -> str:
    match result.status:
        case Status.KO:
            return f"KO {len(result.counterexamples)}"
        case Status.ERROR:
            return f"ERROR {result.error.kind}"
    return "OK"


def _rule_path(scenario: Scenario) -> Path:
    return Path(scenario.fixture.file).parent / scenario.rule_file


def rule_files(scenarios: Iterable[Scenario]) -> list[Path]:
    """Rule files named in FROM clauses, resolved against their scenario file"""
    return sorted({_rule_path(s) for s in scenarios if s.rule_file is not None})


def _rule_for(scenario: Scenario, rules: Mapping[str, ast.Rule]) -> ast.Rule:
    if scenario.rule_file is None:
        if scenario.rule not in rules:
            raise LookupError(f"unknown rule {scenario.rule}")
        return rules[scenario.rule]
    path = _rule_path(scenario)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise LookupError(str(undecodable(path, exc))) from None
    except OSError as exc:
        raise LookupError(f"cannot read rule file {path}: {exc.strerror}") from None
    for rule in parse_rule_file(text, str(path)):
        if rule.name == scenario.rule:
            return rule
    raise LookupError(f"unknown rule {scenario.rule} in {path}")


def _compare(scenario: Scenario, typed: ast.Rule, result: RuleResult) -> list[str]:
    expect = scenario.expect
    actual = _describe(result)
    if expect.status is not result.status:
        return [f"expected {expect}, got {actual}"]
    if expect.status is Status.ERROR:
        return [] if result.error.kind == expect.wd_kind else [f"expected {expect}, got {actual}"]
    if expect.status is Status.OK:
        return []
    problems = []
    if expect.count != len(result.counterexamples):
        problems.append(f"expected {expect}, got {actual}")
    variable_types = {item.var: item.domain.ty.element for item in typed.where if isinstance(item, ast.Binding)}
    atoms = AtomTable(scenario.fixture.carriers)
    remaining = Counter(tuple(sorted(c.assignment.items())) for c in result.counterexamples)
    for expected in expect.assignments:
        try:
            wanted = {var: to_text(literal_value(node, variable_types[var], atoms)) for var, node in expected.items()}
        except KeyError as exc:
            problems.append(f"assignment names {exc.args[0]}, which is not a WHERE variable")
            continue
        except InvalidValue as exc:
            problems.append(f"bad expected assignment: {exc}")
            continue
        shown = ", ".join(f"{k}={v}" for k, v in wanted.items())
        match = next(
            (key for key, n in remaining.items() if n and all(dict(key).get(k) == v for k, v in wanted.items())),
            None,
        )
        if match is None:
            problems.append(f"no counterexample with {shown}")
        else:
            remaining[match] -= 1
    return problems


def run_scenario(scenario: Scenario, rules: Mapping[str, ast.Rule]) -> ScenarioResult:
    common = {"name": scenario.name, "rule": scenario.rule, "expected": str(scenario.expect)}
    try:
        rule = _rule_for(scenario, rules)
        universe = load_dataset(scenario.fixture)
        typed = typecheck(rule, universe.declarations)
    except LookupError as exc:
        return ScenarioResult(passed=False, actual="not run", problems=[str(exc)], **common)
    except DiagnosticError as exc:
        problems = [str(d) for d in exc.diagnostics]
        return ScenarioResult(passed=False, actual="not run", problems=problems, **common)
    result = run_rule(typed, universe)
    problems = _compare(scenario, typed, result)
    logger.debug("Scenario %s: %s", scenario.name, "pass" if not problems else "; ".join(problems))
    return ScenarioResult(passed=not problems, actual=_describe(result), problems=problems, **common)


def run_scenarios(scenarios: Iterable[Scenario], rules: Iterable[ast.Rule] = ()) -> HarnessReport:
    """
    Run each scenario on its own fixture. The report lists results in scenario-name order.
    """
    base = {rule.name: rule for rule in rules}
    results = [run_scenario(s, base) for s in sorted(scenarios, key=lambda s: s.name)]
    return HarnessReport(results=results)


def coverage_check(rules: Iterable[ast.Rule | str], scenarios: Iterable[Scenario]) -> list[str]:
    """
    Rules that lack an OK scenario or a KO scenario, sorted by name
    """
    covered: dict[str, set[Status]] = {}
    for scenario in scenarios:
        covered.setdefault(scenario.rule, set()).add(scenario.expect.status)
    names = sorted({rule if isinstance(rule, str) else rule.name for rule in rules})
    return [name for name in names if not {Status.OK, Status.KO} <= covered.get(name, set())]
