"""
Rule execution and campaign aggregation.

A rule is run by enumerating its WHERE bindings in canonical order, leftmost binding
outermost, applying each filter where it stands and evaluating VERIFY on every selected
tuple. Every counterexample is kept; the first well-definedness error turns the rule to ERROR.
"""

import logging
import string
import time
from collections.abc import Iterable
from concurrent.futures import ProcessPoolExecutor
from enum import StrEnum

from pydantic import BaseModel, Field, model_validator

from . import __version__
from .eval import CompiledEvaluator, LockstepEvaluator, WDViolation
from .exceptions import CampaignError, EvaluatorDivergence
from .ingest import UniverseDigest, universe_digest
from .kernel import to_text
from .lang.ast import Binding, Rule
from .universe import Universe

logger = logging.getLogger(__name__)


class Status(StrEnum):
    OK = "OK"
    KO = "KO"
    ERROR = "ERROR"


class Counterexample(BaseModel):
    assignment: dict[str, str]
    message: str
    rule: str
    span: str | None = None


class ErrorDetail(BaseModel):
    kind: str
    assignment: dict[str, str]
    span: str | None = None
    detail: str = ""


class RuleResult(BaseModel):
    name: str
    status: Status
    selected: int = 0
    counterexamples: list[Counterexample] = Field(default_factory=list)
    timing_ms: float = 0.0
    severity: str = "ERROR"
    error_class: str = ""
    source: str | None = None
    error: ErrorDetail | None = None

    @model_validator(mode="after")
    def status_matches_findings(self):
        if self.status is Status.ERROR and self.error is None:
            raise ValueError("an ERROR result carries its error detail")
        if self.status is Status.OK and self.counterexamples:
            raise ValueError("an OK result has no counterexample")
        if self.status is Status.KO and not self.counterexamples:
            raise ValueError("a KO result has at least one counterexample")
        return self


class Totals(BaseModel):
    ok: int = 0
    ko: int = 0
    error: int = 0
    counterexamples: int = 0

    @classmethod
    def of(cls, results: Iterable[RuleResult]) -> "Totals":
        totals = cls()
        for result in results:
            match result.status:
                case Status.OK:
                    totals.ok += 1
                case Status.KO:
                    totals.ko += 1
                case Status.ERROR:
                    totals.error += 1
            totals.counterexamples += len(result.counterexamples)
        return totals


class Report(BaseModel):
    version: str = __version__
    universe: UniverseDigest
    rules: list[RuleResult] = Field(default_factory=list)
    totals: Totals = Field(default_factory=Totals)
    wall_ms: float = 0.0
    skipped: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def totals_match_results(self):
        if self.totals != Totals.of(self.rules):
            raise ValueError("totals disagree with the rule results")
        return self


class CampaignOptions(BaseModel):
    jobs: int = Field(default=1, ge=1)
    redundant: bool = False
    fail_fast: bool = False


# ---------------------------------------------------------------------------- #
# ------------------------------- Single rule -------------------------------- #
# ---------------------------------------------------------------------------- #
def render_message(rule: Rule, assignment: dict[str, str]) -> str:
    return string.Template(rule.message).safe_substitute(assignment)


def run_rule(rule: Rule, u: Universe, evaluator=None) -> RuleResult:
    """
    Run one typechecked rule. `evaluator` defaults to the optimized one; pass a shared instance
    to reuse its caches across rules.
    """
    evaluator = evaluator or CompiledEvaluator(u)
    started = time.perf_counter()
    steps = []
    for item in rule.where:
        if isinstance(item, Binding):
            steps.append((item.var, evaluator.expr(item.domain)))
        else:
            steps.append((None, evaluator.pred(item.pred)))
    verify = evaluator.pred(rule.verify)
    variables = rule.variables
    verify_span = str(rule.verify.span) if rule.verify.span else None
    env: dict = {}
    selected = 0
    found: list[Counterexample] = []

    def assignment() -> dict[str, str]:
        return {var: to_text(env[var]) for var in variables if var in env}

    def descend(depth: int):
        nonlocal selected
        if depth == len(steps):
            selected += 1
            if not verify(env):
                values = assignment()
                found.append(
                    Counterexample(
                        assignment=values,
                        message=render_message(rule, values),
                        rule=rule.name,
                        span=verify_span,
                    )
                )
            return
        var, fn = steps[depth]
        if var is None:
            if fn(env):
                descend(depth + 1)
            return
        # on WDViolation the bindings stay in env so the error names the failing tuple
        for value in fn(env).elements:
            env[var] = value
            descend(depth + 1)
        env.pop(var, None)

    common = {
        "name": rule.name,
        "severity": str(rule.severity),
        "error_class": rule.error_class,
        "source": str(rule.span) if rule.span else None,
    }
    try:
        descend(0)
    except WDViolation as exc:
        error = exc.error
        detail = ErrorDetail(
            kind=str(error.kind),
            assignment=assignment(),
            span=str(error.span) if error.span else None,
            detail=error.detail,
        )
        elapsed = (time.perf_counter() - started) * 1000
        logger.debug("Rule %s: ERROR %s at %s", rule.name, error.kind, detail.assignment)
        return RuleResult(status=Status.ERROR, selected=selected, timing_ms=elapsed, error=detail, **common)
    except EvaluatorDivergence as exc:
        raise EvaluatorDivergence(rule.name, exc.assignment, exc.primary, exc.secondary) from None
    elapsed = (time.perf_counter() - started) * 1000
    status = Status.KO if found else Status.OK
    logger.debug(
        "Rule %s: %s, %d selected, %d counterexample(s) in %.1f ms", rule.name, status, selected, len(found), elapsed
    )
    return RuleResult(status=status, selected=selected, counterexamples=found, timing_ms=elapsed, **common)


def run_redundant(rule: Rule, u: Universe, evaluator: LockstepEvaluator | None = None) -> RuleResult:
    """
    Same result as run_rule, every evaluation being computed by both evaluators and compared.
    Raises EvaluatorDivergence on the first disagreement.
    """
    return run_rule(rule, u, evaluator or LockstepEvaluator(u))


# ---------------------------------------------------------------------------- #
# -------------------------------- Campaigns --------------------------------- #
# ---------------------------------------------------------------------------- #
_worker_universe: Universe | None = None
_worker_evaluator = None


def _init_worker(universe: Universe, redundant: bool):
    global _worker_universe, _worker_evaluator
    _worker_universe = universe
    _worker_evaluator = LockstepEvaluator(universe) if redundant else CompiledEvaluator(universe)


def _run_in_worker(rule: Rule) -> RuleResult:
    return run_rule(rule, _worker_universe, _worker_evaluator)


def check_unique_names(rules: Iterable[Rule]):
    seen: dict[str, Rule] = {}
    for rule in rules:
        if rule.name in seen:
            first = seen[rule.name].span
            raise CampaignError(f"rule {rule.name} defined twice ({first} and {rule.span})")
        seen[rule.name] = rule


def run_campaign(rules: list[Rule], u: Universe, config: CampaignOptions | None = None) -> Report:
    """
    Run every rule against the universe. Results are ordered by rule name whatever the
    parallelism; with fail_fast no new rule is scheduled once a rule is not OK.
    """
    config = config or CampaignOptions()
    check_unique_names(rules)
    ordered = sorted(rules, key=lambda r: r.name)
    started = time.perf_counter()
    if config.jobs == 1 or len(ordered) <= 1:
        results, skipped = _run_sequential(ordered, u, config)
    else:
        results, skipped = _run_parallel(ordered, u, config)
    results.sort(key=lambda r: r.name)
    wall_ms = (time.perf_counter() - started) * 1000
    report = Report(
        universe=universe_digest(u),
        rules=results,
        totals=Totals.of(results),
        wall_ms=wall_ms,
        skipped=skipped,
    )
    logger.info(
        "Campaign finished: %d OK, %d KO, %d ERROR, %d counterexample(s) in %.0f ms",
        report.totals.ok,
        report.totals.ko,
        report.totals.error,
        report.totals.counterexamples,
        wall_ms,
    )
    return report


def _run_sequential(rules: list[Rule], u: Universe, config: CampaignOptions):
    evaluator = LockstepEvaluator(u) if config.redundant else CompiledEvaluator(u)
    results = []
    for index, rule in enumerate(rules):
        result = run_rule(rule, u, evaluator)
        results.append(result)
        if config.fail_fast and result.status is not Status.OK:
            return results, [r.name for r in rules[index + 1 :]]
    return results, []


def _run_parallel(rules: list[Rule], u: Universe, config: CampaignOptions):
    results: list[RuleResult] = []
    with ProcessPoolExecutor(
        max_workers=config.jobs, initializer=_init_worker, initargs=(u, config.redundant)
    ) as pool:
        if not config.fail_fast:
            return list(pool.map(_run_in_worker, rules)), []
        for start in range(0, len(rules), config.jobs):
            batch = rules[start : start + config.jobs]
            results.extend(pool.map(_run_in_worker, batch))
            if any(r.status is not Status.OK for r in results):
                return results, [r.name for r in rules[start + len(batch) :]]
    return results, []


def exit_status(report: Report) -> int:
    """0 when every rule is OK, 1 when some rule is KO, 2 when some rule is in ERROR."""
    if report.totals.error:
        return 2
    if report.totals.ko:
        return 1
    return 0
