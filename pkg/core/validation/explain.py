"""
Reviewer support: show how a rule is typed and, given data, why it fails.
"""

from collections.abc import Iterator

from pydantic import BaseModel, Field

from .eval import NaiveEvaluator, Trace, WDViolation
from .kernel import to_text
from .lang import ast, pretty_print, typecheck
from .lang.typecheck import Declarations
from .universe import Universe


class Explanation(BaseModel):
    rule: str
    source: str
    typing: list[str] = Field(default_factory=list)
    domains: list[str] = Field(default_factory=list)
    selection: str | None = None
    trace: list[str] = Field(default_factory=list)

    def render(self) -> str:
        sections = [self.source, "", "Typing:", *self.typing]
        if self.domains:
            sections += ["", "Binding domains:", *self.domains]
        if self.selection is not None:
            sections += ["", self.selection]
        if self.trace:
            sections += ["", "Trace:", *self.trace]
        return "\n".join(sections) + "\n"


def typed_outline(node: ast.Node, depth: int = 1) -> Iterator[str]:
    """
    One line per non-leaf node with its resolved type; identifiers and literals are folded into
    their parent's text.
    """
    kids = [child for child in ast.children(node) if not isinstance(child, ast.IntLit | ast.BoolLit)]
    ty = getattr(node, "ty", None)
    label = pretty_print(node)
    if isinstance(node, ast.Pred):
        label = f"{label}  : predicate"
    elif ty is not None:
        label = f"{label}  : {ty}"
    yield f"{'  ' * depth}{label}"
    for child in kids:
        if isinstance(child, ast.Ident):
            yield f"{'  ' * (depth + 1)}{child.name}  : {child.ty}"
        else:
            yield from typed_outline(child, depth + 1)


def _typing(rule: ast.Rule) -> list[str]:
    lines = []
    for item in rule.where:
        if isinstance(item, ast.Binding):
            lines.append(f"  {item.var} : {item.domain.ty.element}  (from {pretty_print(item.domain)})")
            lines += typed_outline(item.domain, 2)
        else:
            lines.append(f"  filter {pretty_print(item.pred)}")
            lines += typed_outline(item.pred, 2)
    lines.append("  verify")
    lines += typed_outline(rule.verify, 2)
    return lines


def _domains(rule: ast.Rule, evaluator: NaiveEvaluator) -> list[str]:
    lines = []
    bound: set[str] = set()
    for var, domain in rule.where_bindings:
        depends = sorted(ast.free_vars(domain) & bound)
        if depends:
            lines.append(f"  {var} : {pretty_print(domain)}  depends on {', '.join(depends)}")
        else:
            try:
                size = len(evaluator.eval_expr(domain, {}))
                lines.append(f"  {var} : {pretty_print(domain)}  {size} element(s)")
            except WDViolation as exc:
                lines.append(f"  {var} : {pretty_print(domain)}  undefined: {exc.error.kind}")
        bound.add(var)
    return lines


def _selected(rule: ast.Rule, evaluator: NaiveEvaluator) -> Iterator[dict]:
    def descend(depth: int, env: dict):
        if depth == len(rule.where):
            yield env
            return
        item = rule.where[depth]
        if isinstance(item, ast.Filter):
            if evaluator.eval_pred(item.pred, dict(env)):
                yield from descend(depth + 1, env)
            return
        for value in evaluator.eval_expr(item.domain, dict(env)).elements:
            yield from descend(depth + 1, {**env, item.var: value})

    return descend(0, {})


def _assignment(rule: ast.Rule, env: dict) -> str:
    return ", ".join(f"{var}={to_text(env[var])}" for var in rule.variables if var in env)


def explain_rule(rule: ast.Rule, decls: Declarations, universe: Universe | None = None) -> Explanation:
    """
    Typecheck `rule` and describe it. With a universe, also report binding domain sizes, the
    selection count and a step-by-step trace of VERIFY on the first failing tuple in canonical
    order. Raises TypeDiagnosticError when the rule does not typecheck.
    """
    typed = typecheck(rule, universe.declarations if universe is not None else decls)
    explanation = Explanation(rule=typed.name, source=pretty_print(typed), typing=_typing(typed))
    if universe is None:
        return explanation
    evaluator = NaiveEvaluator(universe)
    explanation.domains = _domains(typed, evaluator)
    selected = 0
    failing = None
    try:
        for env in _selected(typed, evaluator):
            selected += 1
            if failing is None:
                try:
                    if not evaluator.eval_pred(typed.verify, dict(env)):
                        failing = env
                except WDViolation:
                    failing = env
    except WDViolation as exc:
        error = exc.error
        explanation.selection = f"{selected} tuple(s) selected, then WHERE is undefined: {error.kind} {error.detail}"
        return explanation
    if selected == 0:
        explanation.selection = "0 tuples selected"
        return explanation
    if failing is None:
        explanation.selection = f"{selected} tuple(s) selected, VERIFY holds on every one"
        return explanation
    explanation.selection = f"{selected} tuple(s) selected, first failing tuple: {_assignment(typed, failing)}"
    trace = Trace()
    try:
        holds = NaiveEvaluator(universe, trace).eval_pred(typed.verify, dict(failing))
        verdict = f"VERIFY = {'TRUE' if holds else 'FALSE'}"
    except WDViolation as exc:
        verdict = f"VERIFY undefined: {exc.error.kind}"
    explanation.trace = [f"  {line}" for line in trace.lines()] + [f"  {verdict}"]
    return explanation
