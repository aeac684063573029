from collections.abc import Mapping

from ..kernel import Value
from ..lang import ast
from ..universe import Universe
from .naive import NaiveEvaluator, Trace
from .optimized import CompiledEvaluator, outcome
from .outcome import Ok, Outcome, WDError, WDKind, WDViolation, outcomes_agree
from .redundant import LockstepEvaluator

EVALUATORS = {
    "optimized": CompiledEvaluator,
    "naive": NaiveEvaluator,
    "redundant": LockstepEvaluator,
}


def eval_expr(e: ast.Expr, env: Mapping[str, Value], u: Universe) -> Outcome:
    return outcome(CompiledEvaluator(u).expr(e), dict(env))


def eval_pred(p: ast.Pred, env: Mapping[str, Value], u: Universe) -> Outcome:
    return outcome(CompiledEvaluator(u).pred(p), dict(env))


def eval_comprehension(c: ast.Comprehension, env: Mapping[str, Value], u: Universe) -> Outcome:
    if not isinstance(c, ast.Comprehension):
        raise TypeError(f"not a comprehension: {c!r}")
    return eval_expr(c, env, u)


def eval_naive(
    node: ast.Expr | ast.Pred, env: Mapping[str, Value], u: Universe, trace: Trace | None = None
) -> Outcome:
    evaluator = NaiveEvaluator(u, trace)
    fn = evaluator.pred(node) if isinstance(node, ast.Pred) else evaluator.expr(node)
    return outcome(fn, dict(env))


__all__ = [
    "EVALUATORS",
    "CompiledEvaluator",
    "LockstepEvaluator",
    "NaiveEvaluator",
    "Ok",
    "Outcome",
    "Trace",
    "WDError",
    "WDKind",
    "WDViolation",
    "eval_comprehension",
    "eval_expr",
    "eval_naive",
    "eval_pred",
    "outcomes_agree",
]
