"""
Lockstep evaluation: every compiled expression or predicate runs in both evaluators and
the outcomes are compared before the primary result is handed back.
"""

import logging
from collections.abc import Callable

from ..exceptions import EvaluatorDivergence
from ..kernel import to_text
from ..lang import ast
from ..lang.printer import pretty_print
from ..universe import Universe
from .naive import NaiveEvaluator
from .optimized import CompiledEvaluator, outcome
from .outcome import Ok, WDViolation, outcomes_agree

logger = logging.getLogger(__name__)


class LockstepEvaluator:
    name = "redundant"

    def __init__(self, universe: Universe, primary=None, secondary=None):
        self.universe = universe
        self.primary = primary or CompiledEvaluator(universe)
        self.secondary = secondary or NaiveEvaluator(universe)

    def expr(self, node: ast.Expr):
        return self._pair(node, self.primary.expr(node), self.secondary.expr(node))

    def pred(self, node: ast.Pred):
        return self._pair(node, self.primary.pred(node), self.secondary.pred(node))

    def domains(self, bindings):
        return [(var, self.expr(domain)) for var, domain in bindings]

    @staticmethod
    def _pair(node: ast.Node, first: Callable, second: Callable):
        def run(env):
            a = outcome(first, env)
            b = outcome(second, dict(env))
            if not outcomes_agree(a, b):
                assignment = {name: to_text(value) for name, value in env.items()}
                logger.error("evaluators disagree on %s under %s: %s vs %s", pretty_print(node), assignment, a, b)
                raise EvaluatorDivergence("", assignment, a, b)
            if isinstance(a, Ok):
                value = a.value
                return value.value if isinstance(node, ast.Pred) else value
            raise WDViolation(a.kind, a.span, a.detail)

        return run
