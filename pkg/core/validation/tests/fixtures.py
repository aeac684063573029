from pathlib import Path

from ..eval import NaiveEvaluator, eval_expr, eval_pred
from ..ingest import load_dataset, load_schema
from ..kernel import Int
from ..lang import parse_expression, parse_predicate, parse_rule_file, typecheck
from ..universe import Universe

SAMPLES = Path(__file__).resolve().parents[3] / "samples" / "signalling"

# three signals, s3 outside the territory, s2 not linked
SIGNALLING = """
CARRIERS
  t_signal = {s1, s2, s3}
  t_interlocking = {ik1}
CONSTANTS
  territory : t_signal +-> t_interlocking = {s1 |-> ik1, s2 |-> ik1}
  linked : t_signal +-> t_interlocking = {s1 |-> ik1}
"""

SIGNAL_LINKED = """
RULE signal_linked
WHERE sig : dom(territory)
VERIFY sig : dom(linked) & linked(sig) = territory(sig)
MESSAGE "signal ${sig} not linked"
END
"""

VACUOUS = """
RULE nothing_selected
WHERE sig : dom(territory) - dom(territory)
VERIFY sig /= sig
MESSAGE "never"
END
"""

UNGUARDED = """
RULE unguarded
WHERE sig : dom(territory)
VERIFY linked(sig) = territory(sig)
MESSAGE "signal ${sig}"
END
"""


def universe_from(schema_text: str) -> Universe:
    return load_dataset(load_schema(schema_text))


def signalling() -> Universe:
    return universe_from(SIGNALLING)


def rules_from(text: str, universe: Universe) -> list:
    return [typecheck(rule, universe.declarations) for rule in parse_rule_file(text)]


def rule_from(text: str, universe: Universe):
    [rule] = rules_from(text, universe)
    return rule


def evaluate(text: str, universe: Universe | None = None, env=None):
    universe = universe or Universe()
    node = typecheck(parse_expression(text), universe.declarations)
    return eval_expr(node, env or {}, universe)


def decide(text: str, universe: Universe | None = None, env=None, scope=None):
    universe = universe or Universe()
    node = typecheck(parse_predicate(text), universe.declarations, scope)
    return eval_pred(node, env or {}, universe)


class OverOne(NaiveEvaluator):
    """Deliberately wrong: adds one to every sum."""

    def _binary(self, node, op, a, b):
        if op == "+" and isinstance(a, Int):
            return Int(a.value + b.value + 1)
        return super()._binary(node, op, a, b)
