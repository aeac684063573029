from ..diagnostics import SourceSpan
from .ast import Binding, Expr, Filter, Pred, Rule, Severity
from .parser import parse_expression, parse_predicate, parse_rule_file
from .printer import pretty_print
from .typecheck import Declarations, consistency_errors, typecheck

__all__ = [
    "Binding",
    "Declarations",
    "Expr",
    "Filter",
    "Pred",
    "Rule",
    "Severity",
    "SourceSpan",
    "consistency_errors",
    "parse_expression",
    "parse_predicate",
    "parse_rule_file",
    "pretty_print",
    "typecheck",
]
