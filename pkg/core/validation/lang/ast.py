"""
Abstract syntax of the predicate language and of rules.

Nodes compare structurally; spans and resolved types are ignored by equality so that a
parsed tree, a pretty-printed-and-reparsed tree and a typechecked copy all compare equal.
"""

from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import StrEnum

from ..diagnostics import SourceSpan
from ..kernel import Type


@dataclass(eq=True)
class Node:
    span: SourceSpan | None = field(default=None, compare=False, repr=False, kw_only=True)
    ty: Type | None = field(default=None, compare=False, repr=False, kw_only=True)

    __hash__ = None


class Expr(Node):
    pass


class Pred(Node):
    pass


# ---------------------------------------------------------------------------- #
# ------------------------------ Expressions --------------------------------- #
# ---------------------------------------------------------------------------- #
@dataclass(eq=True)
class Ident(Expr):
    name: str


@dataclass(eq=True)
class IntLit(Expr):
    value: int


@dataclass(eq=True)
class BoolLit(Expr):
    value: bool


@dataclass(eq=True)
class SetExt(Expr):
    """Set in extension; no items is the empty set."""

    items: tuple[Expr, ...]


@dataclass(eq=True)
class TypeSet(Expr):
    """INTEGER, NAT, NAT1 (unbounded) or BOOL."""

    name: str

    @property
    def unbounded(self) -> bool:
        return self.name != "BOOL"


@dataclass(eq=True)
class PowSet(Expr):
    """POW(E); only legal as the right operand of a membership or inclusion."""

    operand: Expr


@dataclass(eq=True)
class Comprehension(Expr):
    var: str
    body: "Pred"


@dataclass(eq=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(eq=True)
class Neg(Expr):
    operand: Expr


@dataclass(eq=True)
class Call(Expr):
    """dom, ran, card, min, max."""

    fn: str
    arg: Expr


@dataclass(eq=True)
class Inverse(Expr):
    operand: Expr


@dataclass(eq=True)
class Image(Expr):
    rel: Expr
    arg: Expr


@dataclass(eq=True)
class Apply(Expr):
    fn: Expr
    arg: Expr


ARITHMETIC_OPS = frozenset({"+", "-", "*", "/", "mod"})
SET_OPS = frozenset({"\\/", "/\\"})
RESTRICTION_OPS = frozenset({"<|", "<<|", "|>", "|>>"})
BUILTINS = frozenset({"dom", "ran", "card", "min", "max"})


# ---------------------------------------------------------------------------- #
# ------------------------------- Predicates --------------------------------- #
# ---------------------------------------------------------------------------- #
@dataclass(eq=True)
class Connective(Pred):
    op: str
    left: Pred
    right: Pred


@dataclass(eq=True)
class Not(Pred):
    operand: Pred


@dataclass(eq=True)
class Compare(Pred):
    op: str
    left: Expr
    right: Expr


@dataclass(eq=True)
class ArrowMember(Pred):
    element: Expr
    arrow: str
    domain: Expr
    range: Expr


@dataclass(eq=True)
class Quantifier(Pred):
    kind: str
    vars: tuple[str, ...]
    body: Pred


COMPARE_OPS = frozenset({"=", "/=", ":", "/:", "<:", "/<:", "<", "<=", ">", ">="})
CONNECTIVES = frozenset({"&", "or", "=>", "<=>"})
ARROWS = {
    "+->": "partial function",
    "-->": "total function",
    ">->": "total injection",
    "-->>": "total surjection",
    ">->>": "total bijection",
}
TOTAL_ARROWS = frozenset({"-->", ">->", "-->>", ">->>"})
INJECTIVE_ARROWS = frozenset({">->", ">->>"})
SURJECTIVE_ARROWS = frozenset({"-->>", ">->>"})


# ---------------------------------------------------------------------------- #
# --------------------------------- Rules ------------------------------------ #
# ---------------------------------------------------------------------------- #
class Severity(StrEnum):
    ERROR = "ERROR"
    WARNING = "WARNING"


@dataclass(eq=True)
class Binding(Node):
    var: str
    domain: Expr


@dataclass(eq=True)
class Filter(Node):
    pred: Pred


@dataclass(eq=True)
class Rule(Node):
    name: str
    where: tuple[Binding | Filter, ...]
    verify: Pred
    message: str
    doc: str = ""
    error_class: str = ""
    severity: Severity = Severity.ERROR

    def __post_init__(self):
        if not self.error_class:
            self.error_class = self.name

    @property
    def where_bindings(self) -> list[tuple[str, Expr]]:
        return [(item.var, item.domain) for item in self.where if isinstance(item, Binding)]

    @property
    def where_filters(self) -> list[Pred]:
        return [item.pred for item in self.where if isinstance(item, Filter)]

    @property
    def variables(self) -> list[str]:
        return [item.var for item in self.where if isinstance(item, Binding)]


# ---------------------------------------------------------------------------- #
# -------------------------------- Helpers ----------------------------------- #
# ---------------------------------------------------------------------------- #
def children(node: Node) -> Iterator[Node]:
    match node:
        case SetExt(items):
            yield from items
        case PowSet(operand) | Neg(operand) | Inverse(operand) | Not(operand):
            yield operand
        case Comprehension(_, body) | Quantifier(_, _, body):
            yield body
        case Binary(_, left, right) | Connective(_, left, right) | Compare(_, left, right):
            yield left
            yield right
        case Call(_, arg):
            yield arg
        case Image(a, b) | Apply(a, b):
            yield a
            yield b
        case ArrowMember(element, _, domain, range_):
            yield element
            yield domain
            yield range_
        case Binding(_, domain):
            yield domain
        case Filter(pred):
            yield pred
        case Rule():
            yield from node.where
            yield node.verify


def walk(node: Node) -> Iterator[Node]:
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(list(children(current))))


def free_vars(node: Node) -> set[str]:
    """Identifiers not bound inside node (constants included)."""
    match node:
        case Ident(name):
            return {name}
        case Comprehension(var, body):
            return free_vars(body) - {var}
        case Quantifier(_, names, body):
            return free_vars(body) - set(names)
    result: set[str] = set()
    for child in children(node):
        result |= free_vars(child)
    return result


def conjuncts(pred: Pred) -> list[Pred]:
    if isinstance(pred, Connective) and pred.op == "&":
        return conjuncts(pred.left) + conjuncts(pred.right)
    return [pred]


@dataclass
class Bounded:
    """
    A quantifier or comprehension body split into its bindings `x : E`, the remaining guard
    conjuncts and, for `!`, the consequent
    """

    bindings: list[tuple[str, Expr]]
    guards: list[Pred]
    consequent: Pred | None


def split_bounded(names: tuple[str, ...], body: Pred, universal: bool) -> Bounded | None:
    """
    None when the body does not introduce each name by a leading `x : E` conjunct.
    """
    if universal:
        if not (isinstance(body, Connective) and body.op == "=>"):
            return None
        parts, consequent = conjuncts(body.left), body.right
    else:
        parts, consequent = conjuncts(body), None
    if len(parts) < len(names):
        return None
    bindings = []
    for name, part in zip(names, parts, strict=False):
        if not (isinstance(part, Compare) and part.op == ":" and part.left == Ident(name)):
            return None
        bindings.append((name, part.right))
    return Bounded(bindings, parts[len(names) :], consequent)
