"""
Typechecker for the predicate language.

Works on a deep copy of the tree and annotates every node with its `ty`. Empty sets start
with the hole type `?` and get resolved from their context; a hole surviving the whole pass
is reported as an unresolvable empty-set type.
"""

import copy
import string
from collections.abc import Mapping
from dataclasses import dataclass, field

from ..diagnostics import Diagnostic
from ..exceptions import TypeDiagnosticError
from ..kernel import (
    ANY,
    AnyType,
    BOOL,
    INTEGER,
    GivenType,
    PowerType,
    ProdType,
    Type,
    has_holes,
    unify,
)
from . import ast
from .printer import print_expr


@dataclass(frozen=True)
class Declarations:
    """
    Names visible to rules: carrier sets and typed constants
    """

    carriers: frozenset[str] = frozenset()
    constants: Mapping[str, Type] = field(default_factory=dict)

    def is_declared(self, name: str) -> bool:
        return name in self.carriers or name in self.constants


def _mismatch(expected: str, actual: Type | None) -> str:
    return f"type mismatch: expected {expected}, found {actual}"


class _Checker:
    def __init__(self, decls: Declarations):
        self.decls = decls
        self.diagnostics: list[Diagnostic] = []

    def error(self, node: ast.Node | None, message: str, code: str = "type"):
        self.diagnostics.append(Diagnostic(message, node.span if node else None, code))

    def check_given(self, t: Type, node: ast.Node) -> bool:
        match t:
            case GivenType(name) if name not in self.decls.carriers:
                self.error(node, f"unknown carrier set {name}")
                return False
            case ProdType(left, right):
                return self.check_given(left, node) and self.check_given(right, node)
            case PowerType(element):
                return self.check_given(element, node)
        return True

    # ---- expressions ----
    def expr(self, node: ast.Expr, scope: dict[str, Type], expected: Type | None = None, *, unbounded=False):
        t = self._infer(node, scope, unbounded)
        if t is None:
            return None
        if expected is not None:
            merged = unify(t, expected)
            if merged is None:
                self.error(node, _mismatch(str(expected), t))
                return None
            if merged != t:
                self.refine(node, merged)
            t = merged
        node.ty = t
        return t

    def refine(self, node: ast.Expr, t: Type):
        """Push a more specific type into a node whose type still has holes."""
        merged = unify(node.ty, t) if node.ty is not None else t
        if merged is None:
            return
        node.ty = merged
        match node:
            case ast.SetExt(items) if isinstance(merged, PowerType):
                for item in items:
                    self.refine(item, merged.element)
            case ast.Binary("|->", left, right) if isinstance(merged, ProdType):
                self.refine(left, merged.left)
                self.refine(right, merged.right)
            case ast.Binary("\\/" | "/\\" | "-", left, right) if isinstance(merged, PowerType):
                self.refine(left, merged)
                self.refine(right, merged)
            case ast.Binary("*", left, right) if isinstance(merged, PowerType) and isinstance(
                merged.element, ProdType
            ):
                self.refine(left, PowerType(merged.element.left))
                self.refine(right, PowerType(merged.element.right))

    def _infer(self, node: ast.Expr, scope: dict[str, Type], unbounded: bool) -> Type | None:
        match node:
            case ast.Ident(name):
                if name in scope:
                    return scope[name]
                if name in self.decls.constants:
                    return self.decls.constants[name]
                if name in self.decls.carriers:
                    return PowerType(GivenType(name))
                self.error(node, f"unbound identifier {name}", "unbound")
                return None
            case ast.IntLit():
                return INTEGER
            case ast.BoolLit():
                return BOOL
            case ast.TypeSet(name):
                if name == "BOOL":
                    return PowerType(BOOL)
                if not unbounded:
                    self.error(node, f"unbounded set {name} cannot be evaluated here", "unbounded")
                    return None
                return PowerType(INTEGER)
            case ast.PowSet():
                self.error(node, "POW(...) is only allowed as the right operand of `:` or `<:`", "unbounded")
                return None
            case ast.SetExt(items):
                element: Type = ANY
                types = []
                for item in items:
                    t = self.expr(item, scope)
                    if t is None:
                        return None
                    types.append(t)
                    merged = unify(element, t)
                    if merged is None:
                        self.error(node, f"type mismatch: set elements of types {element} and {t}")
                        return None
                    element = merged
                for item, t in zip(items, types, strict=True):
                    if t != element:
                        self.refine(item, element)
                return PowerType(element)
            case ast.Comprehension(var, body):
                return self._comprehension(node, var, body, scope)
            case ast.Binary(op, left, right):
                return self._binary(node, op, left, right, scope)
            case ast.Neg(operand):
                return INTEGER if self.expr(operand, scope, INTEGER) is not None else None
            case ast.Call(fn, arg):
                return self._call(node, fn, arg, scope)
            case ast.Inverse(operand):
                rel = self._relation(operand, scope)
                return None if rel is None else PowerType(ProdType(rel.right, rel.left))
            case ast.Image(rel_node, arg):
                rel = self._relation(rel_node, scope)
                if rel is None:
                    return None
                if self.expr(arg, scope, PowerType(rel.left)) is None:
                    return None
                return PowerType(rel.right)
            case ast.Apply(fn, arg):
                rel = self._relation(fn, scope)
                if rel is None:
                    return None
                if self.expr(arg, scope, rel.left) is None:
                    return None
                return rel.right
        self.error(node, f"not an expression: {type(node).__name__}")
        return None

    def _set(self, node: ast.Expr, scope, expected: Type | None = None, *, unbounded=False) -> Type | None:
        t = self.expr(node, scope, expected, unbounded=unbounded)
        if t is None:
            return None
        if not isinstance(t, PowerType):
            self.error(node, _mismatch("a set", t))
            return None
        return t

    def _relation(self, node: ast.Expr, scope) -> ProdType | None:
        t = self._set(node, scope)
        if t is None:
            return None
        if isinstance(t.element, AnyType):
            self.refine(node, PowerType(ProdType(ANY, ANY)))
            return ProdType(ANY, ANY)
        if not isinstance(t.element, ProdType):
            self.error(node, _mismatch("a relation", t))
            return None
        return t.element

    def _binary(self, node, op, left, right, scope) -> Type | None:
        match op:
            case "+" | "/" | "mod":
                ok = self.expr(left, scope, INTEGER) is not None
                ok = self.expr(right, scope, INTEGER) is not None and ok
                return INTEGER if ok else None
            case "..":
                ok = self.expr(left, scope, INTEGER) is not None
                ok = self.expr(right, scope, INTEGER) is not None and ok
                return PowerType(INTEGER) if ok else None
            case "-" | "*":
                lt = self.expr(left, scope)
                if lt is None:
                    return None
                if lt == INTEGER:
                    return INTEGER if self.expr(right, scope, INTEGER) is not None else None
                if not isinstance(lt, PowerType):
                    self.error(left, _mismatch("INTEGER or a set", lt))
                    return None
                if op == "-":
                    return self._same_sets(left, right, lt, scope)
                rt = self._set(right, scope)
                return None if rt is None else PowerType(ProdType(lt.element, rt.element))
            case "\\/" | "/\\":
                lt = self._set(left, scope)
                return None if lt is None else self._same_sets(left, right, lt, scope)
            case "|->":
                lt = self.expr(left, scope)
                rt = self.expr(right, scope)
                return None if lt is None or rt is None else ProdType(lt, rt)
            case "<|" | "<<|":
                rel = self._relation(right, scope)
                if rel is None:
                    return None
                if self._set(left, scope, PowerType(rel.left)) is None:
                    return None
                return right.ty
            case "|>" | "|>>":
                rel = self._relation(left, scope)
                if rel is None:
                    return None
                if self._set(right, scope, PowerType(rel.right)) is None:
                    return None
                return left.ty
            case ";":
                first = self._relation(left, scope)
                second = self._relation(right, scope)
                if first is None or second is None:
                    return None
                middle = unify(first.right, second.left)
                if middle is None:
                    self.error(node, f"type mismatch: cannot compose {left.ty} with {right.ty}")
                    return None
                self.refine(left, PowerType(ProdType(first.left, middle)))
                self.refine(right, PowerType(ProdType(middle, second.right)))
                return PowerType(ProdType(first.left, second.right))
        self.error(node, f"unknown operator `{op}`", "syntax")
        return None

    def _same_sets(self, left, right, lt: PowerType, scope) -> Type | None:
        rt = self._set(right, scope, lt)
        if rt is None:
            return None
        merged = unify(lt, rt)
        self.refine(left, merged)
        self.refine(right, merged)
        return merged

    def _call(self, node, fn, arg, scope) -> Type | None:
        match fn:
            case "dom" | "ran":
                rel = self._relation(arg, scope)
                if rel is None:
                    return None
                return PowerType(rel.left if fn == "dom" else rel.right)
            case "card":
                return INTEGER if self._set(arg, scope) is not None else None
            case "min" | "max":
                return INTEGER if self._set(arg, scope, PowerType(INTEGER)) is not None else None
        self.error(node, f"unknown builtin {fn}")
        return None

    def _comprehension(self, node, var, body, scope) -> Type | None:
        parts = ast.split_bounded((var,), body, universal=False)
        if parts is None:
            self.error(node, f"comprehension must start with `{var} : E`", "unbounded")
            return None
        inner = self.bind(parts, scope, node)
        if inner is None:
            return None
        for guard in parts.guards:
            self.pred(guard, inner)
        self._annotate_bindings(body, parts, inner)
        return PowerType(inner[var])

    # ---- binders ----
    def bind(self, parts: ast.Bounded, scope: dict[str, Type], node: ast.Node) -> dict[str, Type] | None:
        inner = dict(scope)
        names = [name for name, _ in parts.bindings]
        for index, (name, domain) in enumerate(parts.bindings):
            if self.decls.is_declared(name):
                self.error(node, f"variable {name} shadows a declared constant or carrier", "shadow")
                return None
            clash = ast.free_vars(domain) & set(names[index:])
            if clash:
                self.error(domain, f"domain of {name} mentions {', '.join(sorted(clash))}", "unbounded")
                return None
            if isinstance(domain, ast.TypeSet) and domain.unbounded:
                self.error(domain, f"quantified variable {name} without enumerable domain", "unbounded")
                return None
            t = self._set(domain, inner)
            if t is None:
                return None
            inner[name] = t.element
        return inner

    def _annotate_bindings(self, body: ast.Pred, parts: ast.Bounded, inner: dict[str, Type]):
        # The `x : E` conjuncts were typed through bind(); give their nodes a type too.
        for conj in ast.conjuncts(body.left if isinstance(body, ast.Connective) and body.op == "=>" else body):
            if isinstance(conj, ast.Compare) and conj.op == ":" and conj.right.ty is not None:
                if isinstance(conj.left, ast.Ident) and conj.left.name in inner:
                    conj.left.ty = inner[conj.left.name]
                    conj.ty = BOOL
        for node in ast.walk(body):
            if isinstance(node, ast.Connective) and node.ty is None:
                node.ty = BOOL

    # ---- predicates ----
    def pred(self, node: ast.Pred, scope: dict[str, Type]):
        node.ty = BOOL
        match node:
            case ast.Connective(_, left, right):
                self.pred(left, scope)
                self.pred(right, scope)
            case ast.Not(operand):
                self.pred(operand, scope)
            case ast.Compare(op, left, right):
                self._compare(node, op, left, right, scope)
            case ast.ArrowMember(element, arrow, domain, range_):
                dt = self._set(domain, scope, unbounded=arrow == "+->")
                rt = self._set(range_, scope, unbounded=arrow not in ast.SURJECTIVE_ARROWS)
                if dt is not None and rt is not None:
                    self._set(element, scope, PowerType(ProdType(dt.element, rt.element)))
            case ast.Quantifier(kind, names, body):
                parts = ast.split_bounded(names, body, universal=kind == "!")
                if parts is None:
                    shape = "(x : E & ... => P)" if kind == "!" else "(x : E & P)"
                    self.error(node, f"quantifier body must have the shape {kind}(x).{shape}", "unbounded")
                    return
                inner = self.bind(parts, scope, node)
                if inner is None:
                    return
                for guard in parts.guards:
                    self.pred(guard, inner)
                if parts.consequent is not None:
                    self.pred(parts.consequent, inner)
                self._annotate_bindings(body, parts, inner)
            case _:
                self.error(node, f"not a predicate: {type(node).__name__}")

    def _compare(self, node, op, left, right, scope):
        match op:
            case "=" | "/=":
                lt = self.expr(left, scope)
                if lt is None:
                    return
                rt = self.expr(right, scope, lt)
                if rt is not None:
                    self.refine(left, rt)
            case ":" | "/:":
                if isinstance(right, ast.PowSet):
                    inner = self._set(right.operand, scope, unbounded=True)
                    if inner is None:
                        return
                    right.ty = PowerType(inner)
                    if self.expr(left, scope, inner) is not None:
                        self.refine(right.operand, left.ty)
                        right.ty = PowerType(right.operand.ty)
                    return
                lt = self.expr(left, scope)
                if lt is None:
                    return
                rt = self._set(right, scope, PowerType(lt), unbounded=True)
                if rt is not None:
                    self.refine(left, rt.element)
            case "<:" | "/<:":
                if isinstance(right, ast.PowSet):
                    inner = self._set(right.operand, scope, unbounded=True)
                    if inner is None:
                        return
                    right.ty = PowerType(inner)
                    self._set(left, scope, PowerType(inner))
                    return
                lt = self._set(left, scope)
                if lt is None:
                    return
                rt = self._set(right, scope, lt, unbounded=True)
                if rt is not None:
                    self.refine(left, rt)
            case "<" | "<=" | ">" | ">=":
                self.expr(left, scope, INTEGER)
                self.expr(right, scope, INTEGER)
            case _:
                self.error(node, f"unknown relational operator `{op}`", "syntax")

    # ---- rules ----
    def rule(self, rule: ast.Rule):
        rule.ty = BOOL
        scope: dict[str, Type] = {}
        seen: set[str] = set()
        for item in rule.where:
            item.ty = BOOL
            if isinstance(item, ast.Binding):
                if item.var in seen:
                    self.error(item, f"variable {item.var} bound twice", "shadow")
                    continue
                seen.add(item.var)
                if self.decls.is_declared(item.var):
                    self.error(item, f"variable {item.var} shadows a declared constant or carrier", "shadow")
                    continue
                if isinstance(item.domain, ast.TypeSet) and item.domain.unbounded:
                    self.error(item, f"variable {item.var} without enumerable domain", "unbounded")
                    continue
                t = self._set(item.domain, scope)
                if t is not None:
                    scope[item.var] = t.element
            else:
                self.pred(item.pred, scope)
        if not seen:
            self.error(rule, f"rule {rule.name} has no WHERE binding", "binding")
        self.pred(rule.verify, scope)
        template = string.Template(rule.message)
        if not template.is_valid():
            self.error(rule, "malformed placeholder in MESSAGE", "message")
        else:
            for placeholder in template.get_identifiers():
                if placeholder not in seen:
                    self.error(rule, f"MESSAGE placeholder ${{{placeholder}}} names no WHERE variable", "message")

    # ---- final pass ----
    def check_resolved(self, root: ast.Node):
        holey = []
        for node in ast.walk(root):
            if node.ty is None:
                continue
            if has_holes(node.ty):
                holey.append(node)
        if not holey:
            return
        empties = [n for n in holey if isinstance(n, ast.SetExt) and not n.items]
        for node in empties or holey[:1]:
            text = print_expr(node) if isinstance(node, ast.Expr) else type(node).__name__
            self.error(node, f"cannot resolve the type of {text} ({node.ty})", "empty-set")


def typecheck(node, decls: Declarations, scope: Mapping[str, Type] | None = None):
    """
    Return a typed copy of a Rule, Pred or Expr. Raises TypeDiagnosticError with every problem
    found, in source order.
    """
    typed = copy.deepcopy(node)
    checker = _Checker(decls)
    scope = dict(scope or {})
    for name, t in scope.items():
        checker.check_given(t, typed)
    match typed:
        case ast.Rule():
            checker.rule(typed)
        case ast.Pred():
            checker.pred(typed, scope)
        case ast.Expr():
            checker.expr(typed, scope)
        case _:
            raise TypeError(f"cannot typecheck {node!r}")
    if not checker.diagnostics:
        checker.check_resolved(typed)
    if checker.diagnostics:
        raise TypeDiagnosticError(checker.diagnostics)
    return typed


def _expected_type(node: ast.Node) -> Type | None:
    # None means the node type is not determined by its children
    match node:
        case ast.Pred() | ast.Binding() | ast.Filter() | ast.Rule() | ast.BoolLit():
            return BOOL
        case ast.IntLit() | ast.Neg():
            return INTEGER
        case ast.SetExt(items) if items:
            return PowerType(items[0].ty)
        case ast.Binary("+" | "/" | "mod", _, _):
            return INTEGER
        case ast.Binary("..", _, _):
            return PowerType(INTEGER)
        case ast.Binary("-" | "*", left, _) if left.ty == INTEGER:
            return INTEGER
        case ast.Binary("*", left, right):
            return PowerType(ProdType(left.ty.element, right.ty.element))
        case ast.Binary("-" | "\\/" | "/\\" | "|>" | "|>>", left, _):
            return left.ty
        case ast.Binary("<|" | "<<|", _, right):
            return right.ty
        case ast.Binary("|->", left, right):
            return ProdType(left.ty, right.ty)
        case ast.Binary(";", left, right):
            return PowerType(ProdType(left.ty.element.left, right.ty.element.right))
        case ast.Call("dom", arg):
            return PowerType(arg.ty.element.left)
        case ast.Call("ran", arg):
            return PowerType(arg.ty.element.right)
        case ast.Call():
            return INTEGER
        case ast.Inverse(operand):
            return PowerType(ProdType(operand.ty.element.right, operand.ty.element.left))
        case ast.Image(rel, _):
            return PowerType(rel.ty.element.right)
        case ast.Apply(fn, _):
            return fn.ty.element.right
        case ast.Comprehension(_, body):
            return PowerType(ast.conjuncts(body)[0].right.ty.element)
    return None


def consistency_errors(root: ast.Node) -> list[str]:
    """
    Post-pass validation of a typed tree: every node typed, every type agreeing with its children
    """
    problems = []
    for node in ast.walk(root):
        if node.ty is None:
            problems.append(f"untyped {type(node).__name__} at {node.span}")
            continue
        try:
            expected = _expected_type(node)
        except AttributeError:
            problems.append(f"ill-formed children types under {type(node).__name__} at {node.span}")
            continue
        if expected is not None and expected != node.ty:
            problems.append(f"{type(node).__name__} at {node.span} typed {node.ty}, children give {expected}")
    return problems
