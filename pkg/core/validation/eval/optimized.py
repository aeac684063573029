"""
Optimized evaluator.

A typed tree is compiled once into Python closures over a mutable environment dict; binders
write their variable in place and restore it on the way out. Closed subterms (no bound
variable below them) are computed at most once per universe and shared between rules, and
relations get a forward index for application, image and `dom` membership.

Closures raise `WDViolation`; `outcome()` turns that into a `WDError` value.
"""

import heapq
from collections.abc import Callable, Iterator
from contextlib import closing

from ..kernel import (
    EMPTY,
    FALSE,
    INT_MAX,
    INT_MIN,
    INTEGER,
    TRUE,
    Int,
    Pair,
    SetV,
    Value,
    order_key,
    to_text,
)
from ..lang import ast
from ..lang.printer import pretty_print
from ..universe import Universe
from .outcome import Ok, Outcome, WDKind, WDViolation

ExprFn = Callable[[dict], Value]
PredFn = Callable[[dict], bool]
MemberFn = Callable[[dict], Callable[[Value], bool]]

BOOL_SET = SetV((FALSE, TRUE))


def _checked(n: int, node: ast.Node) -> Int:
    if n < INT_MIN or n > INT_MAX:
        raise WDViolation(WDKind.ARITHMETIC_OVERFLOW, node.span, f"{n} does not fit in 64 bits")
    return Int(n)


def _sorted_unique(items: Iterator[Value]) -> SetV:
    """Build a set from values already produced in canonical order, possibly repeated."""
    out: list[Value] = []
    for item in items:
        if not out or out[-1] != item:
            out.append(item)
    return SetV(tuple(out))


def _union(a: SetV, b: SetV) -> SetV:
    if not a.elements:
        return b
    if not b.elements:
        return a
    return _sorted_unique(heapq.merge(a.elements, b.elements, key=order_key))


def _intersection(a: SetV, b: SetV) -> SetV:
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    members = large.members()
    return SetV(tuple(e for e in small.elements if e in members))


def _difference(a: SetV, b: SetV) -> SetV:
    if not b.elements:
        return a
    members = b.members()
    return SetV(tuple(e for e in a.elements if e not in members))


def _divide(a: int, b: int, node: ast.Node) -> Int:
    if b == 0:
        raise WDViolation(WDKind.DIVISION_BY_ZERO, node.span, f"{a} / 0")
    q = a // b
    if q < 0 and q * b != a:
        q += 1
    return _checked(q, node)


def _modulo(a: int, b: int, node: ast.Node) -> Int:
    if a < 0 or b <= 0:
        raise WDViolation(WDKind.MOD_OUT_OF_DOMAIN, node.span, f"{a} mod {b}")
    return Int(a % b)


def _interval(a: int, b: int) -> SetV:
    if a > b:
        return EMPTY
    return SetV(tuple(Int(i) for i in range(a, b + 1)))


class CompiledEvaluator:
    """
    Compiles typed expressions and predicates against one universe.
    """

    name = "optimized"

    def __init__(self, universe: Universe):
        self.universe = universe
        self._names = frozenset(universe.carriers) | frozenset(universe.constants)
        self._memo: dict[tuple, object] = {}

    # ---- entry points ----
    def expr(self, node: ast.Expr) -> ExprFn:
        if self._is_closed(node) and not isinstance(node, ast.Ident | ast.IntLit | ast.BoolLit):
            return self._memoized(node, self._expr(node))
        return self._expr(node)

    def pred(self, node: ast.Pred) -> PredFn:
        if self._is_closed(node):
            return self._memoized(node, self._pred(node))
        return self._pred(node)

    def _is_closed(self, node: ast.Node) -> bool:
        return ast.free_vars(node) <= self._names

    def _memoized(self, node: ast.Node, fn):
        key = (type(node).__name__, pretty_print(node), str(node.ty))
        memo = self._memo
        missing = object()

        def run(env):
            cached = memo.get(key, missing)
            if cached is missing:
                try:
                    cached = fn(env)
                except WDViolation as exc:
                    cached = exc
                memo[key] = cached
            if isinstance(cached, WDViolation):
                raise cached
            return cached

        return run

    # ---- expressions ----
    def _expr(self, node: ast.Expr) -> ExprFn:
        match node:
            case ast.Ident(name):
                if name in self._names:
                    value = self.universe.lookup(name)
                    return lambda env: value
                return lambda env: env[name]
            case ast.IntLit(value):
                constant = Int(value)
                return lambda env: constant
            case ast.BoolLit(value):
                constant = TRUE if value else FALSE
                return lambda env: constant
            case ast.TypeSet("BOOL"):
                return lambda env: BOOL_SET
            case ast.TypeSet() | ast.PowSet():
                return self._unbounded(node)
            case ast.SetExt(()):
                return lambda env: EMPTY
            case ast.SetExt(items):
                fns = [self.expr(item) for item in items]
                return lambda env: SetV.of([fn(env) for fn in fns])
            case ast.Comprehension(var, body):
                return self._comprehension(node, var, body)
            case ast.Binary(op, left, right):
                return self._binary(node, op, self.expr(left), self.expr(right), left)
            case ast.Neg(operand):
                fn = self.expr(operand)
                return lambda env: _checked(-fn(env).value, node)
            case ast.Call(name, arg):
                return self._call(node, name, self.expr(arg))
            case ast.Inverse(operand):
                fn = self.expr(operand)
                return lambda env: SetV.of([Pair(p.right, p.left) for p in fn(env).elements])
            case ast.Image(rel, arg):
                rel_fn, arg_fn = self.expr(rel), self.expr(arg)

                def image(env):
                    index = rel_fn(env).forward_index()
                    return SetV.of([right for left in arg_fn(env).elements for right in index.get(left, ())])

                return image
            case ast.Apply(fn_node, arg):
                return self._apply(node, self.expr(fn_node), self.expr(arg), fn_node)
        raise TypeError(f"cannot compile {node!r}")

    @staticmethod
    def _unbounded(node: ast.Expr) -> ExprFn:
        def fail(env):
            raise WDViolation(WDKind.UNBOUNDED_QUANTIFICATION, node.span, f"{pretty_print(node)} is not finite")

        return fail

    def _binary(self, node, op: str, left: ExprFn, right: ExprFn, left_node: ast.Expr) -> ExprFn:
        arithmetic = left_node.ty == INTEGER if left_node.ty is not None else None
        match op:
            case "+":
                return lambda env: _checked(left(env).value + right(env).value, node)
            case "-" if arithmetic:
                return lambda env: _checked(left(env).value - right(env).value, node)
            case "*" if arithmetic:
                return lambda env: _checked(left(env).value * right(env).value, node)
            case "-" | "*" if arithmetic is None:
                return self._dynamic(node, op, left, right)
            case "-":
                return lambda env: _difference(left(env), right(env))
            case "*":
                return lambda env: _product(left(env), right(env))
            case "/":
                return lambda env: _divide(left(env).value, right(env).value, node)
            case "mod":
                return lambda env: _modulo(left(env).value, right(env).value, node)
            case "..":
                return lambda env: _interval(left(env).value, right(env).value)
            case "|->":
                return lambda env: Pair(left(env), right(env))
            case "\\/":
                return lambda env: _union(left(env), right(env))
            case "/\\":
                return lambda env: _intersection(left(env), right(env))
            case "<|":

                def restrict(env):
                    keep = left(env).members()
                    return SetV(tuple(p for p in right(env).elements if p.left in keep))

                return restrict
            case "<<|":

                def subtract(env):
                    drop = left(env).members()
                    return SetV(tuple(p for p in right(env).elements if p.left not in drop))

                return subtract
            case "|>":

                def restrict_range(env):
                    rel = left(env)
                    keep = right(env).members()
                    return SetV(tuple(p for p in rel.elements if p.right in keep))

                return restrict_range
            case "|>>":

                def subtract_range(env):
                    rel = left(env)
                    drop = right(env).members()
                    return SetV(tuple(p for p in rel.elements if p.right not in drop))

                return subtract_range
            case ";":

                def compose(env):
                    first = left(env)
                    index = right(env).forward_index()
                    return SetV.of([Pair(p.left, c) for p in first.elements for c in index.get(p.right, ())])

                return compose
        raise TypeError(f"cannot compile operator {op}")

    @staticmethod
    def _dynamic(node, op, left, right) -> ExprFn:
        def run(env):
            a, b = left(env), right(env)
            if isinstance(a, Int):
                return _checked(a.value - b.value if op == "-" else a.value * b.value, node)
            return _difference(a, b) if op == "-" else _product(a, b)

        return run

    @staticmethod
    def _call(node, name: str, arg: ExprFn) -> ExprFn:
        match name:
            case "dom":
                return lambda env: _sorted_unique(p.left for p in arg(env).elements)
            case "ran":
                return lambda env: SetV.of([p.right for p in arg(env).elements])
            case "card":
                return lambda env: Int(len(arg(env)))
            case "min" | "max":
                last = name == "max"

                def extremum(env):
                    s = arg(env)
                    if not s.elements:
                        raise WDViolation(WDKind.MIN_MAX_OF_EMPTY_SET, node.span, f"{name} of {{}}")
                    return s.elements[-1] if last else s.elements[0]

                return extremum
        raise TypeError(f"unknown builtin {name}")

    @staticmethod
    def _apply(node, fn: ExprFn, arg: ExprFn, fn_node: ast.Expr) -> ExprFn:
        def apply(env):
            relation = fn(env)
            x = arg(env)
            rights = relation.forward_index().get(x, ())
            if len(rights) == 1:
                return rights[0]
            where = f"{pretty_print(fn_node)}({to_text(x)})"
            if not rights:
                raise WDViolation(WDKind.APPLICATION_OUTSIDE_DOMAIN, node.span, f"{where}: {to_text(x)} not in domain")
            raise WDViolation(
                WDKind.NON_FUNCTIONAL_APPLICATION, node.span, f"{where}: {len(rights)} images"
            )

        return apply

    def _comprehension(self, node, var: str, body: ast.Pred) -> ExprFn:
        parts = ast.split_bounded((var,), body, universal=False)
        if parts is None:
            return self._unbounded(node)
        [(_, domain_node)] = parts.bindings
        domain = self.expr(domain_node)
        guards = [self.pred(g) for g in parts.guards]

        def comprehend(env):
            source = domain(env)
            saved = env.get(var, _UNSET)
            kept = []
            try:
                for v in source.elements:
                    env[var] = v
                    if all(guard(env) for guard in guards):
                        kept.append(v)
            finally:
                _restore(env, var, saved)
            return SetV(tuple(kept))

        return comprehend

    # ---- membership tests ----
    def member(self, node: ast.Expr) -> MemberFn:
        """
        Compile `E` into env -> (value -> bool) without building E when a cheaper test exists
        """
        match node:
            case ast.TypeSet("INTEGER"):
                return lambda env: _always
            case ast.TypeSet("NAT"):
                return lambda env: _is_nat
            case ast.TypeSet("NAT1"):
                return lambda env: _is_nat1
            case ast.Binary("..", lo_node, hi_node):
                lo, hi = self.expr(lo_node), self.expr(hi_node)

                def in_range(env):
                    a, b = lo(env).value, hi(env).value
                    return lambda v: a <= v.value <= b

                return in_range
            case ast.Call("dom", rel_node):
                rel = self.expr(rel_node)
                return lambda env: rel(env).forward_index().__contains__
            case ast.PowSet(operand):
                inner = self.member(operand)

                def subsets(env):
                    test = inner(env)
                    return lambda v: all(test(e) for e in v.elements)

                return subsets
        fn = self.expr(node)
        return lambda env: fn(env).members().__contains__

    # ---- predicates ----
    def _pred(self, node: ast.Pred) -> PredFn:
        match node:
            case ast.Connective("&", left, right):
                lf, rf = self.pred(left), self.pred(right)
                return lambda env: lf(env) and rf(env)
            case ast.Connective("or", left, right):
                lf, rf = self.pred(left), self.pred(right)
                return lambda env: lf(env) or rf(env)
            case ast.Connective("=>", left, right):
                lf, rf = self.pred(left), self.pred(right)
                return lambda env: (not lf(env)) or rf(env)
            case ast.Connective("<=>", left, right):
                lf, rf = self.pred(left), self.pred(right)

                def equivalent(env):
                    a = lf(env)
                    return a == rf(env)

                return equivalent
            case ast.Not(operand):
                fn = self.pred(operand)
                return lambda env: not fn(env)
            case ast.Compare(op, left, right):
                return self._compare(op, left, right)
            case ast.ArrowMember(element, arrow, domain, range_):
                return self._arrow(node, element, arrow, domain, range_)
            case ast.Quantifier(kind, names, body):
                return self._quantifier(node, kind, names, body)
        raise TypeError(f"cannot compile {node!r}")

    def _compare(self, op: str, left_node: ast.Expr, right_node: ast.Expr) -> PredFn:
        left = self.expr(left_node)
        match op:
            case ":" | "/:":
                test = self.member(right_node)
                if op == ":":

                    def member(env):
                        v = left(env)
                        return test(env)(v)

                    return member

                def not_member(env):
                    v = left(env)
                    return not test(env)(v)

                return not_member
            case "<:" | "/<:":
                test = self.member(right_node)
                negate = op == "/<:"

                def subset(env):
                    s = left(env)
                    contains = test(env)
                    return all(contains(e) for e in s.elements) != negate

                return subset
        right = self.expr(right_node)
        match op:
            case "=":
                return lambda env: left(env) == right(env)
            case "/=":
                return lambda env: left(env) != right(env)
            case "<":
                return lambda env: left(env).value < right(env).value
            case "<=":
                return lambda env: left(env).value <= right(env).value
            case ">":
                return lambda env: left(env).value > right(env).value
            case ">=":
                return lambda env: left(env).value >= right(env).value
        raise TypeError(f"cannot compile relational operator {op}")

    def _arrow(self, node, element_node, arrow: str, domain_node, range_node) -> PredFn:
        element = self.expr(element_node)
        total = arrow in ast.TOTAL_ARROWS
        injective = arrow in ast.INJECTIVE_ARROWS
        surjective = arrow in ast.SURJECTIVE_ARROWS
        domain_set = self.expr(domain_node) if total else None
        domain_test = None if total else self.member(domain_node)
        range_set = self.expr(range_node) if surjective else None
        range_test = None if surjective else self.member(range_node)

        def check(env):
            f = element(env)
            if total:
                a = domain_set(env)
                in_domain = a.members().__contains__
            else:
                in_domain = domain_test(env)
            if surjective:
                b = range_set(env)
                in_range = b.members().__contains__
            else:
                in_range = range_test(env)
            for p in f.elements:
                if not (in_domain(p.left) and in_range(p.right)):
                    return False
            index = f.forward_index()
            if len(index) != len(f):
                return False
            if total and len(index) != len(a):
                return False
            if injective and len({p.right for p in f.elements}) != len(f):
                return False
            if surjective and len({p.right for p in f.elements}) != len(b):
                return False
            return True

        return check

    def _quantifier(self, node, kind: str, names, body) -> PredFn:
        universal = kind == "!"
        parts = ast.split_bounded(names, body, universal=universal)
        if parts is None:

            def fail(env):
                detail = "quantified variable without a finite domain"
                raise WDViolation(WDKind.UNBOUNDED_QUANTIFICATION, node.span, detail)

            return fail
        domains = [(var, self.expr(domain)) for var, domain in parts.bindings]
        guards = [self.pred(g) for g in parts.guards]
        consequent = self.pred(parts.consequent) if universal else None

        def holds(env) -> bool:
            with closing(_assignments(domains, env)) as tuples:
                for _ in tuples:
                    if all(guard(env) for guard in guards):
                        if universal and not consequent(env):
                            return False
                        if not universal:
                            return True
            return universal

        return holds

    # ---- rules ----
    def domains(self, bindings: list[tuple[str, ast.Expr]]) -> list[tuple[str, ExprFn]]:
        return [(var, self.expr(domain)) for var, domain in bindings]


_UNSET = object()


def _restore(env: dict, var: str, saved):
    if saved is _UNSET:
        env.pop(var, None)
    else:
        env[var] = saved


def _assignments(domains: list[tuple[str, ExprFn]], env: dict, depth: int = 0) -> Iterator[None]:
    """
    Bind the variables one after the other, leftmost outermost, yielding once per full tuple
    """
    if depth == len(domains):
        yield
        return
    var, domain = domains[depth]
    source = domain(env)
    saved = env.get(var, _UNSET)
    try:
        for v in source.elements:
            env[var] = v
            yield from _assignments(domains, env, depth + 1)
    finally:
        _restore(env, var, saved)


def _product(a: SetV, b: SetV) -> SetV:
    return SetV(tuple(Pair(x, y) for x in a.elements for y in b.elements))


def _always(v: Value) -> bool:
    return True


def _is_nat(v: Value) -> bool:
    return v.value >= 0


def _is_nat1(v: Value) -> bool:
    return v.value >= 1


def outcome(fn: Callable[[dict], Value | bool], env: dict) -> Outcome:
    try:
        result = fn(env)
    except WDViolation as exc:
        return exc.error
    if isinstance(result, bool):
        return Ok(TRUE if result else FALSE)
    return Ok(result)

