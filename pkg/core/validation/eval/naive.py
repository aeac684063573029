"""
Reference evaluator: a direct recursive walk of the typed tree.

Nothing is cached and nothing is indexed. Every binder copies the environment, sets are
searched by binary search over their canonical order or scanned, and every construct is
computed straight from its definition. It is the oracle for the optimized evaluator and the
second instance of redundant campaigns; an optional `Trace` records each step for `explain`.
"""

from bisect import bisect_left
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

from ..kernel import EMPTY, FALSE, INT_MAX, INT_MIN, TRUE, Int, Pair, SetV, Value, order_key, to_text
from ..lang import ast
from ..lang.printer import pretty_print
from ..universe import Universe
from .outcome import WDKind, WDViolation


@dataclass
class TraceStep:
    depth: int
    text: str
    result: str


@dataclass
class Trace:
    steps: list[TraceStep] = field(default_factory=list)
    depth: int = 0

    def record(self, text: str, result: str, depth: int | None = None):
        self.steps.append(TraceStep(self.depth if depth is None else depth, text, result))

    def lines(self) -> list[str]:
        return [f"{'  ' * step.depth}{step.text}  =  {step.result}" for step in self.steps]


def _int(n: int, node: ast.Node) -> Int:
    if not INT_MIN <= n <= INT_MAX:
        raise WDViolation(WDKind.ARITHMETIC_OVERFLOW, node.span, f"{n} does not fit in 64 bits")
    return Int(n)


def _find(s: SetV, v: Value) -> bool:
    key = order_key(v)
    i = bisect_left(s.elements, key, key=order_key)
    return i < len(s.elements) and order_key(s.elements[i]) == key


def _images(rel: SetV, x: Value) -> list[Value]:
    key = order_key(x)
    pairs = rel.elements
    i = bisect_left(pairs, key, key=lambda p: order_key(p.left))
    found = []
    while i < len(pairs) and order_key(pairs[i].left) == key:
        found.append(pairs[i].right)
        i += 1
    return found


def _distinct_sorted(values: list[Value]) -> list[Value]:
    ordered = sorted(values, key=order_key)
    return [v for i, v in enumerate(ordered) if i == 0 or ordered[i - 1] != v]


class NaiveEvaluator:
    name = "naive"

    def __init__(self, universe: Universe, trace: Trace | None = None):
        self.universe = universe
        self.trace = trace

    def expr(self, node: ast.Expr) -> Callable[[Mapping], Value]:
        return lambda env: self.eval_expr(node, dict(env))

    def pred(self, node: ast.Pred) -> Callable[[Mapping], bool]:
        return lambda env: self.eval_pred(node, dict(env))

    def domains(self, bindings):
        return [(var, self.expr(domain)) for var, domain in bindings]

    # ---- tracing ----
    def _traced(self, node: ast.Node, compute: Callable[[], Value | bool]):
        if self.trace is None:
            return compute()
        text = pretty_print(node)
        position = len(self.trace.steps)
        depth = self.trace.depth
        self.trace.record(text, "...")
        self.trace.depth += 1
        try:
            result = compute()
        except WDViolation as exc:
            self.trace.steps[position] = TraceStep(depth, text, f"undefined: {exc.error.kind} {exc.error.detail}")
            raise
        finally:
            self.trace.depth = depth
        shown = ("TRUE" if result else "FALSE") if isinstance(result, bool) else to_text(result)
        self.trace.steps[position] = TraceStep(depth, text, shown)
        return result

    def _bound(self, var: str, value: Value):
        if self.trace is not None:
            self.trace.record(f"{var} :=", to_text(value))

    # ---- expressions ----
    def eval_expr(self, node: ast.Expr, env: dict) -> Value:
        match node:
            case ast.Ident(name):
                if name in env:
                    return env[name]
                return self.universe.lookup(name)
            case ast.IntLit(value):
                return Int(value)
            case ast.BoolLit(value):
                return TRUE if value else FALSE
        return self._traced(node, lambda: self._compute(node, env))

    def _compute(self, node: ast.Expr, env: dict) -> Value:
        match node:
            case ast.TypeSet("BOOL"):
                return SetV.of([FALSE, TRUE])
            case ast.TypeSet() | ast.PowSet():
                raise WDViolation(WDKind.UNBOUNDED_QUANTIFICATION, node.span, f"{pretty_print(node)} is not finite")
            case ast.SetExt(items):
                values = [self.eval_expr(item, env) for item in items]
                return SetV.of(values) if values else EMPTY
            case ast.Comprehension(var, body):
                parts = ast.split_bounded((var,), body, universal=False)
                if parts is None:
                    raise WDViolation(
                        WDKind.UNBOUNDED_QUANTIFICATION, node.span, "comprehension without a finite domain"
                    )
                kept = []
                for inner in self._tuples(parts.bindings, env):
                    if self._guards(parts.guards, inner):
                        kept.append(inner[var])
                return SetV.of(kept)
            case ast.Binary(op, left, right):
                a = self.eval_expr(left, env)
                b = self.eval_expr(right, env)
                return self._binary(node, op, a, b)
            case ast.Neg(operand):
                return _int(-self.eval_expr(operand, env).value, node)
            case ast.Call(fn, arg):
                return self._call(node, fn, self.eval_expr(arg, env))
            case ast.Inverse(operand):
                return SetV.of([Pair(p.right, p.left) for p in self.eval_expr(operand, env)])
            case ast.Image(rel, arg):
                r = self.eval_expr(rel, env)
                s = self.eval_expr(arg, env)
                return SetV.of([p.right for p in r if _find(s, p.left)])
            case ast.Apply(fn, arg):
                f = self.eval_expr(fn, env)
                x = self.eval_expr(arg, env)
                images = _images(f, x)
                where = f"{pretty_print(fn)}({to_text(x)})"
                if not images:
                    detail = f"{where}: {to_text(x)} not in domain"
                    raise WDViolation(WDKind.APPLICATION_OUTSIDE_DOMAIN, node.span, detail)
                if len(images) > 1:
                    raise WDViolation(WDKind.NON_FUNCTIONAL_APPLICATION, node.span, f"{where}: {len(images)} images")
                return images[0]
        raise TypeError(f"cannot evaluate {node!r}")

    def _binary(self, node, op: str, a: Value, b: Value) -> Value:
        if isinstance(a, Int) and op in ast.ARITHMETIC_OPS:
            x, y = a.value, b.value
            match op:
                case "+":
                    return _int(x + y, node)
                case "-":
                    return _int(x - y, node)
                case "*":
                    return _int(x * y, node)
                case "/":
                    if y == 0:
                        raise WDViolation(WDKind.DIVISION_BY_ZERO, node.span, f"{x} / 0")
                    q = abs(x) // abs(y)
                    return _int(-q if (x < 0) != (y < 0) else q, node)
                case "mod":
                    if x < 0 or y <= 0:
                        raise WDViolation(WDKind.MOD_OUT_OF_DOMAIN, node.span, f"{x} mod {y}")
                    return Int(x - y * (x // y))
        match op:
            case "..":
                return SetV.of([Int(i) for i in range(a.value, b.value + 1)])
            case "|->":
                return Pair(a, b)
            case "\\/":
                return SetV.of(list(a) + list(b))
            case "/\\":
                return SetV.of([e for e in a if _find(b, e)])
            case "-":
                return SetV.of([e for e in a if not _find(b, e)])
            case "*":
                return SetV.of([Pair(x, y) for x in a for y in b])
            case "<|":
                return SetV.of([p for p in b if _find(a, p.left)])
            case "<<|":
                return SetV.of([p for p in b if not _find(a, p.left)])
            case "|>":
                return SetV.of([p for p in a if _find(b, p.right)])
            case "|>>":
                return SetV.of([p for p in a if not _find(b, p.right)])
            case ";":
                return SetV.of([Pair(p.left, q.right) for p in a for q in b if p.right == q.left])
        raise TypeError(f"cannot evaluate operator {op}")

    @staticmethod
    def _call(node, fn: str, s: SetV) -> Value:
        match fn:
            case "dom":
                return SetV.of([p.left for p in s])
            case "ran":
                return SetV.of([p.right for p in s])
            case "card":
                return Int(sum(1 for _ in s))
            case "min" | "max":
                numbers = [e.value for e in s]
                if not numbers:
                    raise WDViolation(WDKind.MIN_MAX_OF_EMPTY_SET, node.span, f"{fn} of {{}}")
                return Int(min(numbers) if fn == "min" else max(numbers))
        raise TypeError(f"unknown builtin {fn}")

    # ---- binders ----
    def _tuples(self, bindings: list[tuple[str, ast.Expr]], env: dict):
        if not bindings:
            yield env
            return
        (var, domain), rest = bindings[0], bindings[1:]
        for v in self.eval_expr(domain, env):
            inner = dict(env)
            inner[var] = v
            self._bound(var, v)
            yield from self._tuples(rest, inner)

    def _guards(self, guards: list[ast.Pred], env: dict) -> bool:
        for guard in guards:
            if not self.eval_pred(guard, env):
                return False
        return True

    # ---- membership ----
    def _membership(self, node: ast.Expr, env: dict) -> Callable[[Value], bool]:
        """Evaluate the set operand, returning its membership test."""
        match node:
            case ast.TypeSet("INTEGER"):
                return lambda v: True
            case ast.TypeSet("NAT"):
                return lambda v: v.value >= 0
            case ast.TypeSet("NAT1"):
                return lambda v: v.value >= 1
            case ast.Binary("..", lo, hi):
                a = self.eval_expr(lo, env).value
                b = self.eval_expr(hi, env).value
                return lambda v: a <= v.value <= b
            case ast.PowSet(operand):
                inner = self._membership(operand, env)
                return lambda v: all(inner(e) for e in v)
        s = self.eval_expr(node, env)
        return lambda v: _find(s, v)

    # ---- predicates ----
    def eval_pred(self, node: ast.Pred, env: dict) -> bool:
        return self._traced(node, lambda: self._decide(node, env))

    def _decide(self, node: ast.Pred, env: dict) -> bool:
        match node:
            case ast.Connective("&", left, right):
                return self.eval_pred(left, env) and self.eval_pred(right, env)
            case ast.Connective("or", left, right):
                return self.eval_pred(left, env) or self.eval_pred(right, env)
            case ast.Connective("=>", left, right):
                if not self.eval_pred(left, env):
                    return True
                return self.eval_pred(right, env)
            case ast.Connective("<=>", left, right):
                a = self.eval_pred(left, env)
                b = self.eval_pred(right, env)
                return a == b
            case ast.Not(operand):
                return not self.eval_pred(operand, env)
            case ast.Compare(":" | "/:" as op, left, right):
                v = self.eval_expr(left, env)
                found = self._membership(right, env)(v)
                return found if op == ":" else not found
            case ast.Compare("<:" | "/<:" as op, left, right):
                s = self.eval_expr(left, env)
                test = self._membership(right, env)
                included = all(test(e) for e in s)
                return included if op == "<:" else not included
            case ast.Compare(op, left, right):
                a = self.eval_expr(left, env)
                b = self.eval_expr(right, env)
                match op:
                    case "=":
                        return a == b
                    case "/=":
                        return a != b
                    case "<":
                        return a.value < b.value
                    case "<=":
                        return a.value <= b.value
                    case ">":
                        return a.value > b.value
                    case ">=":
                        return a.value >= b.value
            case ast.ArrowMember(element, arrow, domain, range_):
                return self._arrow(element, arrow, domain, range_, env)
            case ast.Quantifier(kind, names, body):
                universal = kind == "!"
                parts = ast.split_bounded(names, body, universal=universal)
                if parts is None:
                    raise WDViolation(
                        WDKind.UNBOUNDED_QUANTIFICATION, node.span, "quantified variable without a finite domain"
                    )
                for inner in self._tuples(parts.bindings, env):
                    if not self._guards(parts.guards, inner):
                        continue
                    if not universal:
                        return True
                    if not self.eval_pred(parts.consequent, inner):
                        return False
                return universal
        raise TypeError(f"cannot evaluate {node!r}")

    def _arrow(self, element, arrow: str, domain, range_, env: dict) -> bool:
        f = self.eval_expr(element, env)
        total = arrow in ast.TOTAL_ARROWS
        surjective = arrow in ast.SURJECTIVE_ARROWS
        if total:
            a = self.eval_expr(domain, env)
            in_domain = lambda v: _find(a, v)  # noqa: E731
        else:
            in_domain = self._membership(domain, env)
        if surjective:
            b = self.eval_expr(range_, env)
            in_range = lambda v: _find(b, v)  # noqa: E731
        else:
            in_range = self._membership(range_, env)
        pairs = list(f)
        if not all(in_domain(p.left) and in_range(p.right) for p in pairs):
            return False
        # canonical order puts pairs with the same left side next to each other
        if any(pairs[i].left == pairs[i + 1].left for i in range(len(pairs) - 1)):
            return False
        if total and [p.left for p in pairs] != list(a):
            return False
        rights = _distinct_sorted([p.right for p in pairs])
        if arrow in ast.INJECTIVE_ARROWS and len(rights) != len(pairs):
            return False
        if surjective and rights != list(b):
            return False
        return True
