"""
Recursive-descent parser for the predicate language and for `.bdr` rule files.

Predicate operators, loosest first: `<=>` (right-assoc), `=>`, `or`, `&`, `not`, relational
predicates. Expression operators, loosest first: `|->`; `\\/` and the restrictions; `/\\`;
`..`; `+ -`; `* / mod`; unary minus; application, image and inverse.
"""

from ..diagnostics import Diagnostic, SourceSpan
from ..exceptions import SyntaxDiagnosticError
from ..kernel import INT_MAX, INT_MIN
from . import ast
from .lexer import UNSUPPORTED_ARROWS, Kind, Token, tokenize

_EXPR_CONTINUATION = frozenset(
    {
        "|->", "\\/", "/\\", "<|", "<<|", "|>", "|>>", "..", "+", "-", "*", "/",
        "(", "[", "~", ";", *ast.COMPARE_OPS, *ast.ARROWS, *UNSUPPORTED_ARROWS,
    }
)  # fmt: skip
_SEVERITIES = {s.value: s for s in ast.Severity}


class ParseFailure(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(str(diagnostic))


class Parser:
    """
    Token-stream parser shared by the rule, schema and scenario readers
    """

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @classmethod
    def from_text(cls, text: str, file: str = "<input>") -> "Parser":
        return cls(tokenize(text, file))

    # ---- token helpers ----
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    @property
    def prev(self) -> Token:
        return self.tokens[max(self.pos - 1, 0)]

    def peek(self, n: int = 1) -> Token:
        return self.tokens[min(self.pos + n, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        return any(self.tok.is_(t) for t in texts)

    def at_end(self) -> bool:
        return self.tok.kind is Kind.EOF

    def advance(self) -> Token:
        token = self.tok
        if token.kind is not Kind.EOF:
            self.pos += 1
        return token

    def accept(self, text: str) -> bool:
        if self.tok.is_(text):
            self.advance()
            return True
        return False

    def error(self, message: str, token: Token | None = None) -> ParseFailure:
        return ParseFailure(Diagnostic(message, (token or self.tok).span, "syntax"))

    def expect(self, text: str) -> Token:
        if not self.tok.is_(text):
            raise self.error(f"expected `{text}`, found {self.tok}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.tok.kind is not Kind.IDENT:
            raise self.error(f"expected {what}, found {self.tok}")
        return self.advance()

    def expect_string(self) -> Token:
        if self.tok.kind is not Kind.STRING:
            raise self.error(f"expected string literal, found {self.tok}")
        return self.advance()

    def span_from(self, start: Token) -> SourceSpan:
        return start.span.to(self.prev.span)

    def finish(self):
        if not self.at_end():
            raise self.error(f"unexpected {self.tok} after end of input")

    # ---- predicates ----
    def predicate(self) -> ast.Pred:
        return self._equivalence()

    def _equivalence(self) -> ast.Pred:
        start = self.tok
        left = self._implication()
        if self.accept("<=>"):
            right = self._equivalence()
            return ast.Connective("<=>", left, right, span=self.span_from(start))
        return left

    def _implication(self) -> ast.Pred:
        start = self.tok
        left = self._disjunction()
        while self.accept("=>"):
            right = self._disjunction()
            left = ast.Connective("=>", left, right, span=self.span_from(start))
        return left

    def _disjunction(self) -> ast.Pred:
        start = self.tok
        left = self._conjunction()
        while self.accept("or"):
            right = self._conjunction()
            left = ast.Connective("or", left, right, span=self.span_from(start))
        return left

    def _conjunction(self) -> ast.Pred:
        start = self.tok
        left = self._negation()
        while self.accept("&"):
            right = self._negation()
            left = ast.Connective("&", left, right, span=self.span_from(start))
        return left

    def _negation(self) -> ast.Pred:
        start = self.tok
        if self.accept("not"):
            operand = self._negation()
            return ast.Not(operand, span=self.span_from(start))
        return self._pred_atom()

    def _pred_atom(self) -> ast.Pred:
        start = self.tok
        if self.at("!", "#"):
            return self._quantifier()
        if self.at("("):
            saved = self.pos
            try:
                self.advance()
                inner = self.predicate()
                self.expect(")")
            except ParseFailure:
                self.pos = saved
            else:
                if not any(self.tok.is_(op) for op in _EXPR_CONTINUATION):
                    inner.span = self.span_from(start)
                    return inner
                self.pos = saved
        return self._relation()

    def _quantifier(self) -> ast.Pred:
        start = self.advance()
        names = self._var_list()
        self.expect(".")
        self.expect("(")
        body = self.predicate()
        self.expect(")")
        return ast.Quantifier(start.text, names, body, span=self.span_from(start))

    def _var_list(self) -> tuple[str, ...]:
        if self.accept("("):
            names = [self.expect_ident("variable").text]
            while self.accept(","):
                names.append(self.expect_ident("variable").text)
            self.expect(")")
        else:
            names = [self.expect_ident("variable").text]
        if len(set(names)) != len(names):
            raise self.error("quantified variables must be distinct", self.prev)
        return tuple(names)

    def _relation(self) -> ast.Pred:
        start = self.tok
        left = self.expression()
        op_token = self.tok
        op = op_token.text if op_token.kind is Kind.OP and op_token.text in ast.COMPARE_OPS else None
        if op is None:
            raise self.error(f"expected a relational operator, found {op_token}")
        self.advance()
        if op in (":", "/:", "<:", "/<:") and self.at("POW"):
            right = self._pow()
        else:
            right = self.expression()
        if self.tok.kind is Kind.OP and self.tok.text in UNSUPPORTED_ARROWS | {"<->"}:
            raise self.error(
                f"unsupported arrow `{self.tok.text}`; supported arrows are {', '.join(ast.ARROWS)}"
            )
        if self.tok.kind is Kind.OP and self.tok.text in ast.ARROWS:
            if op != ":":
                raise self.error(f"arrow `{self.tok.text}` is only allowed after `:`")
            arrow = self.advance().text
            range_ = self.expression()
            return ast.ArrowMember(left, arrow, right, range_, span=self.span_from(start))
        return ast.Compare(op, left, right, span=self.span_from(start))

    def _pow(self) -> ast.Expr:
        start = self.expect("POW")
        self.expect("(")
        operand = self.expression()
        self.expect(")")
        return ast.PowSet(operand, span=self.span_from(start))

    # ---- expressions ----
    def expression(self) -> ast.Expr:
        return self._maplet()

    def _left_assoc(self, operand, ops: tuple[str, ...]) -> ast.Expr:
        start = self.tok
        left = operand()
        while self.tok.kind in (Kind.OP, Kind.KEYWORD) and self.tok.text in ops:
            op = self.advance().text
            right = operand()
            left = ast.Binary(op, left, right, span=self.span_from(start))
        return left

    def _maplet(self) -> ast.Expr:
        return self._left_assoc(self._union, ("|->",))

    def _union(self) -> ast.Expr:
        return self._left_assoc(self._intersection, ("\\/", "<|", "<<|", "|>", "|>>"))

    def _intersection(self) -> ast.Expr:
        return self._left_assoc(self._interval, ("/\\",))

    def _interval(self) -> ast.Expr:
        return self._left_assoc(self._additive, ("..",))

    def _additive(self) -> ast.Expr:
        return self._left_assoc(self._multiplicative, ("+", "-"))

    def _multiplicative(self) -> ast.Expr:
        return self._left_assoc(self._unary, ("*", "/", "mod"))

    def _unary(self) -> ast.Expr:
        start = self.tok
        if self.accept("-"):
            if self.tok.kind is Kind.INT and int(self.tok.text) == -INT_MIN:
                # INT_MIN has no positive counterpart to negate
                self.advance()
                return ast.IntLit(INT_MIN, span=self.span_from(start))
            operand = self._unary()
            return ast.Neg(operand, span=self.span_from(start))
        return self._postfix()

    def _postfix(self) -> ast.Expr:
        start = self.tok
        node = self._primary()
        while True:
            if self.accept("("):
                arg = self._argument_list()
                self.expect(")")
                node = ast.Apply(node, arg, span=self.span_from(start))
            elif self.accept("["):
                arg = self.expression()
                self.expect("]")
                node = ast.Image(node, arg, span=self.span_from(start))
            elif self.accept("~"):
                node = ast.Inverse(node, span=self.span_from(start))
            else:
                return node

    def _argument_list(self) -> ast.Expr:
        # f(a, b) is f(a |-> b)
        start = self.tok
        arg = self.expression()
        while self.accept(","):
            right = self.expression()
            arg = ast.Binary("|->", arg, right, span=self.span_from(start))
        return arg

    def _primary(self) -> ast.Expr:
        start = self.tok
        if start.kind is Kind.IDENT:
            self.advance()
            return ast.Ident(start.text, span=start.span)
        if start.kind is Kind.INT:
            self.advance()
            value = int(start.text)
            if value > INT_MAX:
                raise self.error(f"integer literal {start.text} outside the signed 64-bit range", start)
            return ast.IntLit(value, span=start.span)
        if self.accept("TRUE"):
            return ast.BoolLit(True, span=start.span)
        if self.accept("FALSE"):
            return ast.BoolLit(False, span=start.span)
        if self.at("INTEGER", "NAT", "NAT1", "BOOL"):
            self.advance()
            return ast.TypeSet(start.text, span=start.span)
        if self.at(*ast.BUILTINS):
            fn = self.advance().text
            self.expect("(")
            arg = self.expression()
            self.expect(")")
            return ast.Call(fn, arg, span=self.span_from(start))
        if self.at("POW"):
            raise self.error("POW(...) is only allowed as the right operand of `:` or `<:`")
        if self.accept("{"):
            return self._set(start)
        if self.accept("("):
            node = self.expression()
            while self.accept(";"):
                right = self.expression()
                node = ast.Binary(";", node, right, span=self.span_from(start))
            self.expect(")")
            node.span = self.span_from(start)
            return node
        if start.kind is Kind.OP and start.text in UNSUPPORTED_ARROWS:
            raise self.error(f"unsupported arrow `{start.text}`")
        raise self.error(f"expected an expression, found {start}")

    def _set(self, start: Token) -> ast.Expr:
        if self.accept("}"):
            return ast.SetExt((), span=self.span_from(start))
        if self.tok.kind is Kind.IDENT and self.peek().is_("|"):
            var = self.advance().text
            self.expect("|")
            body = self.predicate()
            self.expect("}")
            return ast.Comprehension(var, body, span=self.span_from(start))
        items = [self.expression()]
        while self.accept(","):
            items.append(self.expression())
        self.expect("}")
        return ast.SetExt(tuple(items), span=self.span_from(start))

    # ---- rules ----
    def rule(self) -> ast.Rule:
        start = self.expect("RULE")
        name = self.expect_ident("rule name").text
        doc, error_class, severity = "", "", ast.Severity.ERROR
        while self.at("DOC", "CLASS", "SEVERITY"):
            clause = self.advance().text
            if clause == "DOC":
                doc = self.expect_string().text
            elif clause == "CLASS":
                error_class = self.expect_ident("error class").text
            else:
                token = self.expect_ident("ERROR or WARNING")
                if token.text not in _SEVERITIES:
                    raise self.error(f"unknown severity `{token.text}`", token)
                severity = _SEVERITIES[token.text]
        if not self.at("WHERE"):
            raise self.error(f"expected `WHERE` clause in rule {name}, found {self.tok}")
        self.advance()
        where = self._where_items(self.predicate())
        self.expect("VERIFY")
        verify = self.predicate()
        self.expect("MESSAGE")
        message = self.expect_string().text
        if not self.at("END"):
            raise self.error(f"unterminated rule {name}: expected `END`, found {self.tok}")
        self.advance()
        return ast.Rule(
            name,
            tuple(where),
            verify,
            message,
            doc=doc,
            error_class=error_class,
            severity=severity,
            span=self.span_from(start),
        )

    @staticmethod
    def _where_items(pred: ast.Pred) -> list[ast.Binding | ast.Filter]:
        items: list[ast.Binding | ast.Filter] = []
        bound: set[str] = set()
        for part in ast.conjuncts(pred):
            if (
                isinstance(part, ast.Compare)
                and part.op == ":"
                and isinstance(part.left, ast.Ident)
                and part.left.name not in bound
            ):
                bound.add(part.left.name)
                items.append(ast.Binding(part.left.name, part.right, span=part.span))
            else:
                items.append(ast.Filter(part, span=part.span))
        return items

    def skip_to(self, *texts: str):
        while not self.at_end() and not self.at(*texts):
            self.advance()


def parse_predicate(text: str, file: str = "<input>") -> ast.Pred:
    """Raises SyntaxDiagnosticError."""
    parser = Parser.from_text(text, file)
    try:
        pred = parser.predicate()
        parser.finish()
    except ParseFailure as exc:
        raise SyntaxDiagnosticError([exc.diagnostic]) from None
    return pred


def parse_expression(text: str, file: str = "<input>") -> ast.Expr:
    parser = Parser.from_text(text, file)
    try:
        expr = parser.expression()
        parser.finish()
    except ParseFailure as exc:
        raise SyntaxDiagnosticError([exc.diagnostic]) from None
    return expr


def parse_rule_file(text: str, file: str = "<input>") -> list[ast.Rule]:
    """
    Parse every RULE block. On any syntax error no rule is returned and all diagnostics found
    are raised together.
    """
    parser = Parser.from_text(text, file)
    rules: list[ast.Rule] = []
    diagnostics: list[Diagnostic] = []
    seen: dict[str, ast.Rule] = {}
    while not parser.at_end():
        if not parser.at("RULE"):
            diagnostics.append(Diagnostic(f"expected `RULE`, found {parser.tok}", parser.tok.span, "syntax"))
            parser.advance()
            parser.skip_to("RULE")
            continue
        start = parser.pos
        try:
            rule = parser.rule()
        except ParseFailure as exc:
            diagnostics.append(exc.diagnostic)
            if parser.pos == start or not parser.at("RULE"):
                parser.advance()
            parser.skip_to("RULE")
            continue
        if rule.name in seen:
            diagnostics.append(
                Diagnostic(
                    f"duplicate rule name {rule.name} (first defined at {seen[rule.name].span})",
                    rule.span,
                    "duplicate",
                )
            )
        else:
            seen[rule.name] = rule
            rules.append(rule)
    if diagnostics:
        raise SyntaxDiagnosticError(diagnostics)
    return rules
