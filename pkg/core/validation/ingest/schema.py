"""
Schema files (`.bds`): carrier sets and typed constants bound to data sources.

    CARRIERS
      t_signal COLLECT
      t_line = {l1, l2}
    CONSTANTS
      territory : t_signal +-> t_interlocking FROM "territory.csv" COLS (signal, interlocking)
      max_speed : INTEGER = 80
"""

import re
from enum import StrEnum

from pydantic import BaseModel, ConfigDict, SkipValidation, model_validator

from ..diagnostics import Diagnostic, SourceSpan
from ..exceptions import SchemaError, SyntaxDiagnosticError
from ..kernel import BOOL, INTEGER, GivenType, PowerType, ProdType, Type
from ..lang import ast
from ..lang.lexer import KEYWORDS, Kind
from ..lang.parser import ParseFailure, Parser
from ..lang.printer import print_expr, quote
from ..lang.typecheck import Declarations

FUNCTION_ARROWS = frozenset(ast.ARROWS)
TYPE_ARROWS = FUNCTION_ARROWS | {"<->"}

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class Shape(StrEnum):
    SCALAR = "scalar"
    SET = "set"
    RELATION = "relation"


class CarrierDecl(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    # None means the carrier is collected from the atoms found in the data
    elements: tuple[str, ...] | None = None
    span: SkipValidation[SourceSpan | None] = None

    @property
    def collected(self) -> bool:
        return self.elements is None


class SourceBinding(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    file: str | None = None
    columns: tuple[str, ...] = ()
    paths: tuple[str, ...] = ()
    literal: SkipValidation[ast.Expr | None] = None

    @model_validator(mode="after")
    def exactly_one_source(self):
        if (self.file is None) == (self.literal is None):
            raise ValueError("a constant is bound to exactly one source: a file or a literal")
        if self.file is not None and bool(self.columns) == bool(self.paths):
            raise ValueError("a file source names either columns or JSON paths")
        return self

    @property
    def fields(self) -> tuple[str, ...]:
        return self.columns or self.paths

    @property
    def is_json(self) -> bool:
        return bool(self.paths)


class ConstantDecl(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    type: Type
    # "<->" or a function arrow when declared as a relation; None otherwise
    arrow: str | None = None
    source: SourceBinding
    span: SkipValidation[SourceSpan | None] = None

    @property
    def shape(self) -> Shape:
        if self.arrow is not None:
            return Shape.RELATION
        if isinstance(self.type, PowerType):
            return Shape.SET
        return Shape.SCALAR

    @property
    def leaf_types(self) -> list[Type]:
        """Column types, one per bound column or path."""
        if self.shape is Shape.SCALAR:
            return [self.type]
        if self.shape is Shape.RELATION:
            return [self.type.element.left, self.type.element.right]
        return product_leaves(self.type.element)

    @property
    def functional(self) -> bool:
        return self.arrow in FUNCTION_ARROWS


class Schema(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    carriers: tuple[CarrierDecl, ...] = ()
    constants: tuple[ConstantDecl, ...] = ()
    file: str = "<schema>"

    @property
    def declarations(self) -> Declarations:
        return Declarations(
            frozenset(c.name for c in self.carriers),
            {c.name: c.type for c in self.constants},
        )

    def carrier(self, name: str) -> CarrierDecl:
        return next(c for c in self.carriers if c.name == name)

    @property
    def files(self) -> list[str]:
        return sorted({c.source.file for c in self.constants if c.source.file is not None})


def product_leaves(t: Type) -> list[Type]:
    if isinstance(t, ProdType):
        return product_leaves(t.left) + product_leaves(t.right)
    return [t]


def type_text(decl: ConstantDecl) -> str:
    if decl.arrow is not None:
        left, right = decl.type.element.left, decl.type.element.right
        return f"{_type_operand(left)} {decl.arrow} {_type_operand(right)}"
    return str(decl.type)


def _type_operand(t: Type) -> str:
    return f"({t})" if isinstance(t, ProdType) else str(t)


# ---------------------------------------------------------------------------- #
# --------------------------------- Parsing ---------------------------------- #
# ---------------------------------------------------------------------------- #
class SchemaParser(Parser):
    def schema(self, stop: tuple[str, ...] = ()) -> tuple[list[CarrierDecl], list[ConstantDecl], list[Diagnostic]]:
        carriers: list[CarrierDecl] = []
        constants: list[ConstantDecl] = []
        diagnostics: list[Diagnostic] = []
        section = None
        while not self.at_end() and not self.at(*stop):
            if self.accept("CARRIERS"):
                section = "CARRIERS"
                continue
            if self.accept("CONSTANTS"):
                section = "CONSTANTS"
                continue
            start = self.pos
            try:
                if section == "CARRIERS":
                    carriers.append(self.carrier())
                elif section == "CONSTANTS":
                    constants.append(self.constant())
                else:
                    raise self.error(f"expected `CARRIERS` or `CONSTANTS`, found {self.tok}")
            except ParseFailure as exc:
                diagnostics.append(exc.diagnostic)
                if self.pos == start:
                    self.advance()
                self._skip_declaration(stop)
        return carriers, constants, diagnostics

    def _skip_declaration(self, stop: tuple[str, ...] = ()):
        # resume at the next `name :`, `name COLLECT`, `name =` or section header
        while not self.at_end() and not self.at("CARRIERS", "CONSTANTS", *stop):
            if self.tok.kind is Kind.IDENT and any(self.peek().is_(t) for t in (":", "COLLECT", "=")):
                return
            self.advance()

    def carrier(self) -> CarrierDecl:
        start = self.expect_ident("carrier name")
        if self.accept("COLLECT"):
            return CarrierDecl(name=start.text, span=self.span_from(start))
        self.expect("=")
        self.expect("{")
        elements: list[str] = []
        if not self.at("}"):
            elements.append(self._element())
            while self.accept(","):
                elements.append(self._element())
        self.expect("}")
        return CarrierDecl(name=start.text, elements=tuple(elements), span=self.span_from(start))

    def _element(self) -> str:
        if self.tok.kind is Kind.STRING:
            return self.advance().text
        return self.expect_ident("carrier element").text

    def constant(self) -> ConstantDecl:
        start = self.expect_ident("constant name")
        self.expect(":")
        t, arrow = self.type_()
        if self.accept("="):
            source = SourceBinding(literal=self.expression())
        else:
            self.expect("FROM")
            file = self.expect_string().text
            if self.accept("COLS"):
                source = SourceBinding(file=file, columns=self._names(string_only=False))
            elif self.accept("PATH"):
                source = SourceBinding(file=file, paths=(self.expect_string().text,))
            elif self.accept("PATHS"):
                source = SourceBinding(file=file, paths=self._names(string_only=True))
            else:
                raise self.error(f"expected `COLS`, `PATH` or `PATHS`, found {self.tok}")
        return ConstantDecl(name=start.text, type=t, arrow=arrow, source=source, span=self.span_from(start))

    def _names(self, string_only: bool) -> tuple[str, ...]:
        self.expect("(")
        names = [self._name(string_only)]
        while self.accept(","):
            names.append(self._name(string_only))
        self.expect(")")
        return tuple(names)

    def _name(self, string_only: bool) -> str:
        if self.tok.kind is Kind.STRING:
            return self.advance().text
        if string_only:
            raise self.error(f"expected quoted JSON path, found {self.tok}")
        return self.expect_ident("column name").text

    # ---- types ----
    def type_(self) -> tuple[Type, str | None]:
        left = self._product_type()
        if self.tok.kind is Kind.OP and self.tok.text in TYPE_ARROWS:
            arrow = self.advance().text
            right = self._product_type()
            return PowerType(ProdType(left, right)), arrow
        if self.tok.kind is Kind.OP and self.tok.text in (">+>", ">+>>", "+->>", "<<->", "<->>"):
            raise self.error(f"unsupported arrow `{self.tok.text}`")
        return left, None

    def _product_type(self) -> Type:
        t = self._type_atom()
        while self.accept("*"):
            t = ProdType(t, self._type_atom())
        return t

    def _type_atom(self) -> Type:
        if self.accept("INTEGER"):
            return INTEGER
        if self.accept("BOOL"):
            return BOOL
        if self.accept("POW"):
            self.expect("(")
            inner, arrow = self.type_()
            self.expect(")")
            if arrow is not None:
                raise self.error("arrow types are only allowed at the top of a declaration", self.prev)
            return PowerType(inner)
        if self.accept("("):
            inner, arrow = self.type_()
            self.expect(")")
            if arrow is not None:
                raise self.error("arrow types are only allowed at the top of a declaration", self.prev)
            return inner
        if self.tok.kind is Kind.IDENT:
            return GivenType(self.advance().text)
        raise self.error(f"expected a type, found {self.tok}")


def check_declarations(carriers: list[CarrierDecl], constants: list[ConstantDecl]) -> list[Diagnostic]:
    diagnostics = []
    seen: dict[str, SourceSpan | None] = {}
    for decl in [*carriers, *constants]:
        if decl.name in seen:
            diagnostics.append(
                Diagnostic(f"duplicate declaration {decl.name} (first at {seen[decl.name]})", decl.span, "duplicate")
            )
        else:
            seen[decl.name] = decl.span
    for carrier in carriers:
        if carrier.elements is not None and len(set(carrier.elements)) != len(carrier.elements):
            diagnostics.append(Diagnostic(f"carrier {carrier.name} lists an element twice", carrier.span, "duplicate"))
    names = {c.name for c in carriers}
    for decl in constants:
        for given in _given_types(decl.type):
            if given not in names:
                diagnostics.append(Diagnostic(f"unknown type name {given}", decl.span, "type"))
        if decl.source.file is not None:
            leaves = decl.leaf_types
            if decl.shape is Shape.RELATION and any(isinstance(t, ProdType) for t in leaves):
                diagnostics.append(
                    Diagnostic(f"relation {decl.name} must relate simple types to bind columns", decl.span, "shape")
                )
            elif any(isinstance(t, PowerType | ProdType) for t in leaves):
                diagnostics.append(Diagnostic(f"constant {decl.name} cannot be read from a file", decl.span, "shape"))
            elif len(decl.source.fields) != len(leaves):
                diagnostics.append(
                    Diagnostic(
                        f"constant {decl.name} of type {type_text(decl)} binds {len(leaves)} column(s), "
                        f"{len(decl.source.fields)} given",
                        decl.span,
                        "shape",
                    )
                )
    return diagnostics


def _given_types(t: Type) -> list[str]:
    match t:
        case GivenType(name):
            return [name]
        case ProdType(left, right):
            return _given_types(left) + _given_types(right)
        case PowerType(element):
            return _given_types(element)
    return []


def load_schema(text: str, file: str = "<schema>") -> Schema:
    """
    Parse and validate a schema. Raises SchemaError with every problem found.
    """
    try:
        parser = SchemaParser.from_text(text, file)
    except SyntaxDiagnosticError as exc:
        raise SchemaError(exc.diagnostics) from None
    carriers, constants, diagnostics = parser.schema()
    diagnostics += check_declarations(carriers, constants)
    if diagnostics:
        raise SchemaError(diagnostics)
    return Schema(carriers=tuple(carriers), constants=tuple(constants), file=file)


# ---------------------------------------------------------------------------- #
# -------------------------------- Rendering --------------------------------- #
# ---------------------------------------------------------------------------- #
def _element_text(name: str) -> str:
    if _IDENT_RE.fullmatch(name) and name not in KEYWORDS:
        return name
    return quote(name)


def render_schema(schema: Schema) -> str:
    lines = ["CARRIERS"]
    for carrier in schema.carriers:
        if carrier.collected:
            lines.append(f"  {carrier.name} COLLECT")
        else:
            lines.append(f"  {carrier.name} = {{{', '.join(_element_text(e) for e in carrier.elements)}}}")
    lines.append("CONSTANTS")
    for decl in schema.constants:
        head = f"  {decl.name} : {type_text(decl)}"
        source = decl.source
        if source.literal is not None:
            lines.append(f"{head} = {print_expr(source.literal)}")
        elif source.columns:
            columns = ", ".join(_element_text(c) for c in source.columns)
            lines.append(f"{head} FROM {quote(source.file)} COLS ({columns})")
        else:
            paths = ", ".join(quote(p) for p in source.paths)
            lines.append(f"{head} FROM {quote(source.file)} PATHS ({paths})")
    return "\n".join(lines) + "\n"
