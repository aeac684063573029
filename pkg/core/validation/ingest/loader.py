import json
import logging
import re
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pandas as pd
from pydantic import BaseModel

from ..diagnostics import Diagnostic
from ..exceptions import DataLoadError, KernelError
from ..kernel import (
    BOOL,
    FALSE,
    INT_MAX,
    INT_MIN,
    INTEGER,
    TRUE,
    Atom,
    Bool,
    GivenType,
    Int,
    Pair,
    PowerType,
    ProdType,
    SetV,
    Type,
    Value,
    to_text,
    type_of,
    unify,
)
from ..lang import ast
from ..lang.printer import print_expr
from ..universe import Universe
from .schema import CarrierDecl, ConstantDecl, Schema, Shape, SourceBinding, render_schema

logger = logging.getLogger(__name__)

_INT_RE = re.compile(r"-?[0-9]+")


class InvalidValue(ValueError):
    pass


class UniverseDigest(BaseModel):
    carriers: dict[str, int]
    constants: dict[str, int]
    total: int


def universe_digest(u: Universe) -> UniverseDigest:
    """
    Per-constant cardinalities (scalars count 1) and per-carrier sizes
    """
    constants = {
        name: len(value) if isinstance(value, SetV) else 1 for name, value in sorted(u.constants.items())
    }
    carriers = {name: len(atoms) for name, atoms in sorted(u.carriers.items())}
    return UniverseDigest(carriers=carriers, constants=constants, total=sum(constants.values()))


# ---------------------------------------------------------------------------- #
# ------------------------------- File access -------------------------------- #
# ---------------------------------------------------------------------------- #
def resolve_sources(schema: Schema, data: Sequence[str | Path] = ()) -> dict[str, Path]:
    """
    Map each file named in the schema to a path. Data paths given on the command line are
    matched by file name, directories are searched; anything else is relative to the schema.
    """
    base = Path.cwd() if schema.file.startswith("<") else Path(schema.file).parent
    given = [Path(p) for p in data]
    resolved = {}
    for name in schema.files:
        path = base / name
        for candidate in given:
            if candidate.is_dir() and (candidate / name).is_file():
                path = candidate / name
                break
            if candidate.name == Path(name).name:
                path = candidate
                break
        resolved[name] = path
    return resolved


def _read(path: Path) -> pd.DataFrame | object:
    if path.suffix.lower() == ".json":
        with path.open(encoding="utf-8") as stream:
            return json.load(stream)
    return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")


def _read_all(paths: dict[str, Path]) -> tuple[dict[str, object], list[Diagnostic]]:
    def read_one(item):
        name, path = item
        try:
            return name, _read(path), None
        except FileNotFoundError:
            return name, None, f"missing file {path}"
        except pd.errors.EmptyDataError:
            return name, None, f"{path}: no header row"
        except (pd.errors.ParserError, UnicodeDecodeError, json.JSONDecodeError, OSError) as exc:
            return name, None, f"{path}: {exc}"

    contents, diagnostics = {}, []
    with ThreadPoolExecutor() as pool:
        for name, content, problem in pool.map(read_one, paths.items()):
            if problem is None:
                contents[name] = content
            else:
                diagnostics.append(Diagnostic(problem, None, "data"))
    return contents, diagnostics


# ---------------------------------------------------------------------------- #
# ------------------------------- JSON paths --------------------------------- #
# ---------------------------------------------------------------------------- #
def _json_values(document, path: str) -> list[tuple[tuple[int, ...], object]]:
    """
    Evaluate a dotted path where `[]` steps into each element of an array. Every value comes
    with the array indexes that led to it.
    """
    results: list[tuple[tuple[int, ...], object]] = [((), document)]
    for step in [s for s in path.split(".") if s]:
        each = step.endswith("[]")
        key = step[:-2] if each else step
        following = []
        for indexes, node in results:
            if key:
                if not isinstance(node, dict) or key not in node:
                    raise InvalidValue(f"path {path}: no key {key!r}")
                node = node[key]
            if each:
                if not isinstance(node, list):
                    raise InvalidValue(f"path {path}: {key or 'value'} is not an array")
                following.extend((indexes + (i,), item) for i, item in enumerate(node))
            else:
                following.append((indexes, node))
        results = following
    return results


def _common_depth(paths: Sequence[str]) -> int:
    depth = 0
    steps = [p.split(".") for p in paths]
    for parts in zip(*steps, strict=False):
        if len(set(parts)) != 1:
            break
        if parts[0].endswith("[]"):
            depth += 1
    return depth


def _json_rows(document, paths: Sequence[str]) -> list[tuple[str, tuple]]:
    columns = [_json_values(document, p) for p in paths]
    depth = _common_depth(paths)
    rows: list[tuple[str, tuple]] = []

    def combine(position: int, prefix: tuple[int, ...] | None, chosen: tuple, where: tuple[int, ...]):
        if position == len(columns):
            rows.append((f"element {list(where)}" if where else "document", chosen))
            return
        for indexes, value in columns[position]:
            key = indexes[:depth]
            if prefix is not None and key != prefix:
                continue
            combine(position + 1, key, chosen + (value,), where or indexes)

    combine(0, None, (), ())
    return rows


def _csv_rows(frame: pd.DataFrame, columns: Sequence[str]) -> list[tuple[str, tuple]]:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise InvalidValue(f"missing column(s) {', '.join(missing)}")
    values = zip(*(frame[c].tolist() for c in columns), strict=True) if columns else iter(())
    return [(f"line {number}", row) for number, row in enumerate(values, start=2)]


# ---------------------------------------------------------------------------- #
# ------------------------------ Value parsing ------------------------------- #
# ---------------------------------------------------------------------------- #
class AtomTable:
    """Atom interning against declared carriers; collected carriers remember what they saw."""

    def __init__(self, carriers: Iterable[CarrierDecl]):
        self.declared = {c.name: c for c in carriers}
        self.allowed = {c.name: frozenset(c.elements) for c in self.declared.values() if not c.collected}
        self.observed: dict[str, set[str]] = {c.name: set() for c in self.declared.values() if c.collected}

    def atom(self, carrier: str, name: str) -> Atom:
        if not name:
            raise InvalidValue(f"empty name for an element of {carrier}")
        if carrier in self.allowed:
            if name not in self.allowed[carrier]:
                raise InvalidValue(f"atom {name} not in carrier {carrier}")
        else:
            self.observed[carrier].add(name)
        return Atom(carrier, name)

    def carrier_sets(self) -> dict[str, SetV]:
        sets = {}
        for name, decl in self.declared.items():
            names = decl.elements if not decl.collected else self.observed[name]
            sets[name] = SetV.of(Atom(name, e) for e in names)
        return sets


def _scalar(raw, t: Type, atoms: AtomTable) -> Value:
    match t:
        case ProdType() | PowerType():
            raise InvalidValue(f"cannot read a value of type {t} from one field")
        case GivenType(carrier):
            if not isinstance(raw, str):
                raise InvalidValue(f"expected an element of {carrier}, found {raw!r}")
            return atoms.atom(carrier, raw)
    if t == INTEGER:
        if isinstance(raw, int) and not isinstance(raw, bool):
            text = str(raw)
        elif isinstance(raw, str) and _INT_RE.fullmatch(raw):
            text = raw
        else:
            raise InvalidValue(f"{raw!r} is not an integer")
        n = int(text)
        if not INT_MIN <= n <= INT_MAX:
            raise InvalidValue(f"integer {text} outside the signed 64-bit range")
        return Int(n)
    if t == BOOL:
        if raw is True or raw == "TRUE":
            return TRUE
        if raw is False or raw == "FALSE":
            return FALSE
        raise InvalidValue(f"{raw!r} is not TRUE or FALSE")
    raise InvalidValue(f"unsupported type {t}")


def _assemble(t: Type, leaves: Iterator[Value]) -> Value:
    if isinstance(t, ProdType):
        left = _assemble(t.left, leaves)
        return Pair(left, _assemble(t.right, leaves))
    return next(leaves)


def literal_value(node: ast.Expr, t: Type, atoms: AtomTable) -> Value:
    """
    Value of a literal expression (numbers, TRUE/FALSE, element names, maplets, set
    extensions, integer intervals) read at type t.
    """
    match node:
        case ast.IntLit(n) if t == INTEGER:
            return Int(n)
        case ast.Neg(ast.IntLit(n)) if t == INTEGER:
            return Int(-n)
        case ast.BoolLit(b) if t == BOOL:
            return TRUE if b else FALSE
        case ast.Ident(name) if isinstance(t, GivenType):
            return atoms.atom(t.name, name)
        case ast.Binary("|->", left, right) if isinstance(t, ProdType):
            return Pair(literal_value(left, t.left, atoms), literal_value(right, t.right, atoms))
        case ast.Binary("..", left, right) if t == PowerType(INTEGER):
            lo = literal_value(left, INTEGER, atoms).value
            hi = literal_value(right, INTEGER, atoms).value
            return SetV(tuple(Int(i) for i in range(lo, hi + 1)))
        case ast.SetExt(items) if isinstance(t, PowerType):
            return SetV.of(literal_value(item, t.element, atoms) for item in items)
    raise InvalidValue(f"{print_expr(node)} is not a literal of type {t}")


def _functionality(decl: ConstantDecl, value: SetV) -> list[str]:
    problems = []
    for left, rights in value.forward_index().items():
        if len(rights) > 1:
            images = " and ".join(to_text(r) for r in rights)
            problems.append(f"functionality violation in {decl.name}: {to_text(left)} maps to {images}")
    return problems


def _constant(decl: ConstantDecl, contents: dict[str, object], atoms: AtomTable) -> Value:
    source: SourceBinding = decl.source
    if source.literal is not None:
        return literal_value(source.literal, decl.type, atoms)
    content = contents[source.file]
    if source.is_json:
        if isinstance(content, pd.DataFrame):
            raise InvalidValue(f"{source.file} is not a JSON file")
        rows = _json_rows(content, source.paths)
    else:
        if not isinstance(content, pd.DataFrame):
            raise InvalidValue(f"{source.file} is not a CSV file")
        rows = _csv_rows(content, source.columns)
    leaf_types = decl.leaf_types
    values = []
    for where, row in rows:
        try:
            leaves = [_scalar(raw, t, atoms) for raw, t in zip(row, leaf_types, strict=True)]
        except InvalidValue as exc:
            raise InvalidValue(f"{source.file} {where}: {exc}") from None
        element_type = decl.type if decl.shape is Shape.SCALAR else decl.type.element
        values.append(_assemble(element_type, iter(leaves)))
    if decl.shape is Shape.SCALAR:
        if len(values) != 1:
            raise InvalidValue(f"scalar {decl.name} needs exactly one row in {source.file}, found {len(values)}")
        return values[0]
    return SetV.of(values)


def load_dataset(schema: Schema, files: Sequence[str | Path] = ()) -> Universe:
    """
    Read every constant of the schema into a Universe. Raises DataLoadError listing every
    problem found.
    """
    paths = resolve_sources(schema, files)
    contents, diagnostics = _read_all(paths)
    atoms = AtomTable(schema.carriers)
    constants: dict[str, Value] = {}
    for decl in schema.constants:
        if decl.source.file is not None and decl.source.file not in contents:
            continue
        try:
            value = _constant(decl, contents, atoms)
        except InvalidValue as exc:
            diagnostics.append(Diagnostic(f"constant {decl.name}: {exc}", decl.span, "data"))
            continue
        if decl.functional:
            diagnostics += [Diagnostic(p, decl.span, "functionality") for p in _functionality(decl, value)]
        constants[decl.name] = value
    if diagnostics:
        raise DataLoadError(diagnostics)

    carriers = atoms.carrier_sets()
    for decl in schema.constants:
        actual = type_of(constants[decl.name], carriers)
        if unify(actual, decl.type) is None:
            raise KernelError(f"constant {decl.name} loaded as {actual}, declared {decl.type}")
    universe = Universe(carriers, constants, {decl.name: decl.type for decl in schema.constants})
    digest = universe_digest(universe)
    logger.info(
        "Loaded %d constants over %d carriers from %d file(s), %d items",
        len(constants),
        len(carriers),
        len(paths),
        digest.total,
    )
    return universe


# ---------------------------------------------------------------------------- #
# ---------------------------------- Dump ------------------------------------ #
# ---------------------------------------------------------------------------- #
def _leaves(t: Type, v: Value) -> list[str]:
    if isinstance(t, ProdType):
        return _leaves(t.left, v.left) + _leaves(t.right, v.right)
    match v:
        case Atom(_, name):
            return [name]
        case Int(n):
            return [str(n)]
        case Bool(b):
            return ["TRUE" if b else "FALSE"]
    raise KernelError(f"cannot write {to_text(v)} as a field")


def dump_dataset(schema: Schema, universe: Universe, directory: str | Path) -> Schema:
    """
    Write every file-readable constant as a sorted CSV file and return the schema that reads
    them back; carriers become explicit enumerations.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    carriers = tuple(
        CarrierDecl(name=c.name, elements=tuple(a.name for a in universe.carriers[c.name]), span=c.span)
        for c in schema.carriers
    )
    constants = []
    for decl in schema.constants:
        leaf_types = decl.leaf_types
        if any(isinstance(t, PowerType | ProdType) for t in leaf_types):
            constants.append(decl)
            continue
        value = universe.constants[decl.name]
        columns = list(decl.source.columns) or [f"c{i}" for i in range(1, len(leaf_types) + 1)]
        if decl.shape is Shape.SCALAR:
            rows = [_leaves(decl.type, value)]
        else:
            rows = [_leaves(decl.type.element, element) for element in value]
        file = f"{decl.name}.csv"
        pd.DataFrame(rows, columns=columns, dtype=str).to_csv(directory / file, index=False)
        source = SourceBinding(file=file, columns=tuple(columns))
        constants.append(decl.model_copy(update={"source": source}))
    dumped = Schema(carriers=carriers, constants=tuple(constants), file=str(directory / "dataset.bds"))
    (directory / "dataset.bds").write_text(render_schema(dumped), encoding="utf-8")
    return dumped
