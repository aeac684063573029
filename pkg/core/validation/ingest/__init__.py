from pathlib import Path

from ..diagnostics import undecodable
from ..exceptions import SchemaError
from .loader import UniverseDigest, dump_dataset, load_dataset, resolve_sources, universe_digest
from .schema import CarrierDecl, ConstantDecl, Schema, Shape, SourceBinding, load_schema, render_schema


def load_schema_file(path: str | Path) -> Schema:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError([undecodable(path, exc)]) from None
    return load_schema(text, str(path))


__all__ = [
    "CarrierDecl",
    "ConstantDecl",
    "Schema",
    "Shape",
    "SourceBinding",
    "UniverseDigest",
    "dump_dataset",
    "load_dataset",
    "load_schema",
    "load_schema_file",
    "render_schema",
    "resolve_sources",
    "universe_digest",
]
