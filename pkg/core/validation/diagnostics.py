from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class SourceSpan:
    """
    Location of a piece of source text, 1-based lines and columns, end inclusive
    """

    file: str
    start_line: int
    start_column: int
    end_line: int
    end_column: int

    def __post_init__(self):
        if (self.start_line, self.start_column) > (self.end_line, self.end_column):
            raise ValueError(f"span start after end: {self}")

    def __str__(self):
        return f"{self.file}:{self.start_line}:{self.start_column}"

    def to(self, other: "SourceSpan") -> "SourceSpan":
        return SourceSpan(self.file, self.start_line, self.start_column, other.end_line, other.end_column)


@dataclass(frozen=True, slots=True)
class Diagnostic:
    message: str
    span: SourceSpan | None = None
    code: str = "error"

    def __str__(self):
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.code}: {self.message}"

    def sort_key(self):
        if self.span is None:
            return ("", 0, 0, self.message)
        return (self.span.file, self.span.start_line, self.span.start_column, self.message)


def undecodable(path, exc: UnicodeDecodeError) -> Diagnostic:
    """Diagnostic for a source file that is not UTF-8 text."""
    return Diagnostic(f"not valid UTF-8 at byte {exc.start}", SourceSpan(str(path), 1, 1, 1, 1), "encoding")
