import re
from dataclasses import dataclass
from enum import StrEnum

from ..diagnostics import Diagnostic, SourceSpan
from ..exceptions import SyntaxDiagnosticError


class Kind(StrEnum):
    IDENT = "identifier"
    INT = "integer"
    STRING = "string"
    KEYWORD = "keyword"
    OP = "operator"
    EOF = "end of input"


KEYWORDS = frozenset(
    {
        # rule files
        "RULE",
        "DOC",
        "CLASS",
        "SEVERITY",
        "WHERE",
        "VERIFY",
        "MESSAGE",
        "END",
        # schema files
        "CARRIERS",
        "CONSTANTS",
        "COLLECT",
        "FROM",
        "COLS",
        "PATH",
        "PATHS",
        # scenario files
        "SCENARIO",
        "FIXTURE",
        "EXPECT",
        "ASSIGNMENTS",
        # predicate language
        "TRUE",
        "FALSE",
        "not",
        "or",
        "mod",
        "dom",
        "ran",
        "card",
        "min",
        "max",
        "POW",
        "BOOL",
        "INTEGER",
        "NAT",
        "NAT1",
    }
)

# Longest first so that greedy matching picks `>->>` over `>->` over `>`.
OPERATORS = sorted(
    [
        ">->>", "-->>", ">+>>", "+->>", "<<->", "<->>",
        "+->", "-->", ">->", ">+>", "<->", "|->", "<<|", "|>>", "<=>", "/<:",
        "=>", "<:", "/:", "/=", "<=", ">=", "<|", "|>", "\\/", "/\\", "..",
        "!", "#", "~", "(", ")", "{", "}", "[", "]", ",", "|", "&", "=", ":", "<", ">",
        "+", "-", "*", "/", ";", ".",
    ],
    key=len,
    reverse=True,
)  # fmt: skip

UNSUPPORTED_ARROWS = frozenset({">+>", ">+>>", "+->>", "<<->", "<->>"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<unterminated_comment>/\*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<unterminated_string>")
  | (?P<op>"""
    + "|".join(re.escape(op) for op in OPERATORS)
    + r""")
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: Kind
    text: str
    span: SourceSpan

    def is_(self, text: str) -> bool:
        return self.kind in (Kind.KEYWORD, Kind.OP) and self.text == text

    def __str__(self):
        if self.kind is Kind.EOF:
            return "end of input"
        return f"`{self.text}`"


def _unescape(literal: str) -> str:
    return re.sub(r"\\(.)", r"\1", literal[1:-1])


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    """
    Split source text into tokens, the last one being EOF. Raises SyntaxDiagnosticError.
    """
    tokens: list[Token] = []
    errors: list[Diagnostic] = []
    line, line_start, pos = 1, 0, 0

    def span_of(start: int, end: int) -> SourceSpan:
        # end is exclusive; lines/columns computed from the current line origin
        start_line = line
        start_col = start - line_start + 1
        chunk = text[start:end]
        newlines = chunk.count("\n")
        if newlines:
            end_line = line + newlines
            end_col = len(chunk) - chunk.rfind("\n") - 1
        else:
            end_line = line
            end_col = start_col + max(len(chunk), 1) - 1
        return SourceSpan(file, start_line, start_col, end_line, max(end_col, 1))

    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            errors.append(Diagnostic(f"unexpected character {text[pos]!r}", span_of(pos, pos + 1), "syntax"))
            pos += 1
            continue
        group = match.lastgroup
        value = match.group()
        span = span_of(pos, match.end())
        if group == "unterminated_comment":
            errors.append(Diagnostic("unterminated block comment", span, "syntax"))
            break
        if group == "unterminated_string":
            errors.append(Diagnostic("unterminated string literal", span, "syntax"))
            value = text[pos : text.find("\n", pos) if "\n" in text[pos:] else len(text)]
            match = None
        elif group == "ident":
            kind = Kind.KEYWORD if value in KEYWORDS else Kind.IDENT
            tokens.append(Token(kind, value, span))
        elif group == "int":
            tokens.append(Token(Kind.INT, value, span))
        elif group == "string":
            tokens.append(Token(Kind.STRING, _unescape(value), span))
        elif group == "op":
            tokens.append(Token(Kind.OP, value, span))
        end = match.end() if match else pos + len(value)
        consumed = text[pos:end]
        if "\n" in consumed:
            line += consumed.count("\n")
            line_start = pos + consumed.rfind("\n") + 1
        pos = end

    eof_col = pos - line_start + 1
    tokens.append(Token(Kind.EOF, "", SourceSpan(file, line, eof_col, line, eof_col)))
    if errors:
        raise SyntaxDiagnosticError(errors)
    return tokens
