from dataclasses import dataclass
from enum import StrEnum

from ..diagnostics import SourceSpan
from ..kernel import Value, to_text


class WDKind(StrEnum):
    APPLICATION_OUTSIDE_DOMAIN = "application-outside-domain"
    NON_FUNCTIONAL_APPLICATION = "non-functional-application"
    DIVISION_BY_ZERO = "division-by-zero"
    MOD_OUT_OF_DOMAIN = "mod-out-of-domain"
    MIN_MAX_OF_EMPTY_SET = "min-max-of-empty-set"
    ARITHMETIC_OVERFLOW = "arithmetic-overflow"
    UNBOUNDED_QUANTIFICATION = "unbounded-quantification"


@dataclass(frozen=True, slots=True)
class Ok:
    value: Value

    def __str__(self):
        return f"Ok({to_text(self.value)})"


@dataclass(frozen=True, slots=True)
class WDError:
    kind: WDKind
    span: SourceSpan | None
    detail: str = ""

    def __str__(self):
        where = f" at {self.span}" if self.span else ""
        return f"WDError({self.kind}{where}: {self.detail})"


Outcome = Ok | WDError


class WDViolation(Exception):
    """
    Raised inside evaluators; turned into a WDError at the API boundary
    """

    def __init__(self, kind: WDKind, span: SourceSpan | None, detail: str = ""):
        self.error = WDError(kind, span, detail)
        super().__init__(str(self.error))


def outcomes_agree(a: Outcome, b: Outcome) -> bool:
    """Equal values, or well-definedness errors of the same kind."""
    if isinstance(a, Ok) and isinstance(b, Ok):
        return a.value == b.value
    if isinstance(a, WDError) and isinstance(b, WDError):
        return a.kind == b.kind
    return False
