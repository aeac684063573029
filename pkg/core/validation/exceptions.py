from collections.abc import Iterable

from .diagnostics import Diagnostic


class BdvError(Exception):
    """
    Base class of every error raised by the validation engine
    """


class KernelError(BdvError):
    """Internal invariant of the value model was breached."""


class DiagnosticError(BdvError):
    """
    Failure described by one or more source diagnostics
    """

    def __init__(self, diagnostics: Iterable[Diagnostic]):
        self.diagnostics = sorted(diagnostics, key=Diagnostic.sort_key)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    def __reduce__(self):
        return (type(self), (self.diagnostics,))


class SyntaxDiagnosticError(DiagnosticError):
    pass


class TypeDiagnosticError(DiagnosticError):
    pass


class SchemaError(DiagnosticError):
    pass


class DataLoadError(DiagnosticError):
    pass


class ScenarioError(DiagnosticError):
    pass


class CampaignError(BdvError):
    """The campaign refuses to start."""


class EvaluatorDivergence(BdvError):
    """
    The optimized and naive evaluators disagreed; this is an engine defect, never a data defect
    """

    def __init__(self, rule: str, assignment: dict[str, str], primary: object, secondary: object):
        self.rule = rule
        self.assignment = assignment
        self.primary = primary
        self.secondary = secondary
        where = ", ".join(f"{k}={v}" for k, v in assignment.items()) or "<no binding>"
        super().__init__(f"evaluators diverge on rule {rule} at {where}: optimized={primary} naive={secondary}")

    def __reduce__(self):
        return (type(self), (self.rule, self.assignment, self.primary, self.secondary))
