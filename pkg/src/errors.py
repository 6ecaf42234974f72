from typing import Iterable, Optional


class QbmcError(Exception):
    """Base class for every error raised by the model checker."""


class ModelSyntaxError(QbmcError):
    def __init__(self, message: str, line: int, column: int, expected: Iterable[str] = ()):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        detail = f"{line}:{column}: {message}"
        if self.expected:
            detail += f" (expected {', '.join(self.expected)})"
        super().__init__(detail)


class ModelSemanticError(QbmcError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class CompositionError(QbmcError):
    pass


class GeneratorParameterError(QbmcError):
    pass


class EncodingError(QbmcError):
    pass


class SortError(EncodingError):
    pass


class SExprError(QbmcError):
    pass


class SolverError(QbmcError):
    pass


class ModelValueError(SolverError):
    """A solver model binds a value that does not fit the declared sort."""


class TraceDecodeError(QbmcError):
    pass


class OracleBudgetExceeded(QbmcError):
    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"path budget of {budget} exceeded, oracle inapplicable")


class ConfigError(QbmcError):
    pass
