"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class ChromacError(Exception):
    """Base class for all user-facing errors."""

    kind = "error"


class InvalidInputError(ChromacError, ValueError):
    kind = "invalid-input"


class DomainError(ChromacError, ArithmeticError):
    """Mathematically undefined evaluation (division by zero, negative root...)."""

    kind = "domain-error"


class SourceError(ChromacError):
    """An error tied to a location in program source."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(self.__str__())

    def __str__(self) -> str:
        if self.line is None:
            return f"{self.kind}: {self.message}"
        return f"{self.line}:{self.col}: {self.kind}: {self.message}"


class ParseError(SourceError):
    kind = "parse-error"


class DuplicateBindingError(SourceError):
    kind = "duplicate-binding"


class UnknownTypeError(SourceError):
    kind = "unknown-type"


class UnresolvedVariableError(SourceError):
    kind = "unresolved-variable"


class NoOutputError(SourceError):
    kind = "no-output"


class TypeCheckError(SourceError):
    kind = "type-error"


class TypeMismatchError(TypeCheckError):
    kind = "type-mismatch"


class DimensionMismatchError(TypeCheckError):
    kind = "dimension-mismatch"


class IllegalCastError(TypeCheckError):
    kind = "illegal-cast"


class UnknownChannelError(TypeCheckError):
    kind = "unknown-channel"


class ShapeError(ChromacError):
    kind = "shape-error"


class RuntimeEvalError(ChromacError):
    kind = "runtime-error"

    def __init__(self, message: str, node_id: int | None = None):
        self.node_id = node_id
        if node_id is not None:
            message = f"node {node_id}: {message}"
        super().__init__(message)


class NonFiniteError(RuntimeEvalError):
    kind = "non-finite"


class PowDomainError(RuntimeEvalError):
    kind = "pow-domain"


class TensorFormatError(ChromacError):
    kind = "tensor-format"


class InternalError(ChromacError):
    """A defect in the compiler itself, never the user's fault."""

    kind = "internal-error"
