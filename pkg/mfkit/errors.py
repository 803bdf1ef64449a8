"""Exception hierarchy for mfkit.

Every domain error is a ``ValueError`` so callers catching the builtin keep
working. Failed verifications are never raised; they come back as reports.
"""

from typing import Optional


class MFKitError(ValueError):
    """Base class for all mfkit errors."""


class VariableMismatchError(MFKitError):
    """Operands live over different variable lists."""


class DimensionMismatchError(MFKitError):
    """Matrix shapes do not fit together."""


class PotentialMismatchError(MFKitError):
    """An operation needs equal potentials and got different ones."""


class NotInvertibleError(MFKitError):
    """A gauge or structure is not invertible at the origin."""


class VariableCollisionError(MFKitError):
    """Fresh variable names are already in use."""


class NonIsolatedSingularityError(MFKitError):
    """The Tjurina algebra of the potential is infinite-dimensional."""


class NonStabilizationError(MFKitError):
    """Truncated dimensions did not stabilize within the degree bound."""


class BudgetExceededError(MFKitError):
    """A Gröbner or linear-solve step budget was exhausted."""


class StructureError(MFKitError):
    """A bilinear structure is inconsistent with the requested operation."""


class DocumentError(MFKitError):
    """Malformed input document, optionally carrying a source position."""

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ) -> None:
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)
