"""Exception hierarchy shared by every module of the package."""
from typing import Optional


class FailsafeError(Exception):
    """Base class for all errors raised by failsafe_nr."""


class DomainError(FailsafeError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class SupportError(DomainError):
    """Evaluation at a point excluded from a distribution's support."""


class TailOverflowError(FailsafeError, OverflowError):
    """Normalising mass underflows, e.g. truncation absurdly deep in the tail."""


class EmptyBatchError(DomainError):
    """A simulation batch holds no values."""


class FormatError(FailsafeError, ValueError):
    """A study table is malformed as a whole (header, mixed row kinds)."""


class RowValidationError(FormatError):
    """A single study-table row failed validation.

    Attributes:
        row: 1-based index of the data row (header excluded).
        field: Name of the offending column.
    """

    def __init__(self, row: int, field: str, message: str, value: Optional[str] = None):
        self.row = row
        self.field = field
        self.value = value
        super().__init__(f"row {row}, field `{field}`: {message}")
