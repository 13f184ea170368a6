"""Exception hierarchy.

Every error raised by the engine derives from RelqError so callers can
catch the whole family; the CLI maps subclasses to exit codes.
"""


class RelqError(Exception):
    pass


class SchemaError(RelqError):
    """Unknown attribute, wrong arity, or a value of the wrong type."""


class EncodingError(RelqError):
    """A value exceeds its declared width or cannot be encoded."""


class UnsupportedTupleError(RelqError):
    """A single encoded tuple does not fit on one page."""


class AddressError(RelqError):
    """Page id or slot outside the file."""


class StorageError(RelqError):
    """Corrupt page content or an unreadable file."""


class PoolExhaustedError(RelqError):
    """All buffer frames pinned; an operator exceeded its budget."""


class UsageError(RelqError):
    """API misuse: unpin below zero, bad prefix length, invalid config."""


class ContractViolationError(RelqError):
    """An input promised sorted arrived with an adjacent inversion."""


class PathologicalDataError(RelqError):
    """Hash re-partitioning hit its depth limit without progress."""


class PlanError(RelqError):
    """Plan parse or validation failure, pointing at the offending step."""

    def __init__(self, message: str, step: int | None = None, field: str | None = None):
        self.step = step
        self.field = field
        prefix = ""
        if step is not None:
            prefix += f"step {step}"
        if field is not None:
            prefix += f" field '{field}'" if prefix else f"field '{field}'"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class IngestError(RelqError):
    """Bad CSV input, pointing at the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
