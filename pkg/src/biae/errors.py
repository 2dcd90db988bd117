"""Shared exception types."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class SchemaError(ValidationError):
    """A corpus record is malformed; names the record and the field."""

    def __init__(self, record_id: str, field: str, message: str):
        self.record_id = record_id
        self.field = field
        super().__init__(f"record {record_id!r}, field {field!r}: {message}")


class InternalError(RuntimeError):
    """A component broke its own contract (e.g. wrong output shape)."""


class GenerationError(RuntimeError):
    """The question generator failed; carries the original cause."""
