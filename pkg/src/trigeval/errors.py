"""Exception hierarchy.

Every domain error derives from :class:`TrigevalError`; the CLI reports the
class name as the error code.
"""


class TrigevalError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidInput(TrigevalError, ValueError):
    pass


class MissingAssignment(TrigevalError, KeyError):
    def __str__(self) -> str:  # KeyError would repr() the message
        return str(self.args[0]) if self.args else ""


class DegenerateDesign(TrigevalError):
    pass


class MissingTriggerData(TrigevalError):
    pass


class NoTriggers(TrigevalError):
    """Every trigger intensity is zero.

    The treatment effect is zero by definition in that case, so the
    exception carries ``ate = 0.0`` for callers that want to report it.
    """

    ate = 0.0


class InsufficientData(TrigevalError):
    pass


class InvalidMoments(TrigevalError, ValueError):
    pass


class InsufficientObservations(TrigevalError):
    pass


class SchemaError(TrigevalError):
    def __init__(self, message: str, column: str | None = None):
        super().__init__(message)
        self.column = column


class ParseError(TrigevalError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class DuplicateUnit(TrigevalError):
    pass
