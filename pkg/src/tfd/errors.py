"""Exception types raised across the package."""


class TFDError(Exception):
    """Base class for all package errors."""


class MalformedLine(TFDError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NonFiniteTimestamp(MalformedLine):
    pass


class EmptyTrainingSet(TFDError, ValueError):
    pass


class InvalidConfig(TFDError, ValueError):
    pass


class InsufficientAttackSegments(TFDError, ValueError):
    pass


class ShapeMismatch(TFDError, ValueError):
    pass


class GraphNotRecorded(TFDError, RuntimeError):
    pass


class CorruptFile(TFDError, ValueError):
    pass


class InsufficientRuns(TFDError, ValueError):
    pass


class LengthMismatch(TFDError, ValueError):
    pass


class BadPreset(TFDError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "bad preset"
