"""Exception hierarchy shared by the library and the command line."""


class SoftReMishError(Exception):
    """Base class for every error raised by this package."""


class InvalidShapeError(SoftReMishError, ValueError):
    pass


class InvalidRangeError(SoftReMishError, ValueError):
    pass


class OrderingError(SoftReMishError, RuntimeError):
    """A backward pass was requested before the matching forward pass."""


class InvalidLabelError(SoftReMishError, ValueError):
    pass


class ConfigError(SoftReMishError, ValueError):
    """Bad configuration value, unknown key or unreadable config file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DataError(SoftReMishError):
    """Problems with dataset files (exit code 3 on the command line)."""


class IdxFormatError(DataError, ValueError):
    pass


class IdxTruncatedError(DataError, ValueError):
    def __init__(self, what, expected, actual):
        super().__init__(
            f"truncated {what}: expected {expected} payload bytes, got {actual}"
        )
        self.expected = expected
        self.actual = actual


class LabelValueError(DataError, ValueError):
    pass


class DivergedTrainingError(SoftReMishError, ArithmeticError):
    """Raised when a loss or gradient stops being finite."""

    def __init__(self, message, epoch=None, batch=None):
        where = []
        if epoch is not None:
            where.append(f"epoch {epoch}")
        if batch is not None:
            where.append(f"batch {batch}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
