"""Exception hierarchy."""


class SSMError(Exception):
    """Base class for every error raised by ssmkit."""


class InputError(SSMError, ValueError):
    """Malformed or inconsistent user input (shapes, kinds, schema)."""

    def __init__(self, message, path=None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class NumericalError(SSMError, ArithmeticError):
    """A numerical consistency check failed beyond its tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class StageError(SSMError):
    """Wraps an error raised inside one stage of the analysis pipeline."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
