from typing import Any, Dict, Optional


class ApplicationError(Exception):
    """Base exception for the application."""

    exit_code: int = 3

    def __init__(
        self,
        message: str,
        code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.code = code
        self.details = details or {}
        super().__init__(self.message)


class ValidationError(ApplicationError):
    """Raised when an argument violates an operation's precondition."""

    exit_code = 2

    def __init__(self, message: str, code: str = "VALIDATION_ERROR"):
        super().__init__(message, code)


class ConfigurationError(ApplicationError):
    """Raised when an experiment configuration cannot be honoured."""

    exit_code = 2

    def __init__(self, message: str, code: str = "CONFIGURATION_ERROR"):
        super().__init__(message, code)


class NotFoundError(ApplicationError):
    """Raised when an input file is missing."""

    exit_code = 2

    def __init__(self, message: str, code: str = "NOT_FOUND"):
        super().__init__(message, code)


class FormatError(ApplicationError):
    """Raised when a binary file is malformed or truncated."""

    def __init__(self, message: str, offset: int, section: str):
        super().__init__(
            f"{message} (section '{section}' at byte {offset})",
            "FORMAT_ERROR",
            {"offset": offset, "section": section},
        )
        self.offset = offset
        self.section = section


class ShapeMismatchError(ApplicationError):
    """Raised when an array does not fit the network's input shape."""

    def __init__(self, message: str, code: str = "SHAPE_MISMATCH"):
        super().__init__(message, code)


class TrainingDivergedError(ApplicationError):
    """Raised when a loss or gradient becomes NaN or infinite."""

    def __init__(
        self, message: str = "Training diverged", epoch: Optional[int] = None
    ):
        super().__init__(message, "TRAINING_DIVERGED", {"epoch": epoch})
        self.epoch = epoch


class PolicyError(ApplicationError):
    """Raised when the servo law receives a non-finite prediction."""

    def __init__(self, message: str, code: str = "POLICY_ERROR"):
        super().__init__(message, code)


class StorageError(ApplicationError):
    """Raised when an output cannot be written."""

    def __init__(self, message: str, code: str = "STORAGE_ERROR"):
        super().__init__(message, code)
