"""
Core package containing framework components and shared utilities.

This package provides the foundational components for the workbench:
- Configuration management and settings
- Domain constants (protocol values and chosen defaults)
- Exception handling and exit-code mapping
- Structured logging setup
- Common utilities and helpers

Other packages depend on core; core depends on nothing inside the project.
"""

# Configuration
from app.core.config import Settings, settings

# Constants
from app.core.constants import EXIT_CODES, LABEL_RANGES, SERVO_DEFAULTS

# Exceptions
from app.core.exceptions import (
    ApplicationError,
    ConfigurationError,
    FormatError,
    NotFoundError,
    PolicyError,
    ShapeMismatchError,
    StorageError,
    TrainingDivergedError,
    ValidationError,
)

# Logging
from app.core.logging_config import configure_logging

__all__ = [
    # Configuration
    "Settings",
    "settings",
    # Logging
    "configure_logging",
    # Exceptions
    "ApplicationError",
    "ValidationError",
    "ConfigurationError",
    "NotFoundError",
    "FormatError",
    "ShapeMismatchError",
    "TrainingDivergedError",
    "PolicyError",
    "StorageError",
    # Constants
    "LABEL_RANGES",
    "SERVO_DEFAULTS",
    "EXIT_CODES",
]
