"""
Core utilities package containing shared utility functions and helpers.

This package provides common utility functions that are used across the
workbench: angle and random-stream helpers, atomic file writes, config text
transformers and precondition validators.
"""

from .helpers import (
    PathLike,
    atomic_write_bytes,
    atomic_write_text,
    derive_rng,
    derive_seed,
    format_float,
    format_mm_deg,
    moving_average,
    rotation_matrix,
    sha256_text,
    unit_vector,
    wrap_angle_deg,
)
from .transformers import (
    dict_to_key_value_text,
    flatten_dict,
    parse_key_value_text,
    scalar_to_text,
    unflatten_dict,
)
from .validators import (
    validate_finite,
    validate_frame,
    validate_non_negative,
    validate_positive,
    validate_range,
    validate_unit_interval,
)

__all__ = [
    # Helpers
    "PathLike",
    "wrap_angle_deg",
    "unit_vector",
    "rotation_matrix",
    "derive_rng",
    "derive_seed",
    "sha256_text",
    "atomic_write_bytes",
    "atomic_write_text",
    "format_float",
    "format_mm_deg",
    "moving_average",
    # Transformers
    "flatten_dict",
    "unflatten_dict",
    "scalar_to_text",
    "dict_to_key_value_text",
    "parse_key_value_text",
    # Validators
    "validate_positive",
    "validate_non_negative",
    "validate_finite",
    "validate_unit_interval",
    "validate_range",
    "validate_frame",
]
