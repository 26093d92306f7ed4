"""
Data transformation utilities for the flat ``key = value`` config form.

Nested configuration sections are flattened with a ``.`` separator for the
text form and unflattened again when the text is parsed.
"""

from typing import Any, Dict, List


def flatten_dict(
    nested_dict: Dict[str, Any], separator: str = ".", prefix: str = ""
) -> Dict[str, Any]:
    """
    Flatten a nested dictionary into a single-level dictionary.

    Args:
        nested_dict: Dictionary to flatten
        separator: Separator for nested keys (default: '.')
        prefix: Prefix for keys (used in recursion)

    Returns:
        Flattened dictionary

    Example:
        ```python
        >>> flatten_dict({"servo": {"step_mm": 3.0}, "seed": 7})
        {'servo.step_mm': 3.0, 'seed': 7}
        ```
    """
    flattened: Dict[str, Any] = {}

    for key, value in nested_dict.items():
        new_key = f"{prefix}{separator}{key}" if prefix else key

        if isinstance(value, dict):
            flattened.update(flatten_dict(value, separator, new_key))
        else:
            flattened[new_key] = value

    return flattened


def unflatten_dict(flat_dict: Dict[str, Any], separator: str = ".") -> Dict[str, Any]:
    """
    Unflatten a flattened dictionary back to nested structure.

    Example:
        ```python
        >>> unflatten_dict({'servo.step_mm': 3.0, 'seed': 7})
        {'servo': {'step_mm': 3.0}, 'seed': 7}
        ```
    """
    result: Dict[str, Any] = {}

    for key, value in flat_dict.items():
        keys = key.split(separator)
        current = result

        for k in keys[:-1]:
            if k not in current:
                current[k] = {}
            current = current[k]

        current[keys[-1]] = value

    return result


def scalar_to_text(value: Any) -> str:
    """
    Render a config scalar so that :func:`parse_key_value_text` reads it back.

    Floats use ``repr`` (shortest round-trip form), booleans are lower-case,
    ``None`` is written as ``none``.
    """
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dict_to_key_value_text(data: Dict[str, Any]) -> str:
    """Serialize a (possibly nested) dict as sorted ``key = value`` lines."""
    flat = flatten_dict(data)
    lines: List[str] = [f"{key} = {scalar_to_text(flat[key])}" for key in sorted(flat)]
    return "\n".join(lines) + "\n"


def parse_key_value_text(text: str) -> Dict[str, Any]:
    """
    Parse ``key = value`` lines into a nested dict of strings.

    Blank lines and ``#`` comments are skipped. ``none`` becomes ``None``;
    every other value stays a string for the model layer to coerce.

    Raises:
        ValueError: If a non-comment line has no ``=``
    """
    flat: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        flat[key] = None if value.lower() == "none" else value
    return unflatten_dict(flat)
