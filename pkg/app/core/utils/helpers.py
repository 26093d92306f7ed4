"""
General utility functions shared across the workbench.

Angle wrapping, seeded random streams, hashing and atomic file writes live
here so that every service derives randomness and writes outputs the same
way.
"""

import hashlib
import math
import os
import tempfile
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from app.core.exceptions import StorageError

PathLike = Union[str, Path]


def wrap_angle_deg(angle: float) -> float:
    """
    Wrap an angle in degrees to the half-open interval (-180, 180].

    Example:
        ```python
        >>> wrap_angle_deg(190.0)
        -170.0
        >>> wrap_angle_deg(-180.0)
        180.0
        ```
    """
    wrapped = math.fmod(angle, 360.0)
    if wrapped <= -180.0:
        wrapped += 360.0
    elif wrapped > 180.0:
        wrapped -= 360.0
    return wrapped


def unit_vector(angle_deg: float) -> np.ndarray:
    """Return the 2D unit vector pointing along ``angle_deg``."""
    a = math.radians(angle_deg)
    return np.array([math.cos(a), math.sin(a)])


def rotation_matrix(angle_deg: float) -> np.ndarray:
    """Return the 2x2 counter-clockwise rotation by ``angle_deg``."""
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Build an independent random stream for ``(seed, *stream)``.

    Streams derived from distinct index tuples are statistically independent,
    so sample-parallel work stays reproducible regardless of worker count.

    Example:
        ```python
        >>> a = derive_rng(7, 0).random()
        >>> b = derive_rng(7, 0).random()
        >>> a == b
        True
        ```
    """
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


def derive_seed(seed: int, *stream: int) -> int:
    """Derive a 32-bit integer seed for ``(seed, *stream)``."""
    state = np.random.SeedSequence([seed, *stream]).generate_state(1)
    return int(state[0])


def sha256_text(text: str) -> str:
    """Return the hex SHA-256 digest of ``text`` encoded as UTF-8."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """
    Write ``payload`` to ``path`` through a temporary file and a rename.

    Raises:
        StorageError: If the directory cannot be created or written
    """
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(
            prefix=f".{target.name}.", suffix=".tmp", dir=str(target.parent)
        )
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
            os.replace(tmp_name, target)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
    except OSError as exc:
        raise StorageError(f"Cannot write {target}: {exc.strerror or exc}") from exc
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Text variant of :func:`atomic_write_bytes` (UTF-8, ``\\n`` newlines)."""
    return atomic_write_bytes(path, text.encode("utf-8"))


def format_float(value: float) -> str:
    """Shortest round-tripping text form of a float."""
    return repr(float(value))


def format_mm_deg(r_mm: float, theta_deg: float) -> str:
    """Format a metric pair the way the disk accuracy table prints it."""
    return f"{r_mm:.2f} mm, {theta_deg:.1f} deg"


def moving_average(values: Sequence[float], window: int) -> np.ndarray:
    """
    Centered moving average with a shrinking window at the borders.

    Args:
        values: Input sequence
        window: Window length (>= 1)

    Returns:
        Array with the same length as ``values``
    """
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        return data
    window = max(1, min(int(window), data.size))
    cumsum = np.concatenate([[0.0], np.cumsum(data)])
    half = window // 2
    idx = np.arange(data.size)
    lo = np.clip(idx - half, 0, data.size)
    hi = np.clip(idx - half + window, 0, data.size)
    return (cumsum[hi] - cumsum[lo]) / (hi - lo)
