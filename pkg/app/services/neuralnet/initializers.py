"""Weight initializers."""

import math
from typing import Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import ValidationError
from app.core.utils import derive_rng


def fans(shape: Sequence[int]) -> Tuple[int, int]:
    """
    Fan-in and fan-out of a weight tensor.

    Dense weights are stored ``(in, out)``; convolution kernels
    ``(filters, channels, kh, kw)``.
    """
    if len(shape) == 2:
        return int(shape[0]), int(shape[1])
    if len(shape) == 4:
        receptive = int(shape[2]) * int(shape[3])
        return int(shape[1]) * receptive, int(shape[0]) * receptive
    raise ValidationError(f"cannot compute fans for shape {tuple(shape)}")


def glorot_bound(shape: Sequence[int]) -> float:
    fan_in, fan_out = fans(shape)
    return math.sqrt(6.0 / (fan_in + fan_out))


def glorot_uniform_init(
    shape: Sequence[int],
    seed: Union[int, np.random.Generator],
    dtype: str = "float64",
) -> np.ndarray:
    """
    Uniform weights in ``+-sqrt(6 / (fan_in + fan_out))``.

    ``seed`` is either an integer or an already derived generator.

    Example:
        ```python
        >>> round(glorot_bound((100, 100)), 5)
        0.17321
        ```
    """
    rng = derive_rng(seed) if isinstance(seed, int) else seed
    bound = glorot_bound(shape)
    return rng.uniform(-bound, bound, size=tuple(shape)).astype(dtype)
