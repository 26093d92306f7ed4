"""
Layer primitives on NCHW arrays.

Each operation has a pure forward/backward pair; the ``Layer`` classes wrap
them with parameter storage and the cache needed by the backward pass.
Convolution is a sum over kernel offsets of strided input views contracted
against the kernel slice, which keeps memory at one input-sized buffer.
"""

from typing import List, Optional, Tuple

import numpy as np

from app.core.exceptions import ShapeMismatchError, ValidationError
from app.core.utils import validate_unit_interval
from app.services.neuralnet.initializers import glorot_uniform_init

Shape = Tuple[int, ...]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ShapeMismatchError(message)


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def same_padding(kernel: int) -> int:
    return (kernel - 1) // 2


def conv2d_forward(
    x: np.ndarray, weights: np.ndarray, bias: np.ndarray, stride: int = 1, pad: int = 0
) -> np.ndarray:
    """
    Cross-correlation of ``x`` (N, C, H, W) with ``weights`` (F, C, k, k).

    Raises:
        ShapeMismatchError: If channels disagree or the kernel exceeds the
            padded input
    """
    _require(x.ndim == 4, f"conv2d expects NCHW input, got shape {x.shape}")
    filters, channels, kh, kw = weights.shape
    _require(
        x.shape[1] == channels,
        f"conv2d expects {channels} input channels, got {x.shape[1]}",
    )
    _require(
        x.shape[2] + 2 * pad >= kh and x.shape[3] + 2 * pad >= kw,
        f"conv2d kernel {kh}x{kw} exceeds input {x.shape[2]}x{x.shape[3]}",
    )
    _require(bias.shape == (filters,), "conv2d bias must have one entry per filter")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    ho = conv_output_size(x.shape[2], kh, stride, pad)
    wo = conv_output_size(x.shape[3], kw, stride, pad)
    out = np.zeros((filters, x.shape[0], ho, wo), dtype=np.result_type(x, weights))
    for i in range(kh):
        for j in range(kw):
            rows = slice(i, i + stride * (ho - 1) + 1, stride)
            cols = slice(j, j + stride * (wo - 1) + 1, stride)
            view = xp[:, :, rows, cols]
            out += np.tensordot(weights[:, :, i, j], view, axes=([1], [1]))
    return out.transpose(1, 0, 2, 3) + bias[None, :, None, None]


def conv2d_backward(
    grad: np.ndarray,
    x: np.ndarray,
    weights: np.ndarray,
    stride: int = 1,
    pad: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gradients of :func:`conv2d_forward`.

    Returns:
        Tuple of gradients with respect to input, weights and bias
    """
    kh, kw = weights.shape[2:]
    ho, wo = grad.shape[2:]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    dxp = np.zeros_like(xp)
    dweights = np.zeros_like(weights)
    for i in range(kh):
        for j in range(kw):
            rows = slice(i, i + stride * (ho - 1) + 1, stride)
            cols = slice(j, j + stride * (wo - 1) + 1, stride)
            view = xp[:, :, rows, cols]
            dweights[:, :, i, j] = np.tensordot(
                grad, view, axes=([0, 2, 3], [0, 2, 3])
            )
            dxp[:, :, rows, cols] += np.tensordot(
                grad, weights[:, :, i, j], axes=([1], [0])
            ).transpose(0, 3, 1, 2)
    dbias = grad.sum(axis=(0, 2, 3))
    dx = dxp[:, :, pad : pad + x.shape[2], pad : pad + x.shape[3]] if pad else dxp
    return dx, dweights, dbias


def maxpool2x2_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    2x2 max pooling with stride 2; odd trailing rows and columns are dropped.

    Returns:
        Tuple of pooled output and the winning offset (0..3, scan order) per
        output cell
    """
    _require(x.ndim == 4, f"maxpool expects NCHW input, got shape {x.shape}")
    n, c, h, w = x.shape
    _require(h >= 2 and w >= 2, f"maxpool needs at least 2x2 input, got {h}x{w}")
    ho, wo = h // 2, w // 2
    blocks = (
        x[:, :, : 2 * ho, : 2 * wo]
        .reshape(n, c, ho, 2, wo, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, ho, wo, 4)
    )
    winner = np.argmax(blocks, axis=-1)
    out = np.take_along_axis(blocks, winner[..., None], axis=-1)[..., 0]
    return out, winner


def maxpool2x2_backward(
    grad: np.ndarray, winner: np.ndarray, input_shape: Shape
) -> np.ndarray:
    """Route each output gradient to the input cell that won the pool."""
    n, c, h, w = input_shape
    ho, wo = h // 2, w // 2
    blocks = np.zeros((n, c, ho, wo, 4), dtype=grad.dtype)
    np.put_along_axis(blocks, winner[..., None], grad[..., None], axis=-1)
    dx = np.zeros(input_shape, dtype=grad.dtype)
    dx[:, :, : 2 * ho, : 2 * wo] = (
        blocks.reshape(n, c, ho, wo, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, 2 * ho, 2 * wo)
    )
    return dx


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad: np.ndarray, x: np.ndarray) -> np.ndarray:
    return grad * (x > 0.0)


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map of ``x`` (N, D) with ``weights`` (D, U)."""
    _require(
        x.ndim == 2 and x.shape[1] == weights.shape[0],
        f"dense expects (N, {weights.shape[0]}) input, got {x.shape}",
    )
    return x @ weights + bias


def dense_backward(
    grad: np.ndarray, x: np.ndarray, weights: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return grad @ weights.T, x.T @ grad, grad.sum(axis=0)


def dropout_mask(
    shape: Shape, rate: float, rng: np.random.Generator
) -> np.ndarray:
    """Inverted-dropout multiplier: kept units scaled by ``1 / (1 - rate)``."""
    validate_unit_interval("dropout rate", rate)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def dropout_apply(
    x: np.ndarray,
    rate: float,
    training: bool,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Dropout in training mode, identity at inference.

    Returns:
        Tuple of the output and the multiplier used (None at inference)
    """
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValidationError("dropout in training mode needs a random generator")
    mask = dropout_mask(x.shape, rate, rng).astype(x.dtype)
    return x * mask, mask


class Layer:
    """Base layer: no parameters, identity shape."""

    kind = "layer"

    def __init__(self) -> None:
        self.params: List[np.ndarray] = []
        self.grads: List[np.ndarray] = []

    def output_shape(self, input_shape: Shape) -> Shape:
        return input_shape

    def forward(
        self,
        x: np.ndarray,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv2D(Layer):
    kind = "conv2d"

    def __init__(
        self,
        in_channels: int,
        filters: int,
        kernel: int,
        stride: int = 1,
        same_pad: bool = False,
        rng: Optional[np.random.Generator] = None,
        dtype: str = "float64",
    ):
        super().__init__()
        self.stride = stride
        self.kernel = kernel
        self.pad = same_padding(kernel) if same_pad else 0
        shape = (filters, in_channels, kernel, kernel)
        weights = (
            glorot_uniform_init(shape, rng, dtype)
            if rng is not None
            else np.zeros(shape, dtype=dtype)
        )
        self.params = [weights, np.zeros(filters, dtype=dtype)]
        self.grads = [np.zeros_like(p) for p in self.params]
        self._x: Optional[np.ndarray] = None

    def output_shape(self, input_shape: Shape) -> Shape:
        channels, h, w = input_shape
        _require(
            channels == self.params[0].shape[1],
            f"conv2d expects {self.params[0].shape[1]} channels, got {channels}",
        )
        ho = conv_output_size(h, self.kernel, self.stride, self.pad)
        wo = conv_output_size(w, self.kernel, self.stride, self.pad)
        _require(ho >= 1 and wo >= 1, f"conv2d kernel exceeds input {h}x{w}")
        return (self.params[0].shape[0], ho, wo)

    def forward(self, x, training=False, rng=None):
        self._x = x
        return conv2d_forward(x, self.params[0], self.params[1], self.stride, self.pad)

    def backward(self, grad):
        assert self._x is not None
        dx, dw, db = conv2d_backward(
            grad, self._x, self.params[0], self.stride, self.pad
        )
        self.grads = [dw, db]
        return dx


class ReLU(Layer):
    kind = "relu"

    def __init__(self) -> None:
        super().__init__()
        self._x: Optional[np.ndarray] = None

    def forward(self, x, training=False, rng=None):
        self._x = x
        return relu_forward(x)

    def backward(self, grad):
        return relu_backward(grad, self._x)


class MaxPool2x2(Layer):
    kind = "maxpool2x2"

    def __init__(self) -> None:
        super().__init__()
        self._shape: Shape = ()
        self._winner: Optional[np.ndarray] = None

    def output_shape(self, input_shape: Shape) -> Shape:
        channels, h, w = input_shape
        _require(h >= 2 and w >= 2, f"maxpool needs at least 2x2 input, got {h}x{w}")
        return (channels, h // 2, w // 2)

    def forward(self, x, training=False, rng=None):
        self._shape = x.shape
        out, self._winner = maxpool2x2_forward(x)
        return out

    def backward(self, grad):
        return maxpool2x2_backward(grad, self._winner, self._shape)


class Flatten(Layer):
    kind = "flatten"

    def __init__(self) -> None:
        super().__init__()
        self._shape: Shape = ()

    def output_shape(self, input_shape: Shape) -> Shape:
        return (int(np.prod(input_shape)),)

    def forward(self, x, training=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Dense(Layer):
    kind = "dense"

    def __init__(
        self,
        in_features: int,
        units: int,
        rng: Optional[np.random.Generator] = None,
        dtype: str = "float64",
    ):
        super().__init__()
        shape = (in_features, units)
        weights = (
            glorot_uniform_init(shape, rng, dtype)
            if rng is not None
            else np.zeros(shape, dtype=dtype)
        )
        self.params = [weights, np.zeros(units, dtype=dtype)]
        self.grads = [np.zeros_like(p) for p in self.params]
        self._x: Optional[np.ndarray] = None

    def output_shape(self, input_shape: Shape) -> Shape:
        _require(
            len(input_shape) == 1 and input_shape[0] == self.params[0].shape[0],
            f"dense expects {self.params[0].shape[0]} features, got {input_shape}",
        )
        return (self.params[0].shape[1],)

    def forward(self, x, training=False, rng=None):
        self._x = x
        return dense_forward(x, self.params[0], self.params[1])

    def backward(self, grad):
        dx, dw, db = dense_backward(grad, self._x, self.params[0])
        self.grads = [dw, db]
        return dx


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, rate: float):
        super().__init__()
        self.rate = validate_unit_interval("dropout rate", rate)
        self._mask: Optional[np.ndarray] = None

    def forward(self, x, training=False, rng=None):
        out, self._mask = dropout_apply(x, self.rate, training, rng)
        return out

    def backward(self, grad):
        return grad if self._mask is None else grad * self._mask
