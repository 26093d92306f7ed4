"""
Network construction from a :class:`NetworkSpec`.

Parameters are held per layer, weights before biases, in declaration order;
the same order is used by the optimizer and by the model file.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.core.constants import ARCHITECTURE_SETTINGS, LABEL_RANGES, TRAINING_DEFAULTS
from app.core.exceptions import ShapeMismatchError
from app.core.utils import derive_rng
from app.data.models.network import (
    LayerSpec,
    ModelArtifact,
    NetworkSpec,
    TrainingHistory,
)
from app.services.neuralnet.layers import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool2x2,
    ReLU,
    Shape,
    conv_output_size,
    same_padding,
)

logger = structlog.get_logger()


def _block_stack(dropout: float) -> List[LayerSpec]:
    layers: List[LayerSpec] = []
    for filters in ARCHITECTURE_SETTINGS["BLOCK_FILTERS"]:
        layers += [
            LayerSpec(
                kind="conv2d",
                kernel=ARCHITECTURE_SETTINGS["BLOCK_KERNEL"],
                filters=filters,
                same_pad=True,
            ),
            LayerSpec(kind="relu"),
            LayerSpec(kind="maxpool2x2"),
        ]
    layers += [
        LayerSpec(kind="flatten"),
        LayerSpec(kind="dense", units=ARCHITECTURE_SETTINGS["DENSE_UNITS"]),
        LayerSpec(kind="relu"),
        LayerSpec(kind="dropout", rate=dropout),
        LayerSpec(kind="dense", units=2),
    ]
    return layers


def build_arch_A(
    image_size: int = 128, dropout: float = TRAINING_DEFAULTS["DROPOUT"]
) -> NetworkSpec:
    """
    Five conv3x3/ReLU/maxpool blocks, a 64-unit dense layer, dropout and a
    two-unit linear output.
    """
    return NetworkSpec(
        architecture="A",
        input_shape=(image_size, image_size, 1),
        layers=_block_stack(dropout),
    )


def build_arch_B(
    image_size: int = 128, dropout: float = TRAINING_DEFAULTS["DROPOUT"]
) -> NetworkSpec:
    """The Arch-A stack behind two unpooled same-padded conv5x5 layers."""
    front: List[LayerSpec] = []
    for _ in range(ARCHITECTURE_SETTINGS["FRONT_LAYERS"]):
        front += [
            LayerSpec(
                kind="conv2d",
                kernel=ARCHITECTURE_SETTINGS["FRONT_KERNEL"],
                filters=ARCHITECTURE_SETTINGS["FRONT_FILTERS"],
                same_pad=True,
            ),
            LayerSpec(kind="relu"),
        ]
    return NetworkSpec(
        architecture="B",
        input_shape=(image_size, image_size, 1),
        layers=front + _block_stack(dropout),
    )


ARCHITECTURE_BUILDERS = {"A": build_arch_A, "B": build_arch_B}


def shape_trace(spec: NetworkSpec) -> List[Shape]:
    """
    Activation shapes (C, H, W) or (D,) after every layer, computed from the
    spec alone.

    Raises:
        ShapeMismatchError: If the layer stack does not fit the input
    """
    height, width, channels = spec.input_shape
    shape: Shape = (channels, height, width)
    shapes: List[Shape] = []
    for index, layer in enumerate(spec.layers):
        if layer.kind == "conv2d":
            if len(shape) != 3:
                raise ShapeMismatchError(f"layer {index}: conv2d after flatten")
            pad = same_padding(layer.kernel) if layer.same_pad else 0
            h = conv_output_size(shape[1], layer.kernel, layer.stride, pad)
            w = conv_output_size(shape[2], layer.kernel, layer.stride, pad)
            if h < 1 or w < 1:
                raise ShapeMismatchError(f"layer {index}: kernel exceeds {shape}")
            shape = (layer.filters, h, w)
        elif layer.kind == "maxpool2x2":
            if len(shape) != 3 or shape[1] < 2 or shape[2] < 2:
                raise ShapeMismatchError(f"layer {index}: cannot pool {shape}")
            shape = (shape[0], shape[1] // 2, shape[2] // 2)
        elif layer.kind == "flatten":
            shape = (int(np.prod(shape)),)
        elif layer.kind == "dense":
            if len(shape) != 1:
                raise ShapeMismatchError(f"layer {index}: dense before flatten")
            shape = (layer.units,)
        shapes.append(shape)
    return shapes


def parameter_count(spec: NetworkSpec) -> int:
    """Number of trainable scalars implied by the spec."""
    height, width, channels = spec.input_shape
    previous: Shape = (channels, height, width)
    total = 0
    for layer, shape in zip(spec.layers, shape_trace(spec)):
        if layer.kind == "conv2d":
            total += layer.filters * (previous[0] * layer.kernel**2 + 1)
        elif layer.kind == "dense":
            total += layer.units * (previous[0] + 1)
        previous = shape
    return total


class Network:
    """
    Layer stack with parameters, forward and backward passes.

    Example:
        ```python
        network = Network(build_arch_A(64), seed=7)
        outputs = network.forward(batch)  # (N, 2), normalized units
        ```
    """

    def __init__(
        self,
        spec: NetworkSpec,
        seed: int = 0,
        dtype: str = "float64",
        r_range: Tuple[float, float] = LABEL_RANGES["R_MM"],
        theta_range: Tuple[float, float] = LABEL_RANGES["THETA_DEG"],
        initialize: bool = True,
    ):
        self.spec = spec
        self.dtype = dtype
        self.r_range = r_range
        self.theta_range = theta_range
        self.layers: List[Layer] = []
        height, width, channels = spec.input_shape
        shape: Shape = (channels, height, width)
        for index, layer_spec in enumerate(spec.layers):
            rng = derive_rng(seed, index) if initialize else None
            layer = self._make_layer(layer_spec, shape, rng)
            shape = layer.output_shape(shape)
            self.layers.append(layer)

    def _make_layer(
        self, spec: LayerSpec, shape: Shape, rng: Optional[np.random.Generator]
    ) -> Layer:
        if spec.kind == "conv2d":
            return Conv2D(
                shape[0],
                spec.filters,
                spec.kernel,
                spec.stride,
                spec.same_pad,
                rng,
                self.dtype,
            )
        if spec.kind == "dense":
            return Dense(shape[0], spec.units, rng, self.dtype)
        if spec.kind == "relu":
            return ReLU()
        if spec.kind == "maxpool2x2":
            return MaxPool2x2()
        if spec.kind == "flatten":
            return Flatten()
        return Dropout(spec.rate)

    @property
    def input_hw(self) -> Tuple[int, int]:
        return self.spec.input_shape[0], self.spec.input_shape[1]

    @property
    def parameters(self) -> List[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    @property
    def gradients(self) -> List[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    @property
    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.parameters))

    def set_parameters(self, parameters: Sequence[np.ndarray]) -> None:
        """
        Replace all parameters, declaration order.

        Raises:
            ShapeMismatchError: If the count or any shape differs
        """
        current = self.parameters
        if len(parameters) != len(current):
            raise ShapeMismatchError(
                f"expected {len(current)} parameter tensors, got {len(parameters)}"
            )
        for index, (old, new) in enumerate(zip(current, parameters)):
            if tuple(old.shape) != tuple(np.shape(new)):
                raise ShapeMismatchError(
                    f"parameter {index}: expected shape {old.shape}, "
                    f"got {np.shape(new)}"
                )
        cursor = 0
        for layer in self.layers:
            count = len(layer.params)
            layer.params = [
                np.array(p, dtype=self.dtype)
                for p in parameters[cursor : cursor + count]
            ]
            cursor += count

    def prepare_input(self, frames: np.ndarray) -> np.ndarray:
        """
        Cast (N, H, W) or (N, C, H, W) frames to the network's input layout.

        Raises:
            ShapeMismatchError: If the spatial size or channel count differs
        """
        x = np.asarray(frames)
        if x.ndim == 3:
            x = x[:, None, :, :]
        height, width, channels = self.spec.input_shape
        if x.ndim != 4 or x.shape[1:] != (channels, height, width):
            raise ShapeMismatchError(
                f"network expects input {height}x{width}x{channels}, "
                f"got array of shape {np.shape(frames)}"
            )
        return x.astype(self.dtype, copy=False)

    def forward(
        self,
        frames: np.ndarray,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> np.ndarray:
        x = self.prepare_input(frames)
        for layer in self.layers:
            x = layer.forward(x, training, rng)
        return x

    def backward(self, grad: np.ndarray) -> None:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def to_artifact(self, history: Optional[TrainingHistory] = None) -> ModelArtifact:
        return ModelArtifact(
            spec=self.spec,
            r_range=self.r_range,
            theta_range=self.theta_range,
            parameters=[np.array(p, dtype=np.float32) for p in self.parameters],
            history=history,
        )

    @classmethod
    def from_artifact(
        cls, artifact: ModelArtifact, dtype: str = "float64"
    ) -> "Network":
        network = cls(
            artifact.spec,
            dtype=dtype,
            r_range=artifact.r_range,
            theta_range=artifact.theta_range,
            initialize=False,
        )
        network.set_parameters(artifact.parameters)
        return network


def build_network(
    arch: str, image_size: int, seed: int = 0, dtype: str = "float64"
) -> Network:
    """Initialized network for architecture ``A`` or ``B``."""
    network = Network(ARCHITECTURE_BUILDERS[arch](image_size), seed=seed, dtype=dtype)
    logger.info(
        "Built network",
        architecture=arch,
        image_size=image_size,
        parameters=network.parameter_count,
    )
    return network
