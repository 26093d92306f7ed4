"""
Numpy convolutional network for edge-pose regression: layers, network
builders, Adam, training and gradient checks.
"""

from .gradcheck import (
    check_layer_gradients,
    check_network_gradients,
    numerical_gradient,
    relative_error,
)
from .initializers import fans, glorot_bound, glorot_uniform_init
from .layers import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool2x2,
    ReLU,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    dropout_apply,
    maxpool2x2_backward,
    maxpool2x2_forward,
    relu_backward,
    relu_forward,
)
from .network import (
    ARCHITECTURE_BUILDERS,
    Network,
    build_arch_A,
    build_arch_B,
    build_network,
    parameter_count,
    shape_trace,
)
from .optimizer import AdamState, adam_step
from .training import (
    EarlyStopping,
    denormalize,
    evaluate_loss,
    mse_loss,
    normalize_labels,
    predict,
    predict_batch,
    train,
)

__all__ = [
    "fans",
    "glorot_bound",
    "glorot_uniform_init",
    "Layer",
    "Conv2D",
    "ReLU",
    "MaxPool2x2",
    "Flatten",
    "Dense",
    "Dropout",
    "conv2d_forward",
    "conv2d_backward",
    "maxpool2x2_forward",
    "maxpool2x2_backward",
    "relu_forward",
    "relu_backward",
    "dense_forward",
    "dense_backward",
    "dropout_apply",
    "ARCHITECTURE_BUILDERS",
    "Network",
    "build_arch_A",
    "build_arch_B",
    "build_network",
    "parameter_count",
    "shape_trace",
    "AdamState",
    "adam_step",
    "EarlyStopping",
    "mse_loss",
    "evaluate_loss",
    "normalize_labels",
    "denormalize",
    "train",
    "predict",
    "predict_batch",
    "check_layer_gradients",
    "check_network_gradients",
    "numerical_gradient",
    "relative_error",
]
