"""Central-difference gradient checks for layers and whole networks."""

from typing import Callable, Dict, Optional

import numpy as np

from app.core.utils import derive_rng
from app.services.neuralnet.layers import Layer
from app.services.neuralnet.network import Network
from app.services.neuralnet.training import mse_loss


def numerical_gradient(
    f: Callable[[], float], array: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Gradient of ``f`` w.r.t. ``array``, perturbing it in place and restoring."""
    grad = np.zeros_like(array, dtype=float)
    it = np.nditer(array, flags=["multi_index"])
    for _ in it:
        index = it.multi_index
        original = array[index]
        array[index] = original + h
        plus = f()
        array[index] = original - h
        minus = f()
        array[index] = original
        grad[index] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Norm-wise ``|a - n| / (|a| + |n|)``, zero when both vanish."""
    denominator = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denominator < 1e-12:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denominator)


def check_layer_gradients(
    layer: Layer,
    x: np.ndarray,
    seed: int = 0,
    training: bool = False,
    h: float = 1e-5,
) -> Dict[str, float]:
    """
    Relative error of the input gradient and every parameter gradient for the
    scalar ``sum(layer(x) * g)`` with a fixed random ``g``.

    The same generator is rebuilt for every forward pass, so stochastic layers
    see one fixed mask.
    """
    x = np.array(x, dtype=float)

    def forward() -> np.ndarray:
        return layer.forward(x, training, derive_rng(seed))

    upstream = derive_rng(seed, 1).standard_normal(forward().shape)

    def objective() -> float:
        return float(np.sum(forward() * upstream))

    forward()
    dx = layer.backward(upstream)
    analytic = [np.array(g) for g in layer.grads]
    errors = {"input": relative_error(dx, numerical_gradient(objective, x, h))}
    for index, param in enumerate(layer.params):
        numeric = numerical_gradient(objective, param, h)
        errors[f"param{index}"] = relative_error(analytic[index], numeric)
    return errors


def check_network_gradients(
    network: Network,
    frames: np.ndarray,
    targets: np.ndarray,
    h: float = 1e-5,
    max_entries: Optional[int] = None,
) -> Dict[str, float]:
    """
    Relative error of every parameter gradient of the inference-mode MSE.

    ``max_entries`` limits the check to a seeded subset of entries per tensor.
    """

    def objective() -> float:
        return mse_loss(network.forward(frames), targets)[0]

    _, grad = mse_loss(network.forward(frames), targets)
    network.backward(grad)
    analytic = [np.array(g) for g in network.gradients]
    errors: Dict[str, float] = {}
    for index, param in enumerate(network.parameters):
        if max_entries is None or param.size <= max_entries:
            numeric = numerical_gradient(objective, param, h)
            errors[f"param{index}"] = relative_error(analytic[index], numeric)
            continue
        flat = param.reshape(-1)
        picks = derive_rng(index).choice(param.size, max_entries, replace=False)
        numeric = np.zeros(max_entries)
        for k, entry in enumerate(picks):
            original = flat[entry]
            flat[entry] = original + h
            plus = objective()
            flat[entry] = original - h
            minus = objective()
            flat[entry] = original
            numeric[k] = (plus - minus) / (2.0 * h)
        errors[f"param{index}"] = relative_error(
            analytic[index].reshape(-1)[picks], numeric
        )
    return errors
