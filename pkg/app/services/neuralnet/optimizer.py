"""Adam with the per-step ``lr / (1 + decay * t)`` schedule."""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from app.core.exceptions import ShapeMismatchError, TrainingDivergedError
from app.data.models.network import AdamConfig


@dataclass
class AdamState:
    """First and second moments per parameter plus the step counter."""

    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    config: AdamConfig = AdamConfig(),
) -> Tuple[List[np.ndarray], AdamState]:
    """
    One Adam update.

    The step counter is advanced first, so the first update uses ``t = 1`` for
    both the bias correction and the decayed step size.

    Raises:
        ShapeMismatchError: If parameter, gradient or moment shapes disagree
        TrainingDivergedError: If any gradient is NaN or infinite
    """
    if len(params) != len(grads):
        raise ShapeMismatchError(
            f"{len(params)} parameters but {len(grads)} gradients"
        )
    if not state.m:
        state = AdamState.zeros_like(params)
    t = state.t + 1
    lr_t = config.lr / (1.0 + config.decay * t)
    correction1 = 1.0 - config.beta1**t
    correction2 = 1.0 - config.beta2**t

    new_params: List[np.ndarray] = []
    new_m: List[np.ndarray] = []
    new_v: List[np.ndarray] = []
    for index, (w, g, m, v) in enumerate(zip(params, grads, state.m, state.v)):
        if w.shape != g.shape or w.shape != m.shape:
            raise ShapeMismatchError(
                f"parameter {index}: shape {w.shape} vs gradient {g.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(f"Non-finite gradient in parameter {index}")
        m = config.beta1 * m + (1.0 - config.beta1) * g
        v = config.beta2 * v + (1.0 - config.beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params.append(w - lr_t * m_hat / (np.sqrt(v_hat) + config.epsilon))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(m=new_m, v=new_v, t=t)
