"""
Mini-batch training with early stopping, and inference helpers.

Labels are trained in normalized units: each range maps linearly onto
[-1, 1]. Every random decision (shuffle, frame choice, shift, dropout mask)
comes from a stream derived from the training seed and the epoch, so a run
is reproducible for a fixed seed and dtype.
"""

from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog

from app.core.exceptions import (
    ShapeMismatchError,
    TrainingDivergedError,
    ValidationError,
)
from app.core.utils import derive_rng
from app.data.models.dataset import Dataset
from app.data.models.network import EpochRecord, TrainConfig, TrainingHistory
from app.data.models.servo import EdgePose
from app.services.dataset import augment_shift
from app.services.neuralnet.network import Network
from app.services.neuralnet.optimizer import AdamState, adam_step

logger = structlog.get_logger()

Range = Tuple[float, float]

_EPOCH_STREAM = 1
_SHIFT_STREAM = 2
_DROPOUT_STREAM = 3


def _scale(bounds: Range) -> Tuple[float, float]:
    low, high = bounds
    return (high + low) / 2.0, (high - low) / 2.0


def normalize_labels(
    labels: np.ndarray, r_range: Range, theta_range: Range
) -> np.ndarray:
    """Map (N, 2) [r mm, theta deg] labels onto [-1, 1] per column."""
    labels = np.asarray(labels, dtype=float)
    (r_mid, r_half), (t_mid, t_half) = _scale(r_range), _scale(theta_range)
    return np.stack(
        [(labels[:, 0] - r_mid) / r_half, (labels[:, 1] - t_mid) / t_half], axis=1
    )


def denormalize(outputs: np.ndarray, r_range: Range, theta_range: Range) -> np.ndarray:
    """Inverse of :func:`normalize_labels`."""
    outputs = np.asarray(outputs, dtype=float)
    (r_mid, r_half), (t_mid, t_half) = _scale(r_range), _scale(theta_range)
    return np.stack(
        [r_mid + r_half * outputs[:, 0], t_mid + t_half * outputs[:, 1]], axis=1
    )


def mse_loss(outputs: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean squared error over all outputs and its gradient."""
    if outputs.shape != targets.shape:
        raise ShapeMismatchError(
            f"outputs {outputs.shape} do not match targets {targets.shape}"
        )
    diff = outputs - targets
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


class EarlyStopping:
    """
    Stop once validation loss has not strictly improved for ``patience``
    consecutive epochs, remembering the best parameters seen.
    """

    def __init__(self, patience: int):
        if patience < 1:
            raise ValidationError(f"patience must be >= 1, got {patience}")
        self.patience = patience
        self.best_loss = float("inf")
        self.best_epoch = 0
        self.best_parameters: List[np.ndarray] = []
        self.wait = 0

    def update(self, epoch: int, val_loss: float, parameters: List[np.ndarray]) -> bool:
        """Record an epoch; returns True when it is a new best."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.best_parameters = [p.copy() for p in parameters]
            self.wait = 0
            return True
        self.wait += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.wait >= self.patience


def _check_finite(value: float, where: str, epoch: int) -> None:
    if not np.isfinite(value):
        raise TrainingDivergedError(
            f"{where} loss became non-finite at epoch {epoch}", epoch=epoch
        )


def evaluate_loss(
    network: Network, frames: np.ndarray, targets: np.ndarray, batch_size: int
) -> float:
    """Inference-mode MSE over single frames (N, H, W) and normalized targets."""
    total = 0.0
    for start in range(0, len(frames), batch_size):
        outputs = network.forward(frames[start : start + batch_size])
        loss, _ = mse_loss(outputs, targets[start : start + batch_size])
        total += loss * len(outputs)
    return total / len(frames)


def _check_datasets(network: Network, train_set: Dataset, val_set: Dataset) -> None:
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValidationError("training and validation sets must be non-empty")
    for name, dataset in (("train", train_set), ("val", val_set)):
        if dataset.frame_shape != network.input_hw:
            raise ShapeMismatchError(
                f"{name} frames are {dataset.frame_shape}, "
                f"network expects {network.input_hw}"
            )


def train(
    network: Network,
    train_set: Dataset,
    val_set: Dataset,
    config: TrainConfig = TrainConfig(),
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> TrainingHistory:
    """
    Fit ``network`` in place and restore the best-validation weights.

    Each training sample contributes one frame per epoch, drawn at random from
    its window; validation uses the center frame of every window.

    Raises:
        ShapeMismatchError: If frame sizes do not match the network input
        TrainingDivergedError: If a loss or gradient becomes non-finite
    """
    _check_datasets(network, train_set, val_set)
    y_train = normalize_labels(train_set.labels, config.r_range, config.theta_range)
    y_val = normalize_labels(val_set.labels, config.r_range, config.theta_range)
    x_val = val_set.frames[:, val_set.frames_per_sample // 2]
    network.r_range, network.theta_range = config.r_range, config.theta_range

    n = len(train_set)
    state = AdamState()
    stopper = EarlyStopping(config.patience)
    records: List[EpochRecord] = []
    logger.info(
        "Training started",
        train_samples=n,
        val_samples=len(val_set),
        batch_size=config.batch_size,
        max_epochs=config.max_epochs,
        augment=config.augment,
        dtype=network.dtype,
    )

    for epoch in range(1, config.max_epochs + 1):
        rng = derive_rng(config.seed, _EPOCH_STREAM, epoch)
        order = rng.permutation(n)
        picks = rng.integers(0, train_set.frames_per_sample, size=n)
        total = 0.0
        for batch, start in enumerate(range(0, n, config.batch_size)):
            rows = order[start : start + config.batch_size]
            x = train_set.frames[rows, picks[rows]]
            if config.augment:
                x = np.stack(
                    [
                        augment_shift(
                            frame,
                            derive_rng(config.seed, _SHIFT_STREAM, epoch, int(row)),
                            config.shift_fraction,
                        )
                        for frame, row in zip(x, rows)
                    ]
                )
            dropout_rng = derive_rng(config.seed, _DROPOUT_STREAM, epoch, batch)
            outputs = network.forward(x, training=True, rng=dropout_rng)
            loss, grad = mse_loss(outputs, y_train[rows].astype(outputs.dtype))
            _check_finite(loss, "training", epoch)
            network.backward(grad)
            parameters, state = adam_step(
                network.parameters, network.gradients, state, config.adam
            )
            network.set_parameters(parameters)
            total += loss * len(rows)

        record = EpochRecord(
            epoch=epoch,
            train_loss=total / n,
            val_loss=evaluate_loss(
                network, x_val, y_val.astype(network.dtype), config.batch_size
            ),
        )
        _check_finite(record.val_loss, "validation", epoch)
        records.append(record)
        improved = stopper.update(epoch, record.val_loss, network.parameters)
        logger.info(
            "Epoch finished",
            epoch=epoch,
            train_loss=round(record.train_loss, 6),
            val_loss=round(record.val_loss, 6),
            improved=improved,
        )
        if on_epoch is not None:
            on_epoch(record)
        if stopper.should_stop:
            break

    network.set_parameters(stopper.best_parameters)
    history = TrainingHistory(
        epochs=records,
        best_epoch=stopper.best_epoch,
        best_val_loss=stopper.best_loss,
        stopped_early=len(records) < config.max_epochs,
    )
    logger.info(
        "Training finished",
        epochs=history.epochs_run,
        best_epoch=history.best_epoch,
        best_val_loss=round(history.best_val_loss, 6),
        stopped_early=history.stopped_early,
    )
    return history


def predict_batch(
    network: Network, frames: np.ndarray, batch_size: int = 64
) -> np.ndarray:
    """(N, 2) predictions [r mm, theta deg] for frames (N, H, W)."""
    frames = np.asarray(frames)
    if frames.ndim != 3:
        raise ShapeMismatchError(f"expected frames (N, H, W), got {frames.shape}")
    outputs = [
        network.forward(frames[start : start + batch_size])
        for start in range(0, len(frames), batch_size)
    ]
    if not outputs:
        return np.zeros((0, 2))
    return denormalize(np.concatenate(outputs), network.r_range, network.theta_range)


def predict(network: Network, frame: np.ndarray) -> EdgePose:
    """
    Edge pose for one frame.

    Raises:
        ShapeMismatchError: If the frame size differs from the network input
    """
    frame = np.asarray(frame)
    if frame.shape != network.input_hw:
        raise ShapeMismatchError(
            f"network expects {network.input_hw[0]}x{network.input_hw[1]} frames, "
            f"got {frame.shape}"
        )
    r, theta = predict_batch(network, frame[None])[0]
    return EdgePose(r=float(r), theta=float(theta))
