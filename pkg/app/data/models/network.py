"""
Network description, optimizer and training configuration, and the
persisted model artifact.
"""

from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import Field, model_validator

from app.core.constants import ADAM_DEFAULTS, LABEL_RANGES, TRAINING_DEFAULTS
from app.data.models.base import BaseDataModel

LayerKind = Literal["conv2d", "relu", "maxpool2x2", "flatten", "dense", "dropout"]

ARCHITECTURE_IDS = {"custom": 0, "A": 1, "B": 2}


class LayerSpec(BaseDataModel):
    """One layer of a network stack."""

    kind: LayerKind
    kernel: int = Field(default=0, ge=0)
    filters: int = Field(default=0, ge=0)
    stride: int = Field(default=1, ge=1)
    same_pad: bool = False
    units: int = Field(default=0, ge=0)
    rate: float = Field(default=0.0, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _params_for_kind(self) -> "LayerSpec":
        if self.kind == "conv2d" and (self.kernel < 1 or self.filters < 1):
            raise ValueError("conv2d needs kernel >= 1 and filters >= 1")
        if self.kind == "dense" and self.units < 1:
            raise ValueError("dense needs units >= 1")
        return self


class NetworkSpec(BaseDataModel):
    """Ordered layer stack over an (H, W, C) input."""

    architecture: Literal["custom", "A", "B"] = "custom"
    input_shape: Tuple[int, int, int]
    layers: List[LayerSpec] = Field(min_length=1)

    @model_validator(mode="after")
    def _ends_in_two_outputs(self) -> "NetworkSpec":
        last = self.layers[-1]
        if last.kind != "dense" or last.units != 2:
            raise ValueError("network must end in a dense layer with 2 outputs")
        return self

    @property
    def architecture_id(self) -> int:
        return ARCHITECTURE_IDS[self.architecture]


class AdamConfig(BaseDataModel):
    """Adam hyperparameters; the step size decays as lr / (1 + decay * t)."""

    lr: float = Field(default=ADAM_DEFAULTS["LEARNING_RATE"], gt=0)
    decay: float = Field(default=ADAM_DEFAULTS["DECAY"], ge=0)
    beta1: float = Field(default=ADAM_DEFAULTS["BETA1"], ge=0, lt=1)
    beta2: float = Field(default=ADAM_DEFAULTS["BETA2"], ge=0, lt=1)
    epsilon: float = Field(default=ADAM_DEFAULTS["EPSILON"], gt=0)


class TrainConfig(BaseDataModel):
    """Training recipe: mini-batch Adam on normalized labels with early stopping."""

    batch_size: int = Field(default=TRAINING_DEFAULTS["BATCH_SIZE"], ge=1)
    max_epochs: int = Field(default=TRAINING_DEFAULTS["MAX_EPOCHS"], ge=1)
    patience: int = Field(default=TRAINING_DEFAULTS["PATIENCE"], ge=1)
    dropout: float = Field(default=TRAINING_DEFAULTS["DROPOUT"], ge=0, lt=1)
    seed: int = 0
    augment: bool = False
    shift_fraction: float = Field(default=TRAINING_DEFAULTS["SHIFT_FRACTION"], ge=0)
    r_range: Tuple[float, float] = LABEL_RANGES["R_MM"]
    theta_range: Tuple[float, float] = LABEL_RANGES["THETA_DEG"]
    adam: AdamConfig = AdamConfig()
    dtype: Literal["float64", "float32"] = "float64"


class EpochRecord(BaseDataModel):
    epoch: int
    train_loss: float
    val_loss: float


class TrainingHistory(BaseDataModel):
    """Per-epoch losses plus the early-stopping outcome."""

    epochs: List[EpochRecord]
    best_epoch: int
    best_val_loss: float
    stopped_early: bool

    @property
    def epochs_run(self) -> int:
        return len(self.epochs)


class ModelArtifact(BaseDataModel):
    """Everything the model file stores: spec, label ranges and parameters."""

    spec: NetworkSpec
    r_range: Tuple[float, float] = LABEL_RANGES["R_MM"]
    theta_range: Tuple[float, float] = LABEL_RANGES["THETA_DEG"]
    parameters: List[np.ndarray]
    history: Optional[TrainingHistory] = None
