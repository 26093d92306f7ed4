"""
Experiment configuration shared by every command.

The text form is the flattened ``key = value`` listing written into each
output directory; parsing it yields an identical configuration.
"""

from typing import Literal, Optional

from pydantic import Field

from app.core.config import settings
from app.core.constants import TRAINING_DEFAULTS
from app.core.utils import dict_to_key_value_text, parse_key_value_text, sha256_text
from app.data.models.base import BaseDataModel
from app.data.models.sensor import ContactParams
from app.data.models.servo import ServoParams


class TrainingOverrides(BaseDataModel):
    batch_size: int = Field(default=TRAINING_DEFAULTS["BATCH_SIZE"], ge=1)
    max_epochs: int = Field(default=TRAINING_DEFAULTS["MAX_EPOCHS"], ge=1)
    patience: int = Field(default=TRAINING_DEFAULTS["PATIENCE"], ge=1)
    augment: bool = False
    lr: Optional[float] = Field(default=None, gt=0)
    dtype: Literal["float64", "float32"] = settings.COMPUTE_DTYPE


class ExperimentConfig(BaseDataModel):
    """Resolved parameters of one command invocation."""

    object: str = "disk"
    mode: Literal["tap", "slide"] = "tap"
    arch: Optional[Literal["A", "B"]] = None
    seed: int = settings.DEFAULT_SEED
    out: str = settings.OUTPUT_DIR
    n: int = 2000
    image_size: int = Field(default=settings.IMAGE_SIZE, ge=8)
    noise: float = Field(default=settings.PIXEL_NOISE, ge=0)
    workers: int = Field(default=settings.WORKERS, ge=1)
    dataset: Optional[str] = None
    model: Optional[str] = None
    slide_model: Optional[str] = None
    template: Optional[str] = None
    oracle: bool = False
    eval_frames: Literal["all", "center"] = "all"
    start_r: float = 0.0
    start_theta: float = 0.0
    max_steps: Optional[int] = Field(default=None, ge=1)
    servo: ServoParams = ServoParams()
    contact: ContactParams = ContactParams()
    training: TrainingOverrides = TrainingOverrides()

    def to_text(self) -> str:
        """Flat ``key = value`` text form, keys sorted."""
        return dict_to_key_value_text(self.model_dump(mode="json"))

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls.model_validate(parse_key_value_text(text))

    @property
    def config_hash(self) -> str:
        return sha256_text(self.to_text())
