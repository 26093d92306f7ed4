"""
Simulated tactile sensor types: pin lattice, contact protocol, shear state
and the sensor's world pose.
"""

from typing import List, Optional, Tuple

import numpy as np
from pydantic import Field, model_validator

from app.core.config import settings
from app.core.constants import (
    CONTACT_DEFAULTS,
    DEFORMATION_DEFAULTS,
    JITTER_SETTINGS,
    SENSOR_SETTINGS,
    SHEAR_DEFAULTS,
)
from app.data.models.base import BaseDataModel


class PinLattice(BaseDataModel):
    """Rest positions of the pins in the sensor frame (mm), shape (N, 2)."""

    rest_positions: np.ndarray
    ring_count: int = Field(ge=0)
    pitch: float = Field(gt=0)

    @property
    def pin_count(self) -> int:
        return int(self.rest_positions.shape[0])


class ContactParams(BaseDataModel):
    """Tap and slide protocol; depths in mm, positive into the object."""

    depth_above: float = CONTACT_DEFAULTS["DEPTH_ABOVE_MM"]
    press: float = Field(default=CONTACT_DEFAULTS["PRESS_MM"], gt=0)
    frames_per_tap: int = Field(default=CONTACT_DEFAULTS["FRAMES_PER_TAP"], ge=7)
    depth_offset: float = CONTACT_DEFAULTS["DEPTH_OFFSET_MM"]
    slide_drop: float = Field(default=CONTACT_DEFAULTS["SLIDE_DROP_MM"], gt=0)
    slide_frames: int = Field(default=CONTACT_DEFAULTS["SLIDE_FRAMES"], ge=1)

    @property
    def peak_depth(self) -> float:
        """Deepest indentation reached during a tap."""
        return self.press - self.depth_above + self.depth_offset

    @property
    def slide_depth(self) -> float:
        """Constant indentation held while sliding."""
        return max(0.0, self.slide_drop - self.depth_above + self.depth_offset)


class ShearState(BaseDataModel):
    """First-order lag of tangential surface shear (world frame, mm)."""

    s: Tuple[float, float] = (0.0, 0.0)
    decay: float = Field(default=SHEAR_DEFAULTS["DECAY"], ge=0.0, lt=1.0)
    gain: float = Field(default=SHEAR_DEFAULTS["GAIN"], ge=0.0)
    cap: float = Field(default=SHEAR_DEFAULTS["CAP_MM"], ge=0.0)

    @model_validator(mode="after")
    def _bounded(self) -> "ShearState":
        if float(np.hypot(*self.s)) > self.cap * (1.0 + 1e-12):
            raise ValueError("shear magnitude exceeds cap")
        return self

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.s, dtype=float)

    @property
    def magnitude(self) -> float:
        return float(np.hypot(*self.s))


class TapJitter(BaseDataModel):
    """Per-tap anisotropic scale and offset standing in for small tilt."""

    scale_x: float = Field(
        default=1.0, ge=JITTER_SETTINGS["SCALE_LOW"], le=JITTER_SETTINGS["SCALE_HIGH"]
    )
    scale_y: float = Field(
        default=1.0, ge=JITTER_SETTINGS["SCALE_LOW"], le=JITTER_SETTINGS["SCALE_HIGH"]
    )
    offset: Tuple[float, float] = (0.0, 0.0)

    @model_validator(mode="after")
    def _small_offset(self) -> "TapJitter":
        if float(np.hypot(*self.offset)) > JITTER_SETTINGS["MAX_OFFSET_MM"] + 1e-12:
            raise ValueError("jitter offset exceeds the allowed translation")
        return self


class SensorState(BaseDataModel):
    """World-frame pose of the sensor plus its contact and shear state."""

    x: float
    y: float
    heading: float
    in_contact: bool = False
    shear: ShearState = ShearState()

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


class TapResult(BaseDataModel):
    """Frames of one tap or slide segment, ordered in time."""

    frames: List[np.ndarray]
    depths: List[float]
    no_contact: bool


class DeformationParams(BaseDataModel):
    """
    Pin-field response: radial spreading from the contact centroid under a
    cosine dome, weaker over free space.
    """

    stiffness: float = Field(default=DEFORMATION_DEFAULTS["STIFFNESS_K"], ge=0)
    edge_softness: float = Field(default=DEFORMATION_DEFAULTS["EDGE_SOFTNESS_MM"], gt=0)
    free_ratio: float = Field(default=DEFORMATION_DEFAULTS["FREE_SPACE_RATIO"], ge=0)
    pad_radius: float = Field(default=SENSOR_SETTINGS["PAD_RADIUS_MM"], gt=0)
    reference_depth: float = Field(
        default=CONTACT_DEFAULTS["PRESS_MM"] - CONTACT_DEFAULTS["DEPTH_ABOVE_MM"], gt=0
    )


class ImageSpec(BaseDataModel):
    """Square sensor-frame window of ``span_mm`` imaged onto ``size`` pixels."""

    size: int = Field(default=settings.IMAGE_SIZE, ge=8)
    span_mm: float = Field(default=settings.IMAGE_SPAN_MM, gt=0)
    blob_sigma_px: Optional[float] = Field(default=None, gt=0)

    @property
    def px_per_mm(self) -> float:
        return self.size / self.span_mm

    @property
    def sigma(self) -> float:
        """Blob width, scaled from the 128 px reference unless set explicitly."""
        if self.blob_sigma_px is not None:
            return self.blob_sigma_px
        return settings.BLOB_SIGMA_PX * self.size / 128.0
