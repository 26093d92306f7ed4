"""
Labeled tactile samples and datasets.

A dataset stores its frames as one (N, F, H, W) float32 block so that
collections of a few thousand taps stay cheap to index and to write.
"""

from typing import Any, Dict, Literal, Optional

import numpy as np
from pydantic import model_validator

from app.data.models.base import BaseDataModel

MODE_CODES = {"tap": 0, "slide": 1}
MODE_NAMES = {code: name for name, code in MODE_CODES.items()}


class Sample(BaseDataModel):
    """One tap: its peak-window frames and the commanded edge pose."""

    frames: np.ndarray
    r: float
    theta: float
    mode: Literal["tap", "slide"] = "tap"
    seed: Optional[int] = None


class Dataset(BaseDataModel):
    """
    Frames (N, F, H, W) float32, labels (N, 2) float32 [r mm, theta deg],
    modes (N,) uint8.
    """

    frames: np.ndarray
    labels: np.ndarray
    modes: np.ndarray
    split: Literal["train", "val", "test", "all"] = "all"
    provenance: Dict[str, Any] = {}
    indices: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _consistent(self) -> "Dataset":
        if self.frames.ndim != 4:
            raise ValueError("frames must have shape (N, F, H, W)")
        count = self.frames.shape[0]
        if self.labels.shape != (count, 2):
            raise ValueError("labels must have shape (N, 2)")
        if self.modes.shape != (count,):
            raise ValueError("modes must have shape (N,)")
        if self.indices is not None and self.indices.shape != (count,):
            raise ValueError("indices must have shape (N,)")
        return self

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    @property
    def frame_shape(self) -> tuple:
        return (int(self.frames.shape[2]), int(self.frames.shape[3]))

    @property
    def frames_per_sample(self) -> int:
        return int(self.frames.shape[1])

    @property
    def sample_indices(self) -> np.ndarray:
        """Collection index of every sample (identity when never split)."""
        if self.indices is None:
            return np.arange(len(self))
        return self.indices

    def sample(self, index: int) -> Sample:
        return Sample(
            frames=self.frames[index],
            r=float(self.labels[index, 0]),
            theta=float(self.labels[index, 1]),
            mode=MODE_NAMES[int(self.modes[index])],
        )
