"""
Servo policy types: predicted edge pose, policy parameters, actions and
trajectories.
"""

from enum import Enum
from typing import List, Optional

from pydantic import Field, field_validator

from app.core.constants import SERVO_DEFAULTS
from app.data.models.base import BaseDataModel
from app.data.models.sensor import SensorState


class EdgePose(BaseDataModel):
    """Predicted (or labeled) pose relative to the edge: r in mm, theta in deg."""

    r: float
    theta: float


class ServoParams(BaseDataModel):
    """Proportional servo law parameters."""

    gain_r: float = SERVO_DEFAULTS["GAIN_R"]
    gain_theta: float = SERVO_DEFAULTS["GAIN_THETA"]
    r0: float = SERVO_DEFAULTS["R0_MM"]
    theta0: float = SERVO_DEFAULTS["THETA0_DEG"]
    step: float = Field(default=SERVO_DEFAULTS["STEP_MM"], gt=0)
    direction: int = 1

    @field_validator("gain_r", "gain_theta", "r0", "theta0")
    @classmethod
    def _finite(cls, value: float) -> float:
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("servo parameters must be finite")
        return value

    @field_validator("direction")
    @classmethod
    def _unit_direction(cls, value: int) -> int:
        if value not in (1, -1):
            raise ValueError("direction must be +1 (counter-clockwise) or -1")
        return value


class Action(BaseDataModel):
    """Radial move (mm), axial rotation (deg) and tangential advance (mm)."""

    dr: float
    dtheta: float
    de: float


class TrajectoryStatus(str, Enum):
    CLOSED = "closed"
    OPEN_COMPLETE = "open-complete"
    FAILED = "failed"
    MAX_STEPS = "max-steps"
    RUNNING = "running"


class TrajectoryRecord(BaseDataModel):
    """
    One sense-act cycle.

    ``state`` is the sensing pose; ``gt_r``/``gt_theta`` are the ground truth at
    the servoed contact pose; ``sensed_r``/``sensed_theta`` at the sensing pose.
    """

    step: int
    state: SensorState
    pred: EdgePose
    gt_r: float
    gt_theta: float
    sensed_r: float
    sensed_theta: float
    action: Action
    in_contact: bool
    arc_position: float
    at_corner: bool = False


class Trajectory(BaseDataModel):
    contour_name: str
    mode: str
    params: ServoParams
    records: List[TrajectoryRecord]
    status: TrajectoryStatus
    start_arc_position: float = 0.0
    progress: float = 0.0
    failure_step: Optional[int] = None


class TrajectoryMetrics(BaseDataModel):
    radial_mae: float
    angle_mae: float
    status: TrajectoryStatus
    steps: int
    progress: float

    @property
    def completed(self) -> bool:
        return self.status in (TrajectoryStatus.CLOSED, TrajectoryStatus.OPEN_COMPLETE)
