"""
Proportional edge servoing and contour runs.

Each cycle senses at the current pose, predicts the edge pose, corrects the
radial offset and heading towards the set-point and then steps along the
predicted edge tangent. The loop ends when the sensor returns to its first
contact point (closed outlines), passes the end of an open contour, loses the
edge or runs out of steps.
"""

import math
from typing import List, Optional, Protocol, Tuple

import numpy as np
import structlog

from app.core.constants import LABEL_RANGES, SERVO_DEFAULTS
from app.core.exceptions import ConfigurationError, PolicyError, ValidationError
from app.core.utils import (
    derive_rng,
    unit_vector,
    validate_positive,
    wrap_angle_deg,
)
from app.data import TrajectoryRepository
from app.data.models.dataset import Dataset
from app.data.models.geometry import Contour
from app.data.models.sensor import ContactParams, SensorState
from app.data.models.servo import (
    Action,
    EdgePose,
    ServoParams,
    Trajectory,
    TrajectoryMetrics,
    TrajectoryRecord,
    TrajectoryStatus,
)
from app.services.base import BaseService
from app.services.dataset import pose_from_label
from app.services.geometry import corners, edge_pose_gt
from app.services.neuralnet import Network, predict
from app.services.tactile import TactileSensor, pin_displacements

logger = structlog.get_logger()


def servo_step(pred: EdgePose, params: ServoParams = ServoParams()) -> Action:
    """
    Proportional control law.

    Raises:
        PolicyError: If the prediction is not finite
    """
    if not (math.isfinite(pred.r) and math.isfinite(pred.theta)):
        raise PolicyError(f"non-finite prediction r={pred.r!r} theta={pred.theta!r}")
    return Action(
        dr=params.gain_r * (params.r0 - pred.r),
        dtheta=params.gain_theta * (params.theta0 - pred.theta),
        de=params.step,
    )


def apply_action(
    state: SensorState, action: Action, pred: EdgePose, direction: int = 1
) -> SensorState:
    """
    Radial move along the predicted normal, rotation, then the tangential step.

    The predicted outward normal points along ``heading - pred.theta``; the
    tangent is that normal turned +90 deg (counter-clockwise travel) or -90 deg
    when ``direction`` is -1.
    """
    normal_deg = state.heading - pred.theta
    position = state.position + action.dr * unit_vector(normal_deg)
    position = position + action.de * unit_vector(normal_deg + 90.0 * direction)
    return state.model_copy(
        update={
            "x": float(position[0]),
            "y": float(position[1]),
            "heading": state.heading + action.dtheta,
        }
    )


class Perceiver(Protocol):
    """Edge-pose estimator driven by the contour runner."""

    name: str
    needs_frames: bool

    def perceive(
        self, frame: Optional[np.ndarray], state: SensorState, contour: Contour
    ) -> EdgePose:
        ...


class OraclePerceiver:
    """Ground truth at the sensing pose; frames are never rendered."""

    name = "oracle"
    needs_frames = False

    def perceive(
        self, frame: Optional[np.ndarray], state: SensorState, contour: Contour
    ) -> EdgePose:
        gt = edge_pose_gt(contour, state.x, state.y, state.heading)
        return EdgePose(r=gt.r, theta=gt.theta)


class NetworkPerceiver:
    """Trained network applied to one frame."""

    name = "network"
    needs_frames = True

    def __init__(self, network: Network, image_size: int):
        if network.input_hw != (image_size, image_size):
            raise ConfigurationError(
                f"network expects {network.input_hw[0]}x{network.input_hw[1]} "
                f"frames but the sensor renders {image_size}x{image_size}"
            )
        self.network = network

    def perceive(
        self, frame: Optional[np.ndarray], state: SensorState, contour: Contour
    ) -> EdgePose:
        assert frame is not None
        return predict(self.network, frame)


def block_average(frame: np.ndarray, size: int = 32) -> np.ndarray:
    """Downsample a square frame by averaging ``k x k`` blocks to ``size``."""
    height, width = frame.shape[-2:]
    if height % size or width % size:
        return frame.reshape(*frame.shape[:-2], -1)
    kh, kw = height // size, width // size
    blocks = frame.reshape(*frame.shape[:-2], size, kh, size, kw)
    return blocks.mean(axis=(-3, -1)).reshape(*frame.shape[:-2], -1)


class TemplatePerceiver:
    """
    Nearest-neighbour baseline: the mean label of the ``k`` training frames
    closest to the query after block averaging.
    """

    name = "template"
    needs_frames = True

    def __init__(self, dataset: Dataset, k: int = 5, size: int = 32):
        if len(dataset) == 0:
            raise ValidationError("template perceiver needs a non-empty dataset")
        self.k = min(k, len(dataset))
        self.size = size
        centers = dataset.frames[:, dataset.frames_per_sample // 2].astype(float)
        self.templates = block_average(centers, size)
        self.labels = dataset.labels.astype(float)
        self.frame_shape = dataset.frame_shape

    def perceive(
        self, frame: Optional[np.ndarray], state: SensorState, contour: Contour
    ) -> EdgePose:
        assert frame is not None
        if frame.shape != self.frame_shape:
            raise ConfigurationError(
                f"templates are {self.frame_shape}, frame is {frame.shape}"
            )
        query = block_average(np.asarray(frame, dtype=float), self.size)
        distances = np.linalg.norm(self.templates - query, axis=1)
        nearest = np.argsort(distances, kind="stable")[: self.k]
        r, theta = self.labels[nearest].mean(axis=0)
        return EdgePose(r=float(r), theta=float(theta))


def expected_steps(contour: Contour, step: float) -> int:
    return int(math.ceil(contour.length / step))


def _contact_depth(mode: str, contact: ContactParams) -> float:
    return max(0.0, contact.peak_depth if mode == "tap" else contact.slide_depth)


def _arc_gap(a: float, b: float, contour: Contour) -> float:
    gap = b - a
    if contour.closed:
        gap = (gap + contour.length / 2.0) % contour.length - contour.length / 2.0
    return gap


def run_contour(
    contour: Contour,
    perceiver: Perceiver,
    mode: str = "tap",
    params: ServoParams = ServoParams(),
    contact: ContactParams = ContactParams(),
    start: Tuple[float, float] = (0.0, 0.0),
    max_steps: Optional[int] = None,
    seed: int = 0,
    sensor: Optional[TactileSensor] = None,
) -> Trajectory:
    """
    Follow ``contour`` from an edge pose ``start = (r, theta)`` at its anchor.

    Raises:
        ValidationError: If the mode is unknown, the start lies outside the
            sampled radial range or ``max_steps`` is below 1
        PolicyError: If the perceiver returns a non-finite pose
    """
    if mode not in ("tap", "slide"):
        raise ValidationError(f"mode must be 'tap' or 'slide', got {mode!r}")
    r_low, r_high = LABEL_RANGES["R_MM"]
    if not r_low <= start[0] <= r_high:
        raise ValidationError(
            f"start r must lie in [{r_low}, {r_high}] mm, got {start[0]}"
        )
    sensor = sensor or TactileSensor()
    expected = expected_steps(contour, params.step)
    if max_steps is None:
        limit = SERVO_DEFAULTS["MAX_STEPS_FACTOR"] * expected
    else:
        limit = int(validate_positive("max_steps", max_steps))
    closure_radius = SERVO_DEFAULTS["CLOSURE_FACTOR"] * params.step
    min_closure_steps = SERVO_DEFAULTS["CLOSURE_MIN_FRACTION"] * expected
    lost_edge = SERVO_DEFAULTS["LOST_EDGE_MM"]
    corner_positions = [corner.arc_position for corner in corners(contour)]
    depth = _contact_depth(mode, contact)

    state = pose_from_label(contour, start[0], start[1])
    previous = state
    records: List[TrajectoryRecord] = []
    status = TrajectoryStatus.MAX_STEPS
    failure_step: Optional[int] = None
    first_point: Optional[np.ndarray] = None
    travelled = 0.0
    last_arc: Optional[float] = None

    for step in range(limit):
        rng = derive_rng(seed, step)
        frame: Optional[np.ndarray] = None
        if mode == "slide":
            result, shear = sensor.slide(contour, previous, state, contact, rng)
            state = state.model_copy(update={"shear": shear})
            in_contact = not result.no_contact
            frame = result.frames[-1]
        else:
            if perceiver.needs_frames:
                window = sensor.tap_window(contour, state, contact, rng, jitter=True)
                frame = window[len(window) // 2]
            _, fraction = pin_displacements(sensor.lattice, contour, state, depth)
            in_contact = fraction > 0.0

        sensed = edge_pose_gt(contour, state.x, state.y, state.heading)
        if abs(sensed.r) > lost_edge:
            status = TrajectoryStatus.FAILED
            failure_step = step
            break

        pred = perceiver.perceive(frame, state, contour)
        action = servo_step(pred, params)
        servoed = apply_action(
            state, action.model_copy(update={"de": 0.0}), pred, params.direction
        )
        gt = edge_pose_gt(contour, servoed.x, servoed.y, servoed.heading)
        at_corner = any(
            abs(_arc_gap(position, gt.arc_position, contour)) <= params.step
            for position in corner_positions
        )
        records.append(
            TrajectoryRecord(
                step=step,
                state=state.model_copy(update={"in_contact": in_contact}),
                pred=pred,
                gt_r=gt.r,
                gt_theta=gt.theta,
                sensed_r=sensed.r,
                sensed_theta=sensed.theta,
                action=action,
                in_contact=in_contact,
                arc_position=gt.arc_position,
                at_corner=at_corner,
            )
        )
        if last_arc is not None:
            travelled += _arc_gap(last_arc, gt.arc_position, contour)
        last_arc = gt.arc_position

        if first_point is None:
            first_point = servoed.position
        elif (
            contour.closed
            and len(records) >= min_closure_steps
            and np.linalg.norm(servoed.position - first_point) <= closure_radius
        ):
            status = TrajectoryStatus.CLOSED
            break
        if not contour.closed and gt.arc_position >= contour.length - 0.5 * params.step:
            status = TrajectoryStatus.OPEN_COMPLETE
            break

        previous = state
        state = apply_action(state, action, pred, params.direction)

    start_arc = records[0].arc_position if records else 0.0
    progress = abs(travelled) / contour.length
    if status == TrajectoryStatus.CLOSED:
        progress = 1.0
    trajectory = Trajectory(
        contour_name=contour.name,
        mode=mode,
        params=params,
        records=records,
        status=status,
        start_arc_position=start_arc,
        progress=min(progress, 1.0),
        failure_step=failure_step,
    )
    logger.info(
        "Contour run finished",
        object=contour.name,
        mode=mode,
        perceiver=perceiver.name,
        status=status.value,
        steps=len(records),
        progress=round(trajectory.progress, 4),
    )
    return trajectory


def trajectory_metrics(trajectory: Trajectory) -> TrajectoryMetrics:
    """
    Mean absolute radial and angular error of the in-contact records against
    the set-point.

    Raises:
        ValidationError: If no record is in contact
    """
    touching = [record for record in trajectory.records if record.in_contact]
    if not touching:
        raise ValidationError("trajectory has no in-contact records")
    params = trajectory.params
    radial = np.mean([abs(record.gt_r - params.r0) for record in touching])
    angle = np.mean(
        [abs(wrap_angle_deg(record.gt_theta - params.theta0)) for record in touching]
    )
    return TrajectoryMetrics(
        radial_mae=float(radial),
        angle_mae=float(angle),
        status=trajectory.status,
        steps=len(trajectory.records),
        progress=trajectory.progress,
    )


class ServoService(BaseService[Trajectory]):
    """Run contour-following experiments and persist their trajectories."""

    def __init__(self, repository: Optional[TrajectoryRepository] = None):
        super().__init__(repository or TrajectoryRepository(), "ServoService")

    def follow(
        self,
        contour: Contour,
        perceiver: Perceiver,
        mode: str = "tap",
        params: ServoParams = ServoParams(),
        contact: ContactParams = ContactParams(),
        start: Tuple[float, float] = (0.0, 0.0),
        max_steps: Optional[int] = None,
        seed: int = 0,
        sensor: Optional[TactileSensor] = None,
    ) -> Tuple[Trajectory, Optional[TrajectoryMetrics]]:
        trajectory = run_contour(
            contour, perceiver, mode, params, contact, start, max_steps, seed, sensor
        )
        try:
            metrics: Optional[TrajectoryMetrics] = trajectory_metrics(trajectory)
        except ValidationError:
            metrics = None
        self._log_operation(
            "follow",
            {
                "object": contour.name,
                "status": trajectory.status.value,
                "steps": len(trajectory.records),
            },
        )
        return trajectory, metrics
