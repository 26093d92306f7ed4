"""
Simulated pin-array tactile sensor.

The sensor frame has +x along the heading and +y to its left. Pins are
displaced by contact with the object, translated by surface shear and then
rendered as Gaussian blobs; image columns run along +x and rows along -y, so
free space appears on the right of a frame taken at zero edge angle.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.core.constants import JITTER_SETTINGS, PEAK_WINDOW, SENSOR_SETTINGS
from app.core.exceptions import ValidationError
from app.core.utils import (
    rotation_matrix,
    validate_non_negative,
    validate_positive,
    wrap_angle_deg,
)
from app.data.models.geometry import Contour
from app.data.models.sensor import (
    ContactParams,
    DeformationParams,
    ImageSpec,
    PinLattice,
    SensorState,
    ShearState,
    TapJitter,
    TapResult,
)
from app.services.geometry import signed_distance

logger = structlog.get_logger()


def lattice_init(
    ring_count: int = SENSOR_SETTINGS["RING_COUNT"],
    pitch: float = SENSOR_SETTINGS["PIN_PITCH_MM"],
) -> PinLattice:
    """
    Hexagonal pin lattice: a center pin and ``6k`` pins on ring ``k``.

    Example:
        ```python
        >>> lattice_init(6, 3.0).pin_count
        127
        ```
    """
    if ring_count < 0:
        raise ValidationError(f"ring_count must be >= 0, got {ring_count}")
    validate_positive("pitch", pitch)
    sites = [(0.0, 0.0)]
    for ring in range(1, ring_count + 1):
        for side in range(6):
            corner = math.radians(60.0 * side)
            along = math.radians(60.0 * side + 120.0)
            for i in range(ring):
                sites.append(
                    (
                        ring * pitch * math.cos(corner) + i * pitch * math.cos(along),
                        ring * pitch * math.sin(corner) + i * pitch * math.sin(along),
                    )
                )
    return PinLattice(
        rest_positions=np.array(sites, dtype=float), ring_count=ring_count, pitch=pitch
    )


def _smoothstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def pin_displacements(
    lattice: PinLattice,
    contour: Contour,
    sensor: SensorState,
    depth: float,
    shear: Optional[ShearState] = None,
    jitter: Optional[TapJitter] = None,
    deformation: DeformationParams = DeformationParams(),
) -> Tuple[np.ndarray, float]:
    """
    Sensor-frame pin displacements and the fraction of pins over the object.

    Returns:
        Tuple of displacements (N, 2) in mm and the contact fraction in [0, 1]
    """
    validate_non_negative("depth", depth)
    rest = lattice.rest_positions
    zero = np.zeros_like(rest)
    if depth == 0.0:
        return zero, 0.0

    world = sensor.position + rest @ rotation_matrix(sensor.heading).T
    sd = np.asarray(signed_distance(contour, world))
    w = deformation.edge_softness
    on_object = _smoothstep((w - sd) / (2.0 * w))
    fraction = float(on_object.mean())
    if fraction == 0.0:
        return zero, 0.0

    weight = on_object + (1.0 - on_object) * deformation.free_ratio * fraction
    radius = np.linalg.norm(rest, axis=1)
    dome = np.cos(0.5 * np.pi * np.clip(radius / deformation.pad_radius, 0.0, 1.0))
    mass = weight * dome
    centroid = (mass[:, None] * rest).sum(axis=0) / mass.sum()

    spread = rest - centroid
    falloff = np.sqrt(np.einsum("ij,ij->i", spread, spread) + lattice.pitch**2)
    displacement = deformation.stiffness * depth * (mass / falloff)[:, None] * spread

    if jitter is not None:
        displacement = displacement * np.array([jitter.scale_x, jitter.scale_y])
        displacement = displacement + _depth_scale(depth, deformation) * np.array(
            jitter.offset
        )
    if shear is not None:
        displacement = displacement + shear_offset(
            shear, sensor.heading, depth, deformation
        )
    return displacement, fraction


def _depth_scale(depth: float, deformation: DeformationParams) -> float:
    return min(depth / deformation.reference_depth, 1.0)


def shear_offset(
    shear: ShearState,
    heading: float,
    depth: float,
    deformation: DeformationParams = DeformationParams(),
) -> np.ndarray:
    """World-frame shear expressed in the sensor frame, scaled by depth."""
    local = rotation_matrix(-heading) @ shear.vector
    return _depth_scale(depth, deformation) * local


def deform_pins(
    lattice: PinLattice,
    contour: Contour,
    sensor: SensorState,
    depth: float,
    shear: Optional[ShearState] = None,
    jitter: Optional[TapJitter] = None,
    deformation: DeformationParams = DeformationParams(),
) -> np.ndarray:
    """Displaced pin positions in the sensor frame, (N, 2) mm."""
    displacement, _ = pin_displacements(
        lattice, contour, sensor, depth, shear, jitter, deformation
    )
    return lattice.rest_positions + displacement


def update_shear(
    shear: ShearState, motion: Sequence[float], in_contact: bool
) -> ShearState:
    """
    Advance the shear lag by one world-frame motion step.

    In contact the state relaxes and follows the motion, ``lambda * s + mu * m``;
    out of contact it only relaxes. The result is clamped to the cap.
    """
    s = shear.decay * shear.vector
    if in_contact:
        s = s + shear.gain * np.asarray(motion, dtype=float)
    magnitude = float(np.hypot(*s))
    if magnitude > shear.cap:
        s = s * (shear.cap / magnitude)
    return shear.model_copy(update={"s": (float(s[0]), float(s[1]))})


def rasterize(pins: np.ndarray, image: ImageSpec = ImageSpec()) -> np.ndarray:
    """
    Render pins (sensor frame, mm) as unit-peak Gaussian blobs.

    Overlapping blobs add and saturate at 1. The frame center pixel sits on
    the sensor origin.
    """
    size = image.size
    frame = np.zeros((size, size))
    pins = np.asarray(pins, dtype=float).reshape(-1, 2)
    if pins.shape[0] == 0:
        return frame
    scale = image.px_per_mm
    half = image.span_mm / 2.0
    cols = (pins[:, 0] + half) * scale
    rows = (half - pins[:, 1]) * scale
    grid = np.arange(size, dtype=float)
    denom = 2.0 * image.sigma**2
    gx = np.exp(-((grid[None, :] - cols[:, None]) ** 2) / denom)
    gy = np.exp(-((grid[None, :] - rows[:, None]) ** 2) / denom)
    return np.clip(gy.T @ gx, 0.0, 1.0)


def add_pixel_noise(
    frame: np.ndarray, sigma: float, rng: np.random.Generator
) -> np.ndarray:
    """Additive Gaussian pixel noise, clipped back to [0, 1]."""
    if sigma <= 0.0:
        return frame
    return np.clip(frame + rng.normal(0.0, sigma, size=frame.shape), 0.0, 1.0)


def tap_depths(params: ContactParams) -> List[float]:
    """
    Press-and-release depth profile, one value per frame.

    Frame ``frames_per_tap // 2`` sits exactly at ``params.peak_depth``.
    """
    count = params.frames_per_tap
    peak = count // 2
    travel = np.concatenate(
        [
            np.linspace(0.0, params.press, peak + 1),
            np.linspace(params.press, 0.0, count - peak)[1:],
        ]
    )
    return [
        max(0.0, float(value) - params.depth_above + params.depth_offset)
        for value in travel
    ]


def sample_jitter(rng: np.random.Generator) -> TapJitter:
    """Draw a per-tap scale/offset standing in for small sensor tilt."""
    low, high = JITTER_SETTINGS["SCALE_LOW"], JITTER_SETTINGS["SCALE_HIGH"]
    angle = rng.uniform(0.0, 2.0 * math.pi)
    length = JITTER_SETTINGS["MAX_OFFSET_MM"] * math.sqrt(rng.uniform(0.0, 1.0))
    return TapJitter(
        scale_x=float(rng.uniform(low, high)),
        scale_y=float(rng.uniform(low, high)),
        offset=(length * math.cos(angle), length * math.sin(angle)),
    )


def render_tap(
    contour: Contour,
    sensor: SensorState,
    params: ContactParams = ContactParams(),
    shear: Optional[ShearState] = None,
    lattice: Optional[PinLattice] = None,
    image: ImageSpec = ImageSpec(),
    jitter: Optional[TapJitter] = None,
    deformation: DeformationParams = DeformationParams(),
) -> TapResult:
    """
    Frames of one vertical tap at a fixed planar pose, ordered in time.

    ``no_contact`` is set when no pin ever reaches the object.
    """
    lattice = lattice or lattice_init()
    frames: List[np.ndarray] = []
    depths = tap_depths(params)
    touched = False
    for depth in depths:
        displacement, fraction = pin_displacements(
            lattice, contour, sensor, depth, shear, jitter, deformation
        )
        touched = touched or fraction > 0.0
        frames.append(rasterize(lattice.rest_positions + displacement, image))
    return TapResult(frames=frames, depths=depths, no_contact=not touched)


def render_slide(
    contour: Contour,
    start: SensorState,
    end: SensorState,
    params: ContactParams = ContactParams(),
    lattice: Optional[PinLattice] = None,
    image: ImageSpec = ImageSpec(),
    deformation: DeformationParams = DeformationParams(),
) -> Tuple[TapResult, ShearState]:
    """
    Slide at constant depth from ``start`` to ``end`` and render each sub-pose.

    The shear state travels with ``start`` and is advanced by every world
    sub-motion while any pin touches the object.

    Returns:
        Tuple of the frames (the last one is used for perception) and the
        shear state at ``end``
    """
    lattice = lattice or lattice_init()
    depth = params.slide_depth
    steps = params.slide_frames
    shear = start.shear
    turn = wrap_angle_deg(end.heading - start.heading)
    previous = start.position
    frames: List[np.ndarray] = []
    touched = False
    for j in range(1, steps + 1):
        u = j / steps
        position = (1.0 - u) * start.position + u * end.position
        pose = SensorState(
            x=float(position[0]),
            y=float(position[1]),
            heading=start.heading + u * turn,
        )
        displacement, fraction = pin_displacements(
            lattice, contour, pose, depth, None, None, deformation
        )
        in_contact = fraction > 0.0
        shear = update_shear(shear, position - previous, in_contact)
        previous = position
        if in_contact:
            displacement = displacement + shear_offset(
                shear, pose.heading, depth, deformation
            )
        touched = touched or in_contact
        frames.append(rasterize(lattice.rest_positions + displacement, image))
    return (
        TapResult(frames=frames, depths=[depth] * steps, no_contact=not touched),
        shear,
    )


def rms_change(frames: Sequence[np.ndarray]) -> np.ndarray:
    """RMS pixel difference of every frame from the first one."""
    stack = np.asarray(frames, dtype=float)
    return np.sqrt(((stack - stack[0]) ** 2).reshape(len(stack), -1).mean(axis=1))


def peak_frame_window(
    frames: Sequence[np.ndarray], window: int = PEAK_WINDOW
) -> List[np.ndarray]:
    """
    The ``window`` frames centered on the largest RMS change from frame 0.

    Ties resolve to the earliest frame; the window is clamped to the sequence.

    Raises:
        ValidationError: If fewer than ``window`` frames are given
    """
    if len(frames) < window:
        raise ValidationError(f"need at least {window} frames, got {len(frames)}")
    peak = int(np.argmax(rms_change(frames)))
    start = min(max(peak - window // 2, 0), len(frames) - window)
    return list(frames[start : start + window])


class TactileSensor:
    """
    One simulated sensor: lattice, image geometry and deformation response.

    Example:
        ```python
        sensor = TactileSensor(image=ImageSpec(size=64))
        window = sensor.tap_window(make_disk(), pose, ContactParams(), rng)
        ```
    """

    def __init__(
        self,
        lattice: Optional[PinLattice] = None,
        image: ImageSpec = ImageSpec(),
        deformation: DeformationParams = DeformationParams(),
        noise: float = 0.0,
    ):
        self.lattice = lattice or lattice_init()
        self.image = image
        self.deformation = deformation
        self.noise = noise

    def _noisy(
        self, frames: List[np.ndarray], rng: Optional[np.random.Generator]
    ) -> List[np.ndarray]:
        if rng is None or self.noise <= 0.0:
            return frames
        return [add_pixel_noise(frame, self.noise, rng) for frame in frames]

    def tap(
        self,
        contour: Contour,
        pose: SensorState,
        params: ContactParams,
        rng: Optional[np.random.Generator] = None,
        jitter: bool = False,
    ) -> TapResult:
        tilt = sample_jitter(rng) if (jitter and rng is not None) else None
        result = render_tap(
            contour,
            pose,
            params,
            pose.shear,
            self.lattice,
            self.image,
            tilt,
            self.deformation,
        )
        return result.model_copy(update={"frames": self._noisy(result.frames, rng)})

    def tap_window(
        self,
        contour: Contour,
        pose: SensorState,
        params: ContactParams,
        rng: Optional[np.random.Generator] = None,
        jitter: bool = False,
    ) -> List[np.ndarray]:
        """Peak window of one tap; noise is added after the peak search."""
        tilt = sample_jitter(rng) if (jitter and rng is not None) else None
        result = render_tap(
            contour,
            pose,
            params,
            pose.shear,
            self.lattice,
            self.image,
            tilt,
            self.deformation,
        )
        return self._noisy(peak_frame_window(result.frames), rng)

    def slide(
        self,
        contour: Contour,
        start: SensorState,
        end: SensorState,
        params: ContactParams,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[TapResult, ShearState]:
        result, shear = render_slide(
            contour, start, end, params, self.lattice, self.image, self.deformation
        )
        noisy = result.model_copy(update={"frames": self._noisy(result.frames, rng)})
        return noisy, shear

