"""
Contour construction and ground-truth queries.

All contours are built counter-clockwise (closed) or with the object on the
left of travel (open), so the outward normal is always the travel tangent
turned clockwise by 90 degrees. Queries accept a single point or an (N, 2)
array and are evaluated for all segments at once.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pydantic
import structlog

from app.core.constants import DISK_RADIUS_MM
from app.core.exceptions import ValidationError
from app.core.utils import (
    derive_rng,
    rotation_matrix,
    unit_vector,
    validate_finite,
    validate_positive,
    wrap_angle_deg,
)
from app.data.models.geometry import (
    ArcSegment,
    Contour,
    Corner,
    EdgePoseGT,
    LineSegment,
    Segment,
)

logger = structlog.get_logger()

ArrayLike = Union[Sequence[float], np.ndarray]

# Parameter tolerance for a projection landing on a segment endpoint
_ENDPOINT_T = 1e-12
# Joints whose adjacent normals differ by less than this are smooth
_SMOOTH_JOINT_RAD = 1e-9


def _contour(name: str, closed: bool, segments: List[Segment]) -> Contour:
    try:
        return Contour(name=name, closed=closed, segments=segments)
    except pydantic.ValidationError as exc:
        raise ValidationError(f"Invalid contour {name!r}: {exc.errors()[0]['msg']}")


def _point(vector: np.ndarray) -> Tuple[float, float]:
    return (float(vector[0]), float(vector[1]))


def make_disk(radius: float = DISK_RADIUS_MM) -> Contour:
    """
    Closed circle of ``radius`` mm around the origin.

    Raises:
        ValidationError: If the radius is not positive
    """
    validate_positive("radius", radius)
    arc = ArcSegment(center=(0.0, 0.0), radius=radius, start_deg=-90.0, sweep_deg=360.0)
    return _contour("disk", True, [arc])


def make_volute() -> Contour:
    """
    Four tangent-continuous quarter arcs of radii 30, 40, 50 and 60 mm closed
    by a radial line, which leaves two designed corners at its ends.
    """
    segments: List[Segment] = []
    center = np.zeros(2)
    start_deg = -90.0
    for index, radius in enumerate((30.0, 40.0, 50.0, 60.0)):
        if index:
            # Next arc shares the tangent at the joint, so its center moves
            # back along the joint radius by the radius increment.
            center = center - 10.0 * unit_vector(start_deg)
        segments.append(
            ArcSegment(
                center=_point(center),
                radius=radius,
                start_deg=start_deg,
                sweep_deg=90.0,
            )
        )
        start_deg += 90.0
    segments.append(
        LineSegment(
            start=_point(segments[-1].end_point), end=_point(segments[0].start_point)
        )
    )
    return _contour("volute", True, segments)


def make_spiral_ridge() -> Contour:
    """Open spiral of five half-turn arcs with radii 20 to 60 mm."""
    segments: List[Segment] = []
    center = np.zeros(2)
    start_deg = -90.0
    for index, radius in enumerate((20.0, 30.0, 40.0, 50.0, 60.0)):
        if index:
            center = center - 10.0 * unit_vector(start_deg)
        segments.append(
            ArcSegment(
                center=_point(center),
                radius=radius,
                start_deg=start_deg,
                sweep_deg=180.0,
            )
        )
        start_deg += 180.0
    return _contour("spiral", False, segments)


def make_teardrop(radius: float = 40.0, tip_distance: float = 180.0) -> Contour:
    """
    A large arc joined by two tangent lines to a sharp vertex on the +x axis.

    Raises:
        ValidationError: If the vertex does not lie outside the circle
    """
    validate_positive("radius", radius)
    if tip_distance <= radius:
        raise ValidationError("tip_distance must exceed radius")
    half = math.degrees(math.acos(radius / tip_distance))
    arc = ArcSegment(
        center=(0.0, 0.0), radius=radius, start_deg=half, sweep_deg=360.0 - 2.0 * half
    )
    tip = (tip_distance, 0.0)
    segments: List[Segment] = [
        arc,
        LineSegment(start=_point(arc.end_point), end=tip),
        LineSegment(start=tip, end=_point(arc.start_point)),
    ]
    return _contour("teardrop", True, segments)


def make_clover(
    lobe_offset: float = 30.0, lobe_radius: float = 22.0, fillet_radius: float = 8.0
) -> Contour:
    """
    Four semicircular lobes joined by concave fillets.

    The fillet centers sit on the diagonals at ``(lobe_offset, lobe_offset)``;
    tangency requires ``lobe_radius + fillet_radius == lobe_offset``.
    """
    if not math.isclose(lobe_radius + fillet_radius, lobe_offset):
        raise ValidationError("lobe_radius + fillet_radius must equal lobe_offset")
    segments: List[Segment] = []
    for k in range(4):
        quarter = 90.0 * k
        lobe_center = lobe_offset * unit_vector(quarter)
        fillet_center = lobe_center + lobe_offset * unit_vector(quarter + 90.0)
        segments.append(
            ArcSegment(
                center=_point(lobe_center),
                radius=lobe_radius,
                start_deg=quarter - 90.0,
                sweep_deg=180.0,
            )
        )
        segments.append(
            ArcSegment(
                center=_point(fillet_center),
                radius=fillet_radius,
                start_deg=quarter - 90.0,
                sweep_deg=-90.0,
            )
        )
    return _snap_closed("clover", segments)


def make_brick(
    width: float = 100.0, height: float = 60.0, corner_radius: float = 3.0
) -> Contour:
    """Rounded rectangle around the origin; ``corner_radius`` 0 gives sharp corners."""
    validate_positive("width", width)
    validate_positive("height", height)
    if corner_radius < 0 or 2 * corner_radius >= min(width, height):
        raise ValidationError("corner_radius must be >= 0 and below half a side")
    hw, hh, cr = width / 2.0, height / 2.0, corner_radius
    sides = [
        ((-hw + cr, -hh), (hw - cr, -hh), (hw - cr, -hh + cr), -90.0),
        ((hw, -hh + cr), (hw, hh - cr), (hw - cr, hh - cr), 0.0),
        ((hw - cr, hh), (-hw + cr, hh), (-hw + cr, hh - cr), 90.0),
        ((-hw, hh - cr), (-hw, -hh + cr), (-hw + cr, -hh + cr), 180.0),
    ]
    segments: List[Segment] = []
    for start, end, corner_center, corner_start in sides:
        segments.append(LineSegment(start=start, end=end))
        if cr > 0:
            segments.append(
                ArcSegment(
                    center=corner_center,
                    radius=cr,
                    start_deg=corner_start,
                    sweep_deg=90.0,
                )
            )
    return _snap_closed("brick", segments)


def make_straight_edge(length: float = 200.0) -> Contour:
    """Open edge along +x centered on the origin, object on the +y side."""
    validate_positive("length", length)
    half = length / 2.0
    return _contour(
        "edge", False, [LineSegment(start=(-half, 0.0), end=(half, 0.0))]
    )


def _snap_closed(name: str, segments: List[Segment]) -> Contour:
    """Replace float drift at line joints so the chain meets exactly."""
    snapped: List[Segment] = []
    for index, segment in enumerate(segments):
        if isinstance(segment, LineSegment):
            prev = segments[index - 1] if index else segments[-1]
            following = segments[(index + 1) % len(segments)]
            segment = LineSegment(
                start=_point(prev.end_point)
                if isinstance(prev, ArcSegment)
                else segment.start,
                end=_point(following.start_point)
                if isinstance(following, ArcSegment)
                else segment.end,
            )
        snapped.append(segment)
    return _contour(name, True, snapped)


def _orientation(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    return float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def _on_segment(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> bool:
    return bool(
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def segments_intersect(
    p1: np.ndarray, p2: np.ndarray, p3: np.ndarray, p4: np.ndarray
) -> bool:
    """Closed-segment intersection test, touching and collinear overlap included."""
    d1 = _orientation(p3, p4, p1)
    d2 = _orientation(p3, p4, p2)
    d3 = _orientation(p1, p2, p3)
    d4 = _orientation(p1, p2, p4)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    return (
        (d1 == 0 and _on_segment(p3, p4, p1))
        or (d2 == 0 and _on_segment(p3, p4, p2))
        or (d3 == 0 and _on_segment(p1, p2, p3))
        or (d4 == 0 and _on_segment(p1, p2, p4))
    )


def polygon_signed_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def banana_vertices(seed: int = 0, samples: int = 24) -> np.ndarray:
    """
    Crescent outline with one sharp tip and a blunt stem.

    The outer rim follows a 90 mm arc from 20 to 160 degrees; the inner rim
    sits ``18 * sin(pi * (0.1 + 0.9 t)) ** 0.6`` mm inside it, which vanishes at
    the tip. Interior rim vertices get up to 0.5 mm of seeded radial jitter.
    """
    rng = derive_rng(seed, 0xBA)
    t = np.linspace(0.0, 1.0, samples + 1)
    phi = np.radians(20.0 + 140.0 * t)
    thickness = 18.0 * np.sin(np.pi * (0.1 + 0.9 * t)) ** 0.6
    thickness[-1] = 0.0

    outer_r = 90.0 + rng.uniform(-0.5, 0.5, size=t.size)
    outer_r[[0, -1]] = 90.0
    inner_r = 90.0 - thickness + rng.uniform(-0.5, 0.5, size=t.size)
    inner_r[0] = 90.0 - thickness[0]

    outer = np.stack([outer_r * np.cos(phi), outer_r * np.sin(phi)], axis=1)
    inner = np.stack([inner_r * np.cos(phi), inner_r * np.sin(phi)], axis=1)
    return np.concatenate([outer, inner[-2::-1]], axis=0)


def make_irregular(
    vertices: Optional[ArrayLike] = None, seed: int = 0, name: str = "irregular"
) -> Contour:
    """
    Closed polyline through ``vertices`` (a seeded crescent when omitted).

    Clockwise input is reversed so the contour runs counter-clockwise.

    Raises:
        ValidationError: On fewer than 3 vertices, repeated vertices or a
            self-intersecting outline
    """
    points = (
        banana_vertices(seed)
        if vertices is None
        else np.asarray(vertices, dtype=float).reshape(-1, 2)
    )
    if len(points) < 3:
        raise ValidationError("irregular contour needs at least 3 vertices")
    validate_finite("vertices", *points.ravel().tolist())
    count = len(points)
    edges = [(points[i], points[(i + 1) % count]) for i in range(count)]
    for i, (a, b) in enumerate(edges):
        if np.array_equal(a, b):
            raise ValidationError(f"vertices {i} and {(i + 1) % count} coincide")
    for i in range(count):
        for j in range(i + 1, count):
            if j == i + 1 or (i == 0 and j == count - 1):
                continue
            if segments_intersect(*edges[i], *edges[j]):
                raise ValidationError(
                    f"irregular polyline self-intersects (edges {i} and {j})"
                )
    if polygon_signed_area(points) < 0:
        points = points[::-1]
    segments: List[Segment] = [
        LineSegment(start=_point(points[i]), end=_point(points[(i + 1) % count]))
        for i in range(count)
    ]
    return _contour(name, True, segments)


CONTOUR_BUILDERS: Dict[str, Callable[[], Contour]] = {
    "disk": make_disk,
    "volute": make_volute,
    "spiral": make_spiral_ridge,
    "teardrop": make_teardrop,
    "clover": make_clover,
    "brick": make_brick,
    "irregular": make_irregular,
    "edge": make_straight_edge,
}


def make_contour(name: str) -> Contour:
    """
    Build a named test object.

    Raises:
        ValidationError: If the name is unknown
    """
    try:
        builder = CONTOUR_BUILDERS[name]
    except KeyError:
        known = ", ".join(CONTOUR_BUILDERS)
        raise ValidationError(f"Unknown object {name!r} (known: {known})")
    return builder()


@dataclass(frozen=True)
class NearestFeature:
    """Per-point result of projecting onto a contour."""

    distance: np.ndarray
    closest: np.ndarray
    segment_index: np.ndarray
    t: np.ndarray
    sign_normal: np.ndarray
    edge_normal: np.ndarray
    ambiguous: np.ndarray
    arc_position: np.ndarray


def _as_points(p: ArrayLike) -> Tuple[np.ndarray, bool]:
    points = np.asarray(p, dtype=float)
    single = points.ndim == 1
    return points.reshape(-1, 2), single


def _segment_normal(segment: Segment, t: float) -> np.ndarray:
    tangent = segment.tangent_at(t)
    return np.array([tangent[1], -tangent[0]])


def nearest_feature(contour: Contour, points: np.ndarray) -> NearestFeature:
    """
    Project (N, 2) points onto the contour.

    The closest segment is the lowest-indexed one at minimum distance. When
    the projection lands on a joint, the sign of the distance is taken from
    the sum of the adjacent normals, and at a corner the reported edge normal
    is that of the lower-indexed adjacent segment (segment 0 for the closing
    joint) with the ambiguity flag set.
    """
    segments = contour.segments
    count = len(segments)
    n = points.shape[0]
    projections = [segment.project(points) for segment in segments]
    distances = np.stack(
        [np.linalg.norm(points - closest, axis=1) for closest, _, _ in projections]
    )
    index = np.argmin(distances, axis=0)
    rows = np.arange(n)

    closest = np.stack([projections[k][0] for k in range(count)])[index, rows]
    t = np.stack([projections[k][1] for k in range(count)])[index, rows]
    normal = np.stack([projections[k][2] for k in range(count)])[index, rows]
    sign_normal = normal.copy()
    edge_normal = normal.copy()
    ambiguous = np.zeros(n, dtype=bool)

    for i in np.flatnonzero((t >= 1.0 - _ENDPOINT_T) | (t <= _ENDPOINT_T)):
        k = int(index[i])
        if t[i] >= 1.0 - _ENDPOINT_T:
            if k + 1 < count:
                before, after = k, k + 1
            elif contour.closed:
                before, after = k, 0
            else:
                continue
        else:
            if k > 0:
                before, after = k - 1, k
            elif contour.closed:
                before, after = count - 1, 0
            else:
                continue
        n_before = _segment_normal(segments[before], 1.0)
        n_after = _segment_normal(segments[after], 0.0)
        turn = math.atan2(
            n_before[0] * n_after[1] - n_before[1] * n_after[0],
            float(n_before @ n_after),
        )
        if abs(turn) <= _SMOOTH_JOINT_RAD:
            continue
        pseudo = n_before + n_after
        norm = np.linalg.norm(pseudo)
        if norm > 0:
            sign_normal[i] = pseudo / norm
        lower = min(before, after)
        edge_normal[i] = n_before if lower == before else n_after
        ambiguous[i] = True

    offsets = contour.segment_offsets
    lengths = np.array([segment.length for segment in segments])
    arc_position = offsets[index] + t * lengths[index]
    return NearestFeature(
        distance=distances[index, rows],
        closest=closest,
        segment_index=index,
        t=t,
        sign_normal=sign_normal,
        edge_normal=edge_normal,
        ambiguous=ambiguous,
        arc_position=arc_position,
    )


def _signed(feature: NearestFeature, points: np.ndarray) -> np.ndarray:
    side = np.einsum("ij,ij->i", points - feature.closest, feature.sign_normal)
    return np.where(side < 0, -feature.distance, feature.distance)


def signed_distance(contour: Contour, p: ArrayLike) -> Union[float, np.ndarray]:
    """
    Signed distance from ``p`` to the contour: positive on the free-space side,
    negative on the object side.

    Example:
        ```python
        >>> signed_distance(make_disk(52.5), (60.0, 0.0))
        7.5
        ```
    """
    points, single = _as_points(p)
    result = _signed(nearest_feature(contour, points), points)
    return float(result[0]) if single else result


def closest_point(contour: Contour, p: ArrayLike) -> np.ndarray:
    """Closest contour point(s) to ``p``; shape (2,) or (N, 2)."""
    points, single = _as_points(p)
    closest = nearest_feature(contour, points).closest
    return closest[0] if single else closest


def arc_position(contour: Contour, p: ArrayLike) -> Union[float, np.ndarray]:
    """Arc length from the contour start to the closest point of ``p``."""
    points, single = _as_points(p)
    s = nearest_feature(contour, points).arc_position
    return float(s[0]) if single else s


def _locate(contour: Contour, s: float) -> Tuple[Segment, float]:
    length = contour.length
    s = s % length if contour.closed else min(max(s, 0.0), length)
    offsets = contour.segment_offsets
    index = int(np.searchsorted(offsets, s, side="right") - 1)
    index = min(max(index, 0), len(contour.segments) - 1)
    segment = contour.segments[index]
    return segment, min((s - offsets[index]) / segment.length, 1.0)


def point_at(contour: Contour, s: float) -> Tuple[np.ndarray, float]:
    """
    Point at arc length ``s`` and the outward normal direction there (deg).

    Closed contours wrap ``s``; open contours clamp it to their ends.
    """
    segment, t = _locate(contour, s)
    normal = _segment_normal(segment, t)
    return segment.point_at(t), math.degrees(math.atan2(normal[1], normal[0]))


def edge_pose_gt(contour: Contour, x: float, y: float, heading: float) -> EdgePoseGT:
    """
    Ground-truth edge pose of a sensor at ``(x, y)`` with ``heading`` degrees.

    ``r`` is the signed distance and ``theta`` the heading minus the outward
    normal direction at the closest point, wrapped to (-180, 180].
    """
    validate_finite("sensor pose", x, y, heading)
    points = np.array([[x, y]], dtype=float)
    feature = nearest_feature(contour, points)
    normal = feature.edge_normal[0]
    normal_deg = math.degrees(math.atan2(normal[1], normal[0]))
    return EdgePoseGT(
        r=float(_signed(feature, points)[0]),
        theta=wrap_angle_deg(heading - normal_deg),
        ambiguous=bool(feature.ambiguous[0]),
        closest=_point(feature.closest[0]),
        segment_index=int(feature.segment_index[0]),
        arc_position=float(feature.arc_position[0]),
    )


def corners(contour: Contour, min_turn_deg: float = 1.0) -> List[Corner]:
    """
    Joints where the travel direction turns by more than ``min_turn_deg``.

    Positive turns are convex (left turns on a counter-clockwise outline).
    """
    segments = contour.segments
    count = len(segments)
    joints = range(count if contour.closed else count - 1)
    offsets = contour.segment_offsets
    found: List[Corner] = []
    for joint in joints:
        before, after = segments[joint], segments[(joint + 1) % count]
        t_in, t_out = before.tangent_at(1.0), after.tangent_at(0.0)
        turn = math.degrees(
            math.atan2(
                t_in[0] * t_out[1] - t_in[1] * t_out[0], float(t_in @ t_out)
            )
        )
        if abs(turn) > min_turn_deg:
            position = offsets[joint] + before.length
            found.append(
                Corner(
                    joint=joint,
                    point=_point(before.end_point),
                    turn_deg=turn,
                    arc_position=float(position % contour.length),
                )
            )
    return found


def anchor_pose(contour: Contour) -> Tuple[np.ndarray, float]:
    """
    Reference edge point and its outward normal direction (deg).

    Closed objects use the 12 o'clock point (closest to a far point on +y);
    open ones start a twentieth of their length in from the first end.
    """
    if contour.closed:
        feature = nearest_feature(contour, np.array([[0.0, 1e6]]))
        normal = feature.edge_normal[0]
        return feature.closest[0], math.degrees(math.atan2(normal[1], normal[0]))
    return point_at(contour, 0.05 * contour.length)


def transform_contour(
    contour: Contour, angle_deg: float, offset: ArrayLike = (0.0, 0.0)
) -> Contour:
    """Rotate by ``angle_deg`` about the origin, then translate by ``offset``."""
    rotation = rotation_matrix(angle_deg)
    shift = np.asarray(offset, dtype=float)

    def moved(point: Tuple[float, float]) -> Tuple[float, float]:
        return _point(rotation @ np.asarray(point) + shift)

    segments: List[Segment] = []
    for segment in contour.segments:
        if isinstance(segment, LineSegment):
            segments.append(
                LineSegment(start=moved(segment.start), end=moved(segment.end))
            )
        else:
            segments.append(
                ArcSegment(
                    center=moved(segment.center),
                    radius=segment.radius,
                    start_deg=segment.start_deg + angle_deg,
                    sweep_deg=segment.sweep_deg,
                )
            )
    return _contour(contour.name, contour.closed, segments)


def dense_polyline(contour: Contour, spacing: float = 0.5) -> np.ndarray:
    """Points along the contour no more than ``spacing`` mm apart, (M, 2)."""
    validate_positive("spacing", spacing)
    chunks = []
    for segment in contour.segments:
        steps = max(1, int(math.ceil(segment.length / spacing)))
        chunks.append(
            np.array([segment.point_at(t) for t in np.linspace(0.0, 1.0, steps + 1)])
        )
    return np.concatenate(chunks, axis=0)
