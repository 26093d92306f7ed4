"""
Planar contour primitives and the ground-truth edge pose.

Segments carry their own vectorized projection math; contour-level queries
(signed distance, closest point, edge pose) live in
:mod:`app.services.geometry`.
"""

import math
from typing import List, Literal, Tuple, Union

import numpy as np
from pydantic import Field, model_validator

from app.data.models.base import BaseDataModel

Point = Tuple[float, float]

CONTINUITY_TOLERANCE_MM = 1e-9


class LineSegment(BaseDataModel):
    """Straight segment traversed from ``start`` to ``end`` (mm)."""

    kind: Literal["line"] = "line"
    start: Point
    end: Point

    @model_validator(mode="after")
    def _non_degenerate(self) -> "LineSegment":
        if self.length <= 0.0:
            raise ValueError("line segment has zero length")
        return self

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    @property
    def start_point(self) -> np.ndarray:
        return np.array(self.start, dtype=float)

    @property
    def end_point(self) -> np.ndarray:
        return np.array(self.end, dtype=float)

    def point_at(self, t: float) -> np.ndarray:
        return self.start_point + t * (self.end_point - self.start_point)

    def tangent_at(self, t: float) -> np.ndarray:
        d = self.end_point - self.start_point
        return d / np.linalg.norm(d)

    def project(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Project points onto the segment.

        Args:
            points: Array of shape (N, 2)

        Returns:
            Tuple of closest points (N, 2), parameters t in [0, 1] (N,) and
            right-hand normals at the closest points (N, 2)
        """
        a = self.start_point
        d = self.end_point - a
        t = np.clip(((points - a) @ d) / float(d @ d), 0.0, 1.0)
        closest = a + t[:, None] * d
        tangent = d / np.linalg.norm(d)
        normal = np.broadcast_to(np.array([tangent[1], -tangent[0]]), points.shape)
        return closest, t, np.array(normal)


class ArcSegment(BaseDataModel):
    """
    Circular arc around ``center`` starting at ``start_deg``.

    A positive ``sweep_deg`` runs counter-clockwise, a negative one clockwise.
    """

    kind: Literal["arc"] = "arc"
    center: Point
    radius: float = Field(gt=0)
    start_deg: float
    sweep_deg: float

    @model_validator(mode="after")
    def _valid_sweep(self) -> "ArcSegment":
        if self.sweep_deg == 0.0 or abs(self.sweep_deg) > 360.0:
            raise ValueError("arc sweep must be non-zero and at most 360 degrees")
        return self

    @property
    def length(self) -> float:
        return self.radius * math.radians(abs(self.sweep_deg))

    @property
    def direction(self) -> float:
        return 1.0 if self.sweep_deg > 0 else -1.0

    def _angle(self, t: float) -> float:
        return math.radians(self.start_deg + t * self.sweep_deg)

    @property
    def start_point(self) -> np.ndarray:
        return self.point_at(0.0)

    @property
    def end_point(self) -> np.ndarray:
        return self.point_at(1.0)

    def point_at(self, t: float) -> np.ndarray:
        a = self._angle(t)
        return np.array(
            [
                self.center[0] + self.radius * math.cos(a),
                self.center[1] + self.radius * math.sin(a),
            ]
        )

    def tangent_at(self, t: float) -> np.ndarray:
        a = self._angle(t)
        return self.direction * np.array([-math.sin(a), math.cos(a)])

    def project(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Projection counterpart of :meth:`LineSegment.project`."""
        c = np.array(self.center, dtype=float)
        rel = points - c
        phi = np.arctan2(rel[:, 1], rel[:, 0])
        a0 = math.radians(self.start_deg)
        span = math.radians(abs(self.sweep_deg))
        offset = np.mod((phi - a0) * self.direction, 2.0 * math.pi)
        t = offset / span

        outside = t > 1.0
        if np.any(outside):
            p0 = self.start_point
            p1 = self.end_point
            d0 = np.linalg.norm(points[outside] - p0, axis=1)
            d1 = np.linalg.norm(points[outside] - p1, axis=1)
            t[outside] = np.where(d1 < d0, 1.0, 0.0)

        angle = a0 + self.direction * t * span
        radial = np.stack([np.cos(angle), np.sin(angle)], axis=1)
        closest = c + self.radius * radial
        normal = self.direction * radial
        return closest, t, normal


Segment = Union[LineSegment, ArcSegment]


class Contour(BaseDataModel):
    """
    Ordered chain of arc/line primitives.

    Closed contours run counter-clockwise so that the object lies on the left
    of travel and free space on the right.
    """

    name: str
    closed: bool
    segments: List[Segment] = Field(min_length=1)

    @model_validator(mode="after")
    def _continuity(self) -> "Contour":
        for index in range(len(self.segments) - 1):
            gap = np.linalg.norm(
                self.segments[index].end_point - self.segments[index + 1].start_point
            )
            if gap >= CONTINUITY_TOLERANCE_MM:
                raise ValueError(
                    f"segments {index} and {index + 1} are not continuous "
                    f"(gap {gap:.3e} mm)"
                )
        if self.closed:
            gap = np.linalg.norm(
                self.segments[-1].end_point - self.segments[0].start_point
            )
            if gap >= CONTINUITY_TOLERANCE_MM:
                raise ValueError(f"closed contour does not close (gap {gap:.3e} mm)")
        if self.length <= 0.0:
            raise ValueError("contour has zero length")
        return self

    @property
    def length(self) -> float:
        return float(sum(segment.length for segment in self.segments))

    @property
    def segment_offsets(self) -> np.ndarray:
        """Arc length at the start of each segment."""
        lengths = [segment.length for segment in self.segments]
        return np.concatenate([[0.0], np.cumsum(lengths)[:-1]])


class EdgePoseGT(BaseDataModel):
    """
    Ground-truth pose of the sensor relative to the nearest edge.

    ``r`` is positive on the free-space side; ``theta`` is the heading minus the
    outward normal direction, wrapped to (-180, 180].
    """

    r: float
    theta: float
    ambiguous: bool = False
    closest: Point
    segment_index: int
    arc_position: float


class Corner(BaseDataModel):
    """Joint between two segments whose tangents disagree."""

    joint: int
    point: Point
    turn_deg: float
    arc_position: float
