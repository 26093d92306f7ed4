"""
Unit tests for data models.
"""
import numpy as np
import pydantic
import pytest

from app.data.models.dataset import Dataset
from app.data.models.geometry import ArcSegment, Contour, LineSegment
from app.data.models.sensor import ContactParams, ImageSpec
from app.data.models.servo import EdgePose, ServoParams


class TestSegments:
    """Test contour primitives."""

    def test_line_length(self):
        """Test a 3-4-5 line."""
        assert LineSegment(start=(0, 0), end=(3, 4)).length == pytest.approx(5.0)

    def test_zero_length_line(self):
        """Test that a degenerate line is rejected."""
        with pytest.raises(pydantic.ValidationError):
            LineSegment(start=(1, 1), end=(1, 1))

    def test_arc_endpoints(self):
        """Test a counter-clockwise quarter arc."""
        arc = ArcSegment(center=(0, 0), radius=2.0, start_deg=0.0, sweep_deg=90.0)

        np.testing.assert_allclose(arc.start_point, [2.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(arc.end_point, [0.0, 2.0], atol=1e-12)
        assert arc.length == pytest.approx(np.pi)

    @pytest.mark.parametrize("sweep", [0.0, 361.0])
    def test_invalid_sweep(self, sweep):
        """Test that empty or over-full sweeps are rejected."""
        with pytest.raises(pydantic.ValidationError):
            ArcSegment(center=(0, 0), radius=1.0, start_deg=0.0, sweep_deg=sweep)


class TestContour:
    """Test contour validation."""

    def test_open_chain(self):
        """Test an open two-segment chain."""
        contour = Contour(
            name="bend",
            closed=False,
            segments=[
                LineSegment(start=(0, 0), end=(1, 0)),
                LineSegment(start=(1, 0), end=(1, 1)),
            ],
        )

        assert contour.length == pytest.approx(2.0)

    def test_gap_rejected(self):
        """Test that consecutive segments must meet."""
        with pytest.raises(pydantic.ValidationError):
            Contour(
                name="gap",
                closed=False,
                segments=[
                    LineSegment(start=(0, 0), end=(1, 0)),
                    LineSegment(start=(1.1, 0), end=(2, 0)),
                ],
            )

    def test_unclosed_loop_rejected(self):
        """Test that a closed contour must return to its start."""
        with pytest.raises(pydantic.ValidationError):
            Contour(
                name="open",
                closed=True,
                segments=[LineSegment(start=(0, 0), end=(1, 0))],
            )

    def test_frozen(self, disk):
        """Test that contours are immutable."""
        with pytest.raises(pydantic.ValidationError):
            disk.name = "other"


class TestParameterModels:
    """Test sensor and servo parameter models."""

    def test_contact_depths(self):
        """Test the derived peak and slide depths."""
        params = ContactParams(depth_offset=1.0)

        assert params.peak_depth == pytest.approx(4.5)
        assert params.slide_depth == pytest.approx(2.5)

    def test_slide_depth_not_negative(self):
        """Test that a large lift leaves no slide indentation."""
        assert ContactParams(depth_offset=-5.0).slide_depth == 0.0

    def test_image_scale(self):
        """Test pixels per millimetre."""
        assert ImageSpec(size=128, span_mm=64.0).px_per_mm == 2.0

    def test_non_finite_gain(self):
        """Test that servo gains must be finite."""
        with pytest.raises(pydantic.ValidationError):
            ServoParams(gain_r=float("nan"))

    def test_pose_equality(self):
        """Test value semantics of edge poses."""
        assert EdgePose(r=1.0, theta=2.0) == EdgePose(r=1.0, theta=2.0)


class TestDatasetModel:
    """Test dataset shape invariants."""

    def test_label_count_must_match(self):
        """Test that every sample needs a label."""
        with pytest.raises(pydantic.ValidationError):
            Dataset(
                frames=np.zeros((3, 1, 4, 4), dtype=np.float32),
                labels=np.zeros((2, 2), dtype=np.float32),
                modes=np.zeros(3, dtype=np.uint8),
            )

    def test_sample_view(self, small_dataset):
        """Test extracting one sample."""
        sample = small_dataset.sample(2)

        assert sample.frames.shape == (3, 8, 8)
        assert sample.r == pytest.approx(float(small_dataset.labels[2, 0]))
        assert sample.mode == "tap"
