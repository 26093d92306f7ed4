"""
Unit tests for utility functions.
"""
import numpy as np
import pytest

from app.core.exceptions import StorageError, ValidationError
from app.core.utils import (
    atomic_write_text,
    derive_rng,
    derive_seed,
    dict_to_key_value_text,
    flatten_dict,
    format_mm_deg,
    moving_average,
    parse_key_value_text,
    rotation_matrix,
    unflatten_dict,
    unit_vector,
    validate_frame,
    validate_positive,
    validate_range,
    wrap_angle_deg,
)


class TestHelpers:
    """Test helper utility functions."""

    @pytest.mark.parametrize(
        "angle, expected",
        [(0.0, 0.0), (190.0, -170.0), (-180.0, 180.0), (180.0, 180.0), (725.0, 5.0)],
    )
    def test_wrap_angle(self, angle, expected):
        """Test wrapping to (-180, 180]."""
        assert wrap_angle_deg(angle) == pytest.approx(expected)

    def test_unit_vector(self):
        """Test unit vectors along the axes."""
        np.testing.assert_allclose(unit_vector(90.0), [0.0, 1.0], atol=1e-15)

    def test_rotation_matrix(self):
        """Test a quarter-turn rotation."""
        np.testing.assert_allclose(
            rotation_matrix(90.0) @ np.array([1.0, 0.0]), [0.0, 1.0], atol=1e-15
        )

    def test_derived_streams_are_reproducible(self):
        """Test that equal stream keys give equal draws."""
        assert derive_rng(7, 1, 2).random() == derive_rng(7, 1, 2).random()

    def test_derived_streams_differ(self):
        """Test that distinct stream keys give distinct draws."""
        assert derive_rng(7, 1).random() != derive_rng(7, 2).random()
        assert derive_seed(7, 0) != derive_seed(7, 1)

    def test_moving_average_constant(self):
        """Test that a constant sequence is unchanged."""
        np.testing.assert_allclose(moving_average([2.0] * 9, 4), [2.0] * 9)

    def test_moving_average_window_one(self):
        """Test that a unit window is the identity."""
        np.testing.assert_allclose(moving_average([1.0, 5.0, 3.0], 1), [1, 5, 3])

    def test_format_mm_deg(self):
        """Test the table cell format."""
        assert format_mm_deg(1.0, 6.0) == "1.00 mm, 6.0 deg"

    def test_atomic_write(self, tmp_path):
        """Test that a write leaves only the target file."""
        target = atomic_write_text(tmp_path / "sub" / "out.txt", "hello\n")

        assert target.read_text() == "hello\n"
        assert [p.name for p in target.parent.iterdir()] == ["out.txt"]

    def test_atomic_write_into_file_fails(self, tmp_path):
        """Test that an unwritable directory raises StorageError."""
        blocker = tmp_path / "blocker"
        blocker.write_text("x")

        with pytest.raises(StorageError):
            atomic_write_text(blocker / "out.txt", "hello")


class TestValidators:
    """Test validation utility functions."""

    def test_validate_positive(self):
        """Test positive value validation."""
        assert validate_positive("radius", 1.5) == 1.5
        with pytest.raises(ValidationError):
            validate_positive("radius", 0.0)
        with pytest.raises(ValidationError):
            validate_positive("radius", float("nan"))

    def test_validate_range(self):
        """Test range validation."""
        assert validate_range("r", (-6, 9)) == (-6.0, 9.0)
        with pytest.raises(ValidationError):
            validate_range("r", (1.0, 1.0))

    def test_validate_frame(self):
        """Test frame invariants."""
        validate_frame(np.zeros((4, 4)))
        with pytest.raises(ValidationError):
            validate_frame(np.full((4, 4), 1.5))
        with pytest.raises(ValidationError):
            validate_frame(np.zeros(4))


class TestTransformers:
    """Test data transformation utilities."""

    def test_flatten_and_unflatten(self):
        """Test nested dicts survive flattening."""
        nested = {"servo": {"step": 3.0, "r0": 0.0}, "seed": 7}
        flat = flatten_dict(nested)

        assert flat == {"servo.step": 3.0, "servo.r0": 0.0, "seed": 7}
        assert unflatten_dict(flat) == nested

    def test_key_value_text_is_sorted(self):
        """Test that keys are written in sorted order."""
        text = dict_to_key_value_text({"b": 1, "a": {"c": None, "d": True}})

        assert text == "a.c = none\na.d = true\nb = 1\n"

    def test_parse_key_value_text(self):
        """Test parsing with comments and blank lines."""
        parsed = parse_key_value_text(
            "# comment\n\nseed = 7\nservo.step = 6.0  # mm\nmodel = none\n"
        )

        assert parsed == {"seed": "7", "servo": {"step": "6.0"}, "model": None}

    def test_parse_rejects_bare_words(self):
        """Test that a line without '=' is rejected."""
        with pytest.raises(ValueError):
            parse_key_value_text("seed 7\n")
