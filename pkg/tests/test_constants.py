"""
Unit tests for constants module.
"""
import math

from app.core.constants import (
    ADAM_DEFAULTS,
    ARCHITECTURE_SETTINGS,
    CONTACT_DEFAULTS,
    EXIT_CODES,
    LABEL_RANGES,
    OBJECT_NAMES,
    SERVO_DEFAULTS,
    TABLE1_GRID,
    TRAJECTORY_CSV_COLUMNS,
)


class TestProtocolConstants:
    """Test collection and training constants."""

    def test_label_ranges(self):
        """Test the sampled edge-pose ranges."""
        assert LABEL_RANGES["R_MM"] == (-6.0, 9.0)
        assert LABEL_RANGES["THETA_DEG"] == (-45.0, 45.0)

    def test_adam_defaults(self):
        """Test optimizer hyperparameters."""
        assert ADAM_DEFAULTS["LEARNING_RATE"] == 1e-4
        assert ADAM_DEFAULTS["DECAY"] == 1e-6

    def test_tap_protocol(self):
        """Test the tap protocol defaults."""
        assert CONTACT_DEFAULTS["DEPTH_ABOVE_MM"] == 1.5
        assert CONTACT_DEFAULTS["PRESS_MM"] == 5.0
        assert CONTACT_DEFAULTS["FRAMES_PER_TAP"] >= 7

    def test_block_filters(self):
        """Test the convolution block widths."""
        assert ARCHITECTURE_SETTINGS["BLOCK_FILTERS"] == (8, 16, 16, 32, 32)


class TestServoConstants:
    """Test servo and grid constants."""

    def test_servo_defaults(self):
        """Test unit gains and the 3 mm step."""
        assert SERVO_DEFAULTS["GAIN_R"] == 1.0
        assert SERVO_DEFAULTS["GAIN_THETA"] == 1.0
        assert SERVO_DEFAULTS["STEP_MM"] == 3.0
        assert SERVO_DEFAULTS["LOST_EDGE_MM"] == 20.0

    def test_grid_rows(self):
        """Test that every grid row names a known parameter and mode."""
        parameters = {"start_r", "step", "r0", "depth_offset"}
        for mode, experiment, parameter, value in TABLE1_GRID:
            assert mode in ("tap", "slide")
            assert experiment
            assert parameter in parameters
            assert math.isfinite(value)

    def test_grid_start_poses(self):
        """Test the initial contact sweep for both modes."""
        starts = [row[3] for row in TABLE1_GRID if row[2] == "start_r"]
        assert starts == [-6.0, 0.0, 9.0, -6.0, 0.0, 9.0]


class TestInterfaceConstants:
    """Test command-line and file interface constants."""

    def test_exit_codes(self):
        """Test the exit code table."""
        assert EXIT_CODES == {"OK": 0, "USAGE": 2, "RUNTIME": 3}

    def test_trajectory_columns(self):
        """Test the trajectory CSV column order."""
        assert TRAJECTORY_CSV_COLUMNS[0] == "step"
        assert TRAJECTORY_CSV_COLUMNS[-1] == "status"
        assert len(TRAJECTORY_CSV_COLUMNS) == 13

    def test_object_names(self):
        """Test the built-in object list."""
        assert "disk" in OBJECT_NAMES
        assert "teardrop" in OBJECT_NAMES
