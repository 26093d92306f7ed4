"""
Unit tests for the simulated pin-array sensor.
"""
import numpy as np
import pytest
from scipy import ndimage

from app.core.exceptions import ValidationError
from app.data.models.sensor import (
    ContactParams,
    ImageSpec,
    SensorState,
    ShearState,
)
from app.services.geometry import make_disk, transform_contour
from app.services.tactile import (
    TactileSensor,
    deform_pins,
    lattice_init,
    peak_frame_window,
    pin_displacements,
    rasterize,
    render_slide,
    render_tap,
    rms_change,
    tap_depths,
    update_shear,
)

ON_EDGE = SensorState(x=0.0, y=52.5, heading=90.0)
FAR_AWAY = SensorState(x=500.0, y=500.0, heading=0.0)


def _local_maxima(frame, threshold=0.5):
    peaks = ndimage.maximum_filter(frame, size=3, mode="constant") == frame
    return int(np.sum(peaks & (frame > threshold)))


class TestLattice:
    """Test the hexagonal pin lattice."""

    @pytest.mark.parametrize("rings, count", [(0, 1), (2, 19), (6, 127)])
    def test_pin_count(self, rings, count):
        """Test 1 + 3k(k+1) pins."""
        assert lattice_init(rings, 1.0).pin_count == count

    def test_center_pin_at_origin(self):
        """Test that pin 0 sits at the origin."""
        np.testing.assert_array_equal(lattice_init(0, 3.0).rest_positions, [[0, 0]])

    def test_default_lattice_fits_pad(self):
        """Test that the 127 pins lie inside the 20 mm pad."""
        lattice = lattice_init(6, 3.0)

        assert np.max(np.linalg.norm(lattice.rest_positions, axis=1)) <= 20.0

    def test_six_fold_symmetry(self):
        """Test that a 60 degree rotation maps the lattice onto itself."""
        pins = lattice_init(6, 3.0).rest_positions
        c, s = np.cos(np.pi / 3), np.sin(np.pi / 3)
        rotated = pins @ np.array([[c, -s], [s, c]]).T
        distances = np.linalg.norm(rotated[:, None] - pins[None], axis=2)

        assert np.max(distances.min(axis=1)) < 1e-9

    def test_invalid_arguments(self):
        """Test negative rings and zero pitch."""
        with pytest.raises(ValidationError):
            lattice_init(-1, 3.0)
        with pytest.raises(ValidationError):
            lattice_init(2, 0.0)


class TestDeformation:
    """Test the pin-field deformation model."""

    def test_zero_depth_is_identity(self, disk):
        """Test that no indentation leaves the pins at rest."""
        lattice = lattice_init()
        pins = deform_pins(lattice, disk, ON_EDGE, 0.0, ShearState())

        np.testing.assert_array_equal(pins, lattice.rest_positions)

    def test_negative_depth_rejected(self, disk):
        """Test that a negative depth is rejected."""
        with pytest.raises(ValidationError):
            deform_pins(lattice_init(), disk, ON_EDGE, -1.0)

    def test_object_side_moves_more(self, disk):
        """Test the edge-dependent asymmetry of the displacement field."""
        lattice = lattice_init()
        displacement, fraction = pin_displacements(lattice, disk, ON_EDGE, 3.5)
        magnitude = np.linalg.norm(displacement, axis=1)
        # Heading points out of the disk, so sensor +x is free space
        on_object = lattice.rest_positions[:, 0] < -1.0
        over_free = lattice.rest_positions[:, 0] > 1.0

        assert 0.0 < fraction < 1.0
        assert magnitude[on_object].mean() > magnitude[over_free].mean()

    def test_rotation_equivariance(self, straight_edge):
        """Test that turning the heading rotates the field the other way."""
        lattice = lattice_init(3, 3.0)
        base = SensorState(x=0.0, y=-1.0, heading=-90.0)
        turned = base.model_copy(update={"heading": -70.0})
        moved = deform_pins(lattice, straight_edge, turned, 3.0)

        # Turning the heading by 20 deg is the same as rotating the lattice by
        # 20 deg under the original heading
        a = np.radians(20.0)
        rotation = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        rotated_lattice = lattice.model_copy(
            update={"rest_positions": lattice.rest_positions @ rotation.T}
        )
        reference = deform_pins(rotated_lattice, straight_edge, base, 3.0)

        np.testing.assert_allclose(moved @ rotation.T, reference, atol=1e-6)

    def test_depth_monotonicity(self, disk):
        """Test that displacement energy grows with depth."""
        lattice = lattice_init()
        energies = [
            np.sum(pin_displacements(lattice, disk, ON_EDGE, depth)[0] ** 2)
            for depth in np.linspace(0.0, 3.5, 8)
        ]

        assert all(b >= a for a, b in zip(energies, energies[1:]))

    def test_translation_equivariance(self, disk):
        """Test that moving sensor and object together changes nothing."""
        lattice = lattice_init()
        moved_disk = transform_contour(disk, 0.0, (5.0, -3.0))
        moved_sensor = ON_EDGE.model_copy(update={"x": 5.0, "y": 49.5})
        a = deform_pins(lattice, disk, ON_EDGE, 3.0)
        b = deform_pins(lattice, moved_disk, moved_sensor, 3.0)

        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_pin_count_conserved(self, disk):
        """Test that deformation keeps every pin."""
        lattice = lattice_init()

        assert deform_pins(lattice, disk, ON_EDGE, 3.5).shape == (127, 2)


class TestShear:
    """Test the shear lag."""

    def test_rest_stays_at_rest(self):
        """Test zero motion from zero shear."""
        assert update_shear(ShearState(), (0.0, 0.0), True).s == (0.0, 0.0)

    def test_single_step(self):
        """Test direct substitution into the lag."""
        shear = update_shear(ShearState(decay=0.7, gain=0.5), (3.0, 0.0), True)

        assert shear.s == pytest.approx((1.5, 0.0))

    def test_out_of_contact_only_relaxes(self):
        """Test that motion is ignored without contact."""
        shear = update_shear(ShearState(s=(1.0, 0.0)), (3.0, 0.0), False)

        assert shear.s == pytest.approx((0.7, 0.0))

    @pytest.mark.parametrize("step, expected", [(0.3, 0.5), (3.0, 3.0)])
    def test_fixed_point(self, step, expected):
        """Test convergence to min(mu |m| / (1 - lambda), cap)."""
        shear = ShearState()
        for _ in range(100):
            shear = update_shear(shear, (step, 0.0), True)

        assert shear.magnitude == pytest.approx(expected, rel=1e-6)

    def test_bounded(self):
        """Test that the cap holds for arbitrary motion."""
        rng = np.random.default_rng(0)
        shear = ShearState()
        for _ in range(200):
            shear = update_shear(shear, rng.normal(0, 10, 2), bool(rng.random() > 0.2))
            assert shear.magnitude <= shear.cap + 1e-12


class TestRasterize:
    """Test pin rendering."""

    def test_empty_frame(self):
        """Test that no pins give a black frame."""
        assert not rasterize(np.zeros((0, 2))).any()

    def test_rest_lattice_maxima(self):
        """Test that each rest pin is its own bright peak."""
        frame = rasterize(lattice_init().rest_positions)

        assert _local_maxima(frame) == 127

    def test_single_pin_centered(self):
        """Test that a pin at the origin peaks at the frame center."""
        frame = rasterize(np.zeros((1, 2)))
        row, col = np.unravel_index(np.argmax(frame), frame.shape)

        assert abs(row - 64) <= 1 and abs(col - 64) <= 1

    def test_values_in_unit_interval(self):
        """Test saturation at 1."""
        frame = rasterize(np.zeros((5, 2)))

        assert frame.max() == 1.0
        assert frame.min() >= 0.0

    def test_smaller_images(self):
        """Test the reduced-scale frame size."""
        assert rasterize(np.zeros((1, 2)), ImageSpec(size=64)).shape == (64, 64)


class TestTapping:
    """Test taps, slides and the peak window."""

    def test_depth_profile(self):
        """Test the press and release ramp."""
        depths = tap_depths(ContactParams())

        assert len(depths) == 20
        assert depths[0] == 0.0 and depths[-1] == 0.0
        assert max(depths) <= 3.5 + 1e-12

    @pytest.mark.parametrize("frames, offset", [(20, 0.0), (21, 0.0), (20, 1.0)])
    def test_depth_profile_reaches_peak(self, frames, offset):
        """Test that the middle frame presses exactly to the peak depth."""
        params = ContactParams(frames_per_tap=frames, depth_offset=offset)
        depths = tap_depths(params)

        assert len(depths) == frames
        assert depths[frames // 2] == params.peak_depth
        assert max(depths) == params.peak_depth
        assert depths[0] == 0.0 and depths[-1] == 0.0

    def test_free_space_tap(self, disk):
        """Test that a tap far from the object sees only the rest lattice."""
        image = ImageSpec(size=64)
        result = render_tap(disk, FAR_AWAY, image=image)
        rest = rasterize(lattice_init().rest_positions, image)

        assert result.no_contact
        assert len(result.frames) == 20
        for frame in result.frames:
            np.testing.assert_array_equal(frame, rest)

    def test_edge_tap_peaks_mid_sequence(self, disk):
        """Test that the RMS change vanishes at both ends and peaks inside."""
        result = render_tap(disk, ON_EDGE, image=ImageSpec(size=64))
        rms = rms_change(result.frames)
        peak = int(np.argmax(rms))

        assert not result.no_contact
        assert rms[0] == 0.0 and rms[-1] == 0.0
        assert rms[peak] > 0.0
        assert 3 <= peak <= 16

    def test_deeper_offset_displaces_more(self, disk):
        """Test that a positive depth offset presses harder."""
        lattice = lattice_init()
        deep = ContactParams(depth_offset=2.5)
        default = ContactParams()
        deep_max = np.abs(
            pin_displacements(lattice, disk, ON_EDGE, deep.peak_depth)[0]
        ).max()
        base_max = np.abs(
            pin_displacements(lattice, disk, ON_EDGE, default.peak_depth)[0]
        ).max()

        assert deep_max > base_max

    def test_tap_is_deterministic(self, disk):
        """Test bit-identical frames for identical seeds."""
        sensor = TactileSensor(image=ImageSpec(size=32), noise=0.01)
        a = sensor.tap_window(
            disk, ON_EDGE, ContactParams(), np.random.default_rng(5), jitter=True
        )
        b = sensor.tap_window(
            disk, ON_EDGE, ContactParams(), np.random.default_rng(5), jitter=True
        )

        assert len(a) == 7
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_slide_advances_shear(self, disk):
        """Test that sliding along the edge builds up shear."""
        start = ON_EDGE
        end = start.model_copy(update={"x": 3.0})
        result, shear = render_slide(
            disk, start, end, ContactParams(), image=ImageSpec(size=32)
        )

        assert len(result.frames) == 5
        assert not result.no_contact
        assert shear.s[0] > 0.0


class TestPeakWindow:
    """Test the 7-frame peak window."""

    @staticmethod
    def _frames(peak, count=20):
        return [np.full((2, 2), 1.0 if i == peak else 0.0) for i in range(count)]

    def test_centered_window(self):
        """Test a window around index 10."""
        frames = self._frames(10)
        window = peak_frame_window(frames)

        assert [f is g for f, g in zip(window, frames[7:14])] == [True] * 7

    def test_clamped_window(self):
        """Test that an early peak clamps to the start."""
        frames = self._frames(1)
        window = peak_frame_window(frames)

        assert all(f is g for f, g in zip(window, frames[0:7]))

    def test_identical_frames(self):
        """Test that ties resolve to the first frames."""
        frames = [np.zeros((2, 2)) for _ in range(20)]
        window = peak_frame_window(frames)

        assert all(f is g for f, g in zip(window, frames[0:7]))

    def test_too_few_frames(self):
        """Test that fewer than 7 frames are rejected."""
        with pytest.raises(ValidationError):
            peak_frame_window([np.zeros((2, 2))] * 6)
