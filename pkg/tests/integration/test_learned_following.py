"""
Contour runs driven by networks trained on a reduced-scale tap dataset.

One 800-tap collection at 64 px trains an Arch-A model and an augmented
Arch-B model once per module; every test reuses them.
"""
import pytest

from app.core.config import settings
from app.data.models.experiment import ExperimentConfig
from app.data.models.sensor import ImageSpec
from app.data.models.servo import ServoParams, TrajectoryStatus
from app.main import main
from app.services.experiments import cmd_eval, load_network
from app.services.geometry import make_contour
from app.services.servo import NetworkPerceiver, run_contour, trajectory_metrics
from app.services.tactile import TactileSensor

IMAGE_SIZE = 64


@pytest.fixture(scope="module")
def models(tmp_path_factory):
    """Collect 800 taps at 64 px and train both architectures on them."""
    root = tmp_path_factory.mktemp("learned")
    size = ["--image-size", str(IMAGE_SIZE)]
    for name, count, seed in (("data", "800", "1"), ("test", "200", "2")):
        argv = ["collect", "--n", count, *size, "--seed", seed]
        assert main(argv + ["--out", str(root / name)]) == 0
    dataset = str(root / "data" / "dataset.tcds")
    for arch, extra in (("A", []), ("B", ["--augment", "on"])):
        argv = ["train", "--dataset", dataset, "--arch", arch, *extra]
        assert main(argv + ["--seed", "1", "--out", str(root / arch)]) == 0
    return root


def _follow(root, arch, name, mode="tap", seed=0, **kwargs):
    network = load_network(str(root / arch / "model.tcnn"))
    sensor = TactileSensor(image=ImageSpec(size=IMAGE_SIZE), noise=settings.PIXEL_NOISE)
    return run_contour(
        make_contour(name),
        NetworkPerceiver(network, IMAGE_SIZE),
        mode=mode,
        seed=seed,
        sensor=sensor,
        **kwargs,
    )


@pytest.mark.integration
@pytest.mark.slow
class TestLearnedPerception:
    """Test perception accuracy of the trained Arch-A model."""

    def test_central_error(self, models, tmp_path):
        """Test the central-region error on held-out taps."""
        config = ExperimentConfig(
            model=str(models / "A" / "model.tcnn"),
            dataset=str(models / "test" / "dataset.tcds"),
            eval_frames="center",
            out=str(tmp_path),
        )
        summary = cmd_eval(config)

        assert summary.central_count > 0
        assert summary.central_mae_r <= 1.5
        assert summary.central_mae_theta <= 7.0


@pytest.mark.integration
@pytest.mark.slow
class TestLearnedTapping:
    """Test tapping around contours with the trained Arch-A model."""

    @pytest.mark.parametrize("start_r", [-6.0, 0.0, 9.0])
    def test_disk_from_start_offsets(self, models, start_r):
        """Test closing the disk from starts across the trained range."""
        run = _follow(models, "A", "disk", start=(start_r, 0.0))
        metrics = trajectory_metrics(run)

        assert run.status == TrajectoryStatus.CLOSED
        assert metrics.radial_mae <= 2.0
        assert metrics.angle_mae <= 15.0

    @pytest.mark.parametrize("step", [6.0, 9.0])
    def test_disk_with_long_steps(self, models, step):
        """Test closing the disk with longer tangential steps."""
        run = _follow(models, "A", "disk", params=ServoParams(step=step))
        metrics = trajectory_metrics(run)

        assert run.status == TrajectoryStatus.CLOSED
        assert metrics.radial_mae <= 2.0
        assert metrics.angle_mae <= 15.0

    @pytest.mark.parametrize("name", ["volute", "clover"])
    def test_non_uniform_contours(self, models, name):
        """Test closing contours of varying curvature."""
        assert _follow(models, "A", name).status == TrajectoryStatus.CLOSED


@pytest.mark.integration
@pytest.mark.slow
class TestSlidingFailures:
    """Test that sliding loses sharp corners that tapping gets past."""

    @pytest.mark.parametrize("name", ["teardrop", "irregular"])
    def test_slide_fails_at_corner(self, models, name):
        """Test the slide run ending at a corner and the tap run going further."""
        slide = _follow(models, "A", name, mode="slide")
        tap = _follow(models, "A", name, mode="tap")

        assert slide.status == TrajectoryStatus.FAILED
        assert any(record.at_corner for record in slide.records[-3:])
        assert tap.progress > slide.progress


@pytest.mark.integration
@pytest.mark.slow
class TestArchitectureComparison:
    """Test sliding accuracy of the two architectures."""

    def test_arch_b_slides_at_least_as_close(self, models):
        """Test that Arch-B matches or beats Arch-A on most seeds."""
        wins = 0
        for seed in (1, 2, 3):
            errors = {
                arch: trajectory_metrics(
                    _follow(models, arch, "disk", mode="slide", seed=seed)
                ).radial_mae
                for arch in ("A", "B")
            }
            wins += errors["B"] <= errors["A"]

        assert wins >= 2
