from pathlib import Path

import numpy as np
import pytest

from app.core.logging_config import configure_logging
from app.data.models.dataset import Dataset
from app.data.models.network import LayerSpec, NetworkSpec
from app.services.geometry import make_disk, make_straight_edge
from app.services.neuralnet import Network


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    """Keep structured log output out of the test report."""
    configure_logging("WARNING", "console")


@pytest.fixture
def disk():
    """Provide the standard 105 mm disk."""
    return make_disk()


@pytest.fixture
def straight_edge():
    """Provide an open straight edge along +x."""
    return make_straight_edge()


@pytest.fixture
def tiny_spec():
    """Provide a small conv/pool/dense stack on 8x8 inputs."""
    return NetworkSpec(
        input_shape=(8, 8, 1),
        layers=[
            LayerSpec(kind="conv2d", kernel=3, filters=2, same_pad=True),
            LayerSpec(kind="relu"),
            LayerSpec(kind="maxpool2x2"),
            LayerSpec(kind="flatten"),
            LayerSpec(kind="dense", units=4),
            LayerSpec(kind="relu"),
            LayerSpec(kind="dropout", rate=0.25),
            LayerSpec(kind="dense", units=2),
        ],
    )


@pytest.fixture
def tiny_network(tiny_spec):
    """Provide an initialized float64 network on 8x8 inputs."""
    return Network(tiny_spec, seed=3)


def make_dataset(count: int = 10, frames: int = 3, size: int = 8, seed: int = 0):
    rng = np.random.default_rng(seed)
    return Dataset(
        frames=rng.random((count, frames, size, size)).astype(np.float32),
        labels=np.stack(
            [rng.uniform(-6, 9, count), rng.uniform(-45, 45, count)], axis=1
        ).astype(np.float32),
        modes=np.zeros(count, dtype=np.uint8),
    )


@pytest.fixture
def small_dataset():
    """Provide a random 10-sample dataset of 3-frame 8x8 windows."""
    return make_dataset()


@pytest.fixture
def out_dir(tmp_path) -> Path:
    """Provide a fresh output directory."""
    return tmp_path / "out"
