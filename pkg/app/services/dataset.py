"""
Tap collection, train/validation split and shift augmentation.

Every sample draws its pose, tilt jitter and pixel noise from its own stream
derived from ``(seed, sample index)``, so a collection is identical for any
worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import structlog
from scipy import ndimage

from app.core.config import settings
from app.core.constants import LABEL_RANGES, TRAINING_DEFAULTS
from app.core.exceptions import ValidationError
from app.core.utils import derive_rng, unit_vector, validate_range
from app.data import DatasetRepository
from app.data.models.dataset import MODE_CODES, Dataset, Sample
from app.data.models.geometry import Contour
from app.data.models.sensor import ContactParams, ImageSpec, SensorState
from app.services.base import BaseService
from app.services.geometry import anchor_pose
from app.services.tactile import TactileSensor

logger = structlog.get_logger()

_SPLIT_STREAM = 0x5EED

Ranges = Tuple[Tuple[float, float], Tuple[float, float]]


def pose_from_label(
    contour: Contour,
    r: float,
    theta: float,
    anchor: Optional[Tuple[Any, float]] = None,
) -> SensorState:
    """Pose ``r`` mm off the anchor along its normal, turned ``theta`` deg."""
    point, normal_deg = anchor if anchor is not None else anchor_pose(contour)
    position = np.asarray(point) + r * unit_vector(normal_deg)
    return SensorState(
        x=float(position[0]), y=float(position[1]), heading=normal_deg + theta
    )


def collect_sample(
    contour: Contour,
    index: int,
    seed: int,
    ranges: Ranges = (LABEL_RANGES["R_MM"], LABEL_RANGES["THETA_DEG"]),
    params: ContactParams = ContactParams(),
    image_size: int = settings.IMAGE_SIZE,
    noise: float = settings.PIXEL_NOISE,
) -> Sample:
    """One tap at a uniformly drawn edge pose, reduced to its peak window."""
    rng = derive_rng(seed, index)
    r = float(rng.uniform(*ranges[0]))
    theta = float(rng.uniform(*ranges[1]))
    sensor = TactileSensor(image=ImageSpec(size=image_size), noise=noise)
    window = sensor.tap_window(
        contour, pose_from_label(contour, r, theta), params, rng, jitter=True
    )
    return Sample(
        frames=np.asarray(window, dtype=np.float32), r=r, theta=theta, seed=index
    )


CollectJob = Tuple[Contour, List[int], int, Ranges, ContactParams, int, float]


def _collect_chunk(job: CollectJob) -> List[Sample]:
    contour, indices, seed, ranges, params, image_size, noise = job
    return [
        collect_sample(contour, i, seed, ranges, params, image_size, noise)
        for i in indices
    ]


def collect_taps(
    contour: Contour,
    n: int,
    ranges: Ranges = (LABEL_RANGES["R_MM"], LABEL_RANGES["THETA_DEG"]),
    seed: int = settings.DEFAULT_SEED,
    params: ContactParams = ContactParams(),
    image_size: int = settings.IMAGE_SIZE,
    noise: float = settings.PIXEL_NOISE,
    workers: int = 1,
) -> Dataset:
    """
    Collect ``n`` labeled taps around the contour's reference point.

    Raises:
        ValidationError: If ``n`` < 1 or a range is empty
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    ranges = (
        validate_range("r range", ranges[0]),
        validate_range("theta range", ranges[1]),
    )
    logger.info(
        "Collecting taps", object=contour.name, n=n, seed=seed, workers=workers
    )

    indices = list(range(n))
    if workers > 1:
        chunks = [indices[k::workers] for k in range(workers)]
        jobs = [
            (contour, chunk, seed, ranges, params, image_size, noise)
            for chunk in chunks
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_collect_chunk, jobs))
        by_index: Dict[int, Sample] = {}
        for chunk, chunk_samples in zip(chunks, results):
            by_index.update(zip(chunk, chunk_samples))
        samples = [by_index[i] for i in indices]
    else:
        samples = _collect_chunk(
            (contour, indices, seed, ranges, params, image_size, noise)
        )

    return Dataset(
        frames=np.stack([s.frames for s in samples]).astype(np.float32),
        labels=np.array([[s.r, s.theta] for s in samples], dtype=np.float32),
        modes=np.full(n, MODE_CODES["tap"], dtype=np.uint8),
        indices=np.arange(n),
    )


def split_sizes(n: int) -> Tuple[int, int]:
    """1600/400 for the standard 2000-tap collection, 80/20 otherwise."""
    standard = TRAINING_DEFAULTS["TRAIN_SAMPLES"] + TRAINING_DEFAULTS["VAL_SAMPLES"]
    if n == standard:
        return TRAINING_DEFAULTS["TRAIN_SAMPLES"], TRAINING_DEFAULTS["VAL_SAMPLES"]
    n_train = int(round(0.8 * n))
    return n_train, n - n_train


def subset(dataset: Dataset, rows: np.ndarray, split: str) -> Dataset:
    return Dataset(
        frames=dataset.frames[rows],
        labels=dataset.labels[rows],
        modes=dataset.modes[rows],
        split=split,  # type: ignore[arg-type]
        provenance=dataset.provenance,
        indices=dataset.sample_indices[rows],
    )


def split_dataset(
    dataset: Dataset, seed: int, sizes: Optional[Tuple[int, int]] = None
) -> Tuple[Dataset, Dataset]:
    """
    Seeded disjoint train/validation split.

    Raises:
        ValidationError: If the requested sizes exceed the dataset
    """
    n_train, n_val = sizes or split_sizes(len(dataset))
    if n_train < 1 or n_val < 1 or n_train + n_val > len(dataset):
        raise ValidationError(
            f"cannot split {len(dataset)} samples into {n_train}/{n_val}"
        )
    order = derive_rng(seed, _SPLIT_STREAM).permutation(len(dataset))
    train_rows = np.sort(order[:n_train])
    val_rows = np.sort(order[n_train : n_train + n_val])
    return subset(dataset, train_rows, "train"), subset(dataset, val_rows, "val")


def shift_frame(frame: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """
    Translate a frame ``dx`` px right and ``dy`` px down with bilinear
    resampling and zero fill.
    """
    if dx == 0.0 and dy == 0.0:
        return frame.copy()
    return ndimage.shift(frame, (dy, dx), order=1, mode="constant", cval=0.0)


def augment_shift(
    frame: np.ndarray,
    seed: Union[int, np.random.Generator],
    max_fraction: float = TRAINING_DEFAULTS["SHIFT_FRACTION"],
) -> np.ndarray:
    """Random translation of up to ``max_fraction`` of each dimension."""
    rng = derive_rng(seed) if isinstance(seed, int) else seed
    height, width = frame.shape
    dx = float(rng.uniform(-max_fraction * width, max_fraction * width))
    dy = float(rng.uniform(-max_fraction * height, max_fraction * height))
    return shift_frame(frame, dx, dy)


class DatasetService(BaseService[Dataset]):
    """Collect, split and persist tactile datasets."""

    def __init__(self, repository: Optional[DatasetRepository] = None):
        super().__init__(repository or DatasetRepository(), "DatasetService")

    def collect(
        self,
        contour: Contour,
        n: int,
        seed: int,
        params: ContactParams = ContactParams(),
        image_size: int = settings.IMAGE_SIZE,
        noise: float = settings.PIXEL_NOISE,
        workers: int = 1,
        provenance: Optional[Dict[str, Any]] = None,
    ) -> Dataset:
        dataset = collect_taps(
            contour,
            n,
            seed=seed,
            params=params,
            image_size=image_size,
            noise=noise,
            workers=workers,
        )
        details = {"object": contour.name, "seed": seed, "n": n}
        details.update(provenance or {})
        self._log_operation("collect", details)
        return dataset.model_copy(update={"provenance": details})

    def split(self, dataset: Dataset, seed: int) -> Tuple[Dataset, Dataset]:
        train, val = split_dataset(dataset, seed)
        self._log_operation("split", {"train": len(train), "val": len(val)})
        return train, val
