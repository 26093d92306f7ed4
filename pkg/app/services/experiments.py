"""
Command orchestration: each ``cmd_*`` resolves its inputs from an
:class:`ExperimentConfig`, runs one experiment and writes its outputs, plus
the resolved configuration, into the output directory.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.core.constants import TABLE1_GRID
from app.core.exceptions import ConfigurationError, ValidationError
from app.core.utils import atomic_write_text, derive_seed
from app.data import (
    ContourRepository,
    DatasetRepository,
    HistoryRepository,
    ModelRepository,
    TrajectoryRepository,
    rows_to_csv,
    write_pgm,
)
from app.data.models.dataset import Dataset
from app.data.models.experiment import ExperimentConfig
from app.data.models.geometry import Contour
from app.data.models.network import AdamConfig, TrainConfig, TrainingHistory
from app.data.models.sensor import ContactParams, ImageSpec
from app.data.models.servo import ServoParams, Trajectory, TrajectoryMetrics
from app.services.dataset import DatasetService
from app.services.geometry import CONTOUR_BUILDERS, make_contour
from app.services.neuralnet import Network, build_network, predict_batch, train
from app.services.reporting import (
    GridResult,
    PerceptionSummary,
    bins_csv,
    curve_csv,
    metrics_line,
    summarize_predictions,
    summary_text,
    table1_csv,
    table1_text,
    trajectory_svg,
)
from app.services.servo import (
    NetworkPerceiver,
    OraclePerceiver,
    Perceiver,
    ServoService,
    TemplatePerceiver,
    run_contour,
    trajectory_metrics,
)
from app.services.tactile import TactileSensor

logger = structlog.get_logger()

CONFIG_FILE = "config.txt"


def output_dir(config: ExperimentConfig) -> Path:
    return Path(config.out)


def write_config(config: ExperimentConfig) -> Path:
    """Record the resolved configuration next to the outputs."""
    return atomic_write_text(output_dir(config) / CONFIG_FILE, config.to_text())


def _write(config: ExperimentConfig, name: str, text: str) -> Path:
    path = atomic_write_text(output_dir(config) / name, text)
    logger.info("Wrote output", path=str(path))
    return path


def resolve_contour(name: str) -> Contour:
    """
    A built-in object by name, or a contour text file by path.

    Raises:
        ValidationError: If ``name`` is neither
    """
    if name in CONTOUR_BUILDERS:
        return make_contour(name)
    path = Path(name)
    if path.suffix or path.exists():
        return ContourRepository().load(path)
    return make_contour(name)


def _require_path(value: Optional[str], what: str) -> str:
    if not value:
        raise ConfigurationError(f"{what} path is required")
    return value


def load_network(path: str, dtype: str = "float64") -> Network:
    artifact = ModelRepository().load(path)
    return Network.from_artifact(artifact, dtype=dtype)


def make_sensor(
    config: ExperimentConfig, image_size: Optional[int] = None
) -> TactileSensor:
    return TactileSensor(
        image=ImageSpec(size=image_size or config.image_size), noise=config.noise
    )


def cmd_collect(config: ExperimentConfig) -> Path:
    """
    Collect ``config.n`` taps and write ``dataset.tcds`` with its provenance.

    Raises:
        ValidationError: If ``n`` < 1 or the object is unknown
        StorageError: If the output directory cannot be written
    """
    if config.n < 1:
        raise ValidationError(f"--n must be >= 1, got {config.n}")
    contour = resolve_contour(config.object)
    service = DatasetService()
    dataset = service.collect(
        contour,
        config.n,
        config.seed,
        params=config.contact,
        image_size=config.image_size,
        noise=config.noise,
        workers=config.workers,
        provenance={
            "config_hash": config.config_hash,
            "image_size": config.image_size,
        },
    )
    write_config(config)
    return service.save(dataset, output_dir(config) / "dataset.tcds")


def _train_config(config: ExperimentConfig) -> TrainConfig:
    overrides = config.training
    adam = AdamConfig(lr=overrides.lr) if overrides.lr else AdamConfig()
    return TrainConfig(
        batch_size=overrides.batch_size,
        max_epochs=overrides.max_epochs,
        patience=overrides.patience,
        seed=config.seed,
        augment=overrides.augment,
        adam=adam,
        dtype=overrides.dtype,
    )


def cmd_train(config: ExperimentConfig) -> Tuple[Path, TrainingHistory, str]:
    """
    Train the configured architecture on a collected dataset.

    Returns:
        Tuple of the model path, the history and the summary line

    Raises:
        ConfigurationError: If no dataset is given
        NotFoundError: If the dataset file is missing
        TrainingDivergedError: If training produces a non-finite loss
    """
    service = DatasetService()
    dataset = service.load(_require_path(config.dataset, "dataset"))
    train_set, val_set = service.split(dataset, config.seed)
    recipe = _train_config(config)
    height, width = dataset.frame_shape
    if height != width:
        raise ConfigurationError(f"frames must be square, got {height}x{width}")
    network = build_network(
        config.arch or "A", height, seed=config.seed, dtype=recipe.dtype
    )
    history = train(network, train_set, val_set, recipe)

    write_config(config)
    model_path = ModelRepository().save(
        network.to_artifact(history), output_dir(config) / "model.tcnn"
    )
    HistoryRepository().save(history, output_dir(config) / "history.csv")
    summary = (
        f"best val loss {history.best_val_loss:.6f} at epoch {history.best_epoch}, "
        f"{history.epochs_run} epochs run"
        + (" (early stop)" if history.stopped_early else "")
    )
    _write(config, "summary.txt", summary + "\n")
    return model_path, history, summary


def evaluation_arrays(
    dataset: Dataset, frames: str = "all"
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Frames, labels and (sample, frame) indices to evaluate: every window frame
    or only the center one.
    """
    count, per_sample = len(dataset), dataset.frames_per_sample
    if frames == "center":
        picks = np.full(count, per_sample // 2)
        rows = np.arange(count)
    else:
        rows = np.repeat(np.arange(count), per_sample)
        picks = np.tile(np.arange(per_sample), count)
    index = np.stack([rows, picks], axis=1)
    return dataset.frames[rows, picks], dataset.labels[rows].astype(float), index


def cmd_eval(config: ExperimentConfig) -> PerceptionSummary:
    """
    Predict every test frame and write predictions, summary, binned errors and
    the moving-average error curve.

    Raises:
        ShapeMismatchError: If the model and the test frames disagree in size
    """
    network = load_network(
        _require_path(config.model, "model"), config.training.dtype
    )
    dataset = DatasetRepository().load(_require_path(config.dataset, "dataset"))
    frames, labels, index = evaluation_arrays(dataset, config.eval_frames)
    predictions = predict_batch(network, frames)
    summary = summarize_predictions(labels, predictions)

    write_config(config)
    rows = [
        (int(s), int(f), float(t[0]), float(t[1]), float(p[0]), float(p[1]))
        for (s, f), t, p in zip(index, labels, predictions)
    ]
    _write(
        config,
        "predictions.csv",
        rows_to_csv(
            ("sample", "frame", "r_mm", "theta_deg", "pred_r_mm", "pred_theta_deg"),
            rows,
        ),
    )
    _write(config, "eval_summary.txt", summary_text(summary))
    _write(config, "bins.csv", bins_csv(summary))
    _write(config, "error_curve.csv", curve_csv(summary))
    logger.info(
        "Evaluation finished",
        samples=summary.count,
        mae_r=round(summary.mae_r, 4),
        mae_theta=round(summary.mae_theta, 3),
        central_mae_r=round(summary.central_mae_r, 4),
        central_mae_theta=round(summary.central_mae_theta, 3),
    )
    return summary


def make_perceiver(
    config: ExperimentConfig, model: Optional[str] = None
) -> Tuple[Perceiver, int]:
    """
    Oracle, nearest-neighbour template or trained network, with the image size
    the sensor must render for it.

    Only the follow model (``model`` unset) is checked against ``config.arch``.

    Raises:
        ConfigurationError: If no perceiver source is configured, or the model
            was trained with another architecture than ``config.arch``
    """
    if config.oracle:
        return OraclePerceiver(), config.image_size
    if config.template and not (model or config.model):
        dataset = DatasetRepository().load(config.template)
        return TemplatePerceiver(dataset), dataset.frame_shape[0]
    network = load_network(
        _require_path(model or config.model, "model"), config.training.dtype
    )
    if model is None and config.arch and network.spec.architecture != config.arch:
        raise ConfigurationError(
            f"model is architecture {network.spec.architecture}, "
            f"--arch asks for {config.arch}"
        )
    size = network.input_hw[0]
    return NetworkPerceiver(network, size), size


def cmd_follow(
    config: ExperimentConfig,
) -> Tuple[Trajectory, Optional[TrajectoryMetrics], str]:
    """
    Run one contour and write the trajectory CSV, its SVG and the metrics line.

    A failed run is still a result: outputs are written and no error raised.
    """
    contour = resolve_contour(config.object)
    perceiver, size = make_perceiver(config)
    trajectory, metrics = ServoService().follow(
        contour,
        perceiver,
        config.mode,
        config.servo,
        config.contact,
        (config.start_r, config.start_theta),
        config.max_steps,
        config.seed,
        make_sensor(config, size),
    )
    line = metrics_line(metrics)
    write_config(config)
    TrajectoryRepository().save(trajectory, output_dir(config) / "trajectory.csv")
    _write(config, "trajectory.svg", trajectory_svg(contour, [trajectory]))
    _write(
        config,
        "metrics.txt",
        f"{line}\nstatus: {trajectory.status.value}\n"
        f"steps: {len(trajectory.records)}\nprogress: {trajectory.progress:.4f}\n",
    )
    return trajectory, metrics, line


@dataclass
class GridCell:
    mode: str
    experiment: str
    parameter: str
    value: float


def table1_cells() -> List[GridCell]:
    """Default rows for both modes followed by the full parameter grid."""
    cells = [GridCell(mode, "defaults", "default", 0.0) for mode in ("tap", "slide")]
    cells += [GridCell(*row) for row in TABLE1_GRID]
    return cells


def cell_settings(
    cell: GridCell, servo: ServoParams, contact: ContactParams
) -> Tuple[ServoParams, ContactParams, Tuple[float, float]]:
    """Servo and contact parameters plus start pose for one grid cell."""
    start = (0.0, 0.0)
    if cell.parameter == "start_r":
        start = (cell.value, 0.0)
    elif cell.parameter == "step":
        servo = servo.model_copy(update={"step": cell.value})
    elif cell.parameter == "r0":
        servo = servo.model_copy(update={"r0": cell.value})
    elif cell.parameter == "depth_offset":
        contact = contact.model_copy(update={"depth_offset": cell.value})
    return servo, contact, start


CellJob = Tuple[GridCell, Contour, Perceiver, TactileSensor, ExperimentConfig, int]


def _run_cell(job: CellJob) -> Tuple[GridResult, Trajectory]:
    cell, contour, perceiver, sensor, config, seed = job
    servo, contact, start = cell_settings(cell, config.servo, config.contact)
    trajectory = run_contour(
        contour,
        perceiver,
        cell.mode,
        servo,
        contact,
        start,
        config.max_steps,
        seed,
        sensor,
    )
    try:
        metrics: Optional[TrajectoryMetrics] = trajectory_metrics(trajectory)
    except ValidationError:
        metrics = None
    result = GridResult(
        mode=cell.mode,
        experiment=cell.experiment,
        parameter=cell.parameter,
        value=cell.value,
        metrics=metrics,
        status=trajectory.status,
    )
    return result, trajectory


def cmd_table1(config: ExperimentConfig) -> Tuple[List[GridResult], str]:
    """
    Run the disk accuracy grid for tapping and sliding and write the text
    table, its CSV twin and one SVG per mode.

    Raises:
        ConfigurationError: If a mode has no model and no oracle is requested
        NotFoundError: If a model file is missing
    """
    contour = resolve_contour(config.object)
    perceivers: Dict[str, Tuple[Perceiver, int]] = {}
    for mode, model in (("tap", config.model), ("slide", config.slide_model)):
        if not config.oracle and not model:
            raise ConfigurationError(f"no model given for {mode} runs")
        perceivers[mode] = make_perceiver(config, model)

    cells = table1_cells()
    jobs: List[CellJob] = []
    for index, cell in enumerate(cells):
        perceiver, size = perceivers[cell.mode]
        jobs.append(
            (
                cell,
                contour,
                perceiver,
                make_sensor(config, size),
                config,
                derive_seed(config.seed, index),
            )
        )
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_cell, jobs))
    else:
        outcomes = [_run_cell(job) for job in jobs]
    results = [result for result, _ in outcomes]

    reference = ""
    if config.template:
        template = TemplatePerceiver(DatasetRepository().load(config.template))
        size = template.frame_shape[0]
        cells_ref = [cell for cell in cells if cell.parameter == "default"]
        sensor = make_sensor(config, size)
        refs = [
            _run_cell((cell, contour, template, sensor, config, config.seed))[0]
            for cell in cells_ref
        ]
        reference = "reference (template matching): " + ", ".join(
            f"{ref.mode} {ref.cell}" for ref in refs
        )

    write_config(config)
    text = table1_text(results, reference)
    _write(config, "table1.txt", text)
    _write(config, "table1.csv", table1_csv(results))
    for mode in ("tap", "slide"):
        runs = [t for (r, t) in outcomes if r.mode == mode]
        _write(config, f"table1_{mode}.svg", trajectory_svg(contour, runs))
    return results, text


def cmd_plot(
    config: ExperimentConfig,
    trajectories: Sequence[str] = (),
    frames: int = 0,
) -> List[Path]:
    """
    Redraw trajectory CSVs over the configured object and dump the first
    ``frames`` dataset windows as PGM images.
    """
    written: List[Path] = []
    if trajectories:
        contour = resolve_contour(config.object)
        repository = TrajectoryRepository()
        runs = [repository.load(path) for path in trajectories]
        written.append(_write(config, "plot.svg", trajectory_svg(contour, runs)))
    if frames > 0:
        dataset = DatasetRepository().load(_require_path(config.dataset, "dataset"))
        for sample in range(min(frames, len(dataset))):
            for frame in range(dataset.frames_per_sample):
                path = output_dir(config) / f"sample{sample:04d}_frame{frame}.pgm"
                written.append(write_pgm(dataset.frames[sample, frame], path))
    write_config(config)
    logger.info("Plot finished", files=len(written))
    return written
