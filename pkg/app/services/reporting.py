"""
Plots and tables: trajectory SVGs, perception error summaries and the disk
accuracy grid.

SVG output carries no timestamps or random ids, so identical runs produce
identical files.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.constants import LABEL_RANGES, SVG_SETTINGS
from app.core.exceptions import ValidationError
from app.core.utils import format_mm_deg, moving_average, unit_vector, wrap_angle_deg
from app.data import rows_to_csv
from app.data.models.geometry import Contour
from app.data.models.servo import Trajectory, TrajectoryMetrics, TrajectoryStatus
from app.services.geometry import dense_polyline

PATH_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e")


def _polyline(
    points: np.ndarray,
    to_px: Callable[[np.ndarray], Tuple[float, float]],
    color: str,
    width: float,
) -> str:
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in (to_px(p) for p in points))
    return (
        f'  <polyline points="{coords}" fill="none" stroke="{color}" '
        f'stroke-width="{width:g}"/>'
    )


def trajectory_svg(
    contour: Contour,
    trajectories: Sequence[Trajectory] = (),
    colors: Sequence[str] = PATH_COLORS,
    tick_every: int = SVG_SETTINGS["TICK_EVERY"],
) -> str:
    """
    Contour outline in black with each sensor path in color and a heading tick
    every ``tick_every`` steps; failed runs end in a hollow circle.
    """
    scale = SVG_SETTINGS["PX_PER_MM"]
    margin = SVG_SETTINGS["MARGIN_PX"]
    tick = SVG_SETTINGS["TICK_LENGTH_MM"]
    outline = dense_polyline(contour)
    if contour.closed:
        outline = np.vstack([outline, outline[:1]])
    paths = [
        np.array([[record.state.x, record.state.y] for record in t.records])
        for t in trajectories
        if t.records
    ]
    every = np.vstack([outline, *paths]) if paths else outline
    low = every.min(axis=0) - tick
    high = every.max(axis=0) + tick
    width = (high[0] - low[0]) * scale + 2 * margin
    height = (high[1] - low[1]) * scale + 2 * margin

    def to_px(point: np.ndarray) -> Tuple[float, float]:
        return (
            (point[0] - low[0]) * scale + margin,
            (high[1] - point[1]) * scale + margin,
        )

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.2f} {height:.2f}">',
        f'  <title>{contour.name}</title>',
        _polyline(outline, to_px, SVG_SETTINGS["CONTOUR_COLOR"], 1.5),
    ]
    drawn = [t for t in trajectories if t.records]
    for index, trajectory in enumerate(drawn):
        color = colors[index % len(colors)]
        parts.append(_polyline(paths[index], to_px, color, 1.0))
        for record in trajectory.records[::tick_every]:
            tail = to_px(record.state.position)
            head = to_px(
                record.state.position + tick * unit_vector(record.state.heading)
            )
            parts.append(
                f'  <line x1="{tail[0]:.2f}" y1="{tail[1]:.2f}" '
                f'x2="{head[0]:.2f}" y2="{head[1]:.2f}" '
                f'stroke="{color}" stroke-width="1"/>'
            )
        if trajectory.status == TrajectoryStatus.FAILED:
            end = to_px(paths[index][-1])
            parts.append(
                f'  <circle cx="{end[0]:.2f}" cy="{end[1]:.2f}" r="4" '
                f'fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def metrics_line(metrics: Optional[TrajectoryMetrics]) -> str:
    """Table cell for one run: ``<r> mm, <theta> deg`` or ``fail``."""
    if metrics is None or not metrics.completed:
        return "fail"
    return format_mm_deg(metrics.radial_mae, metrics.angle_mae)


@dataclass
class PerceptionSummary:
    """Aggregate prediction errors over a test set."""

    count: int
    mae_r: float
    mae_theta: float
    central_count: int
    central_mae_r: float
    central_mae_theta: float
    bins: List[Tuple[float, float, int, float, float]]
    curve: List[Tuple[float, float, float]]


def summarize_predictions(
    labels: np.ndarray,
    predictions: np.ndarray,
    central: Tuple[float, float] = (-3.0, 3.0),
    bin_width: float = 1.0,
    r_range: Tuple[float, float] = LABEL_RANGES["R_MM"],
    window: Optional[int] = None,
) -> PerceptionSummary:
    """
    Overall and central-region MAE, errors binned by true radial position, and
    a moving-average error curve over radial position.

    The curve window defaults to 1/28 of the sample count.

    Raises:
        ValidationError: If the arrays are empty or their shapes differ
    """
    labels = np.asarray(labels, dtype=float)
    predictions = np.asarray(predictions, dtype=float)
    if labels.shape != predictions.shape or labels.ndim != 2 or len(labels) == 0:
        raise ValidationError(
            f"labels {labels.shape} and predictions {predictions.shape} must be "
            "matching non-empty (N, 2) arrays"
        )
    err_r = np.abs(predictions[:, 0] - labels[:, 0])
    err_theta = np.abs(
        [wrap_angle_deg(p - t) for p, t in zip(predictions[:, 1], labels[:, 1])]
    )
    inside = (labels[:, 0] >= central[0]) & (labels[:, 0] <= central[1])

    edges = np.arange(r_range[0], r_range[1] + 0.5 * bin_width, bin_width)
    bins = []
    for low, high in zip(edges[:-1], edges[1:]):
        last = high >= r_range[1]
        members = (labels[:, 0] >= low) & (
            (labels[:, 0] <= high) if last else (labels[:, 0] < high)
        )
        count = int(members.sum())
        bins.append(
            (
                float(low),
                float(high),
                count,
                float(err_r[members].mean()) if count else float("nan"),
                float(err_theta[members].mean()) if count else float("nan"),
            )
        )

    order = np.argsort(labels[:, 0], kind="stable")
    span = window or max(1, len(labels) // 28)
    curve_r = moving_average(err_r[order], span)
    curve_theta = moving_average(err_theta[order], span)
    curve = [
        (float(r), float(a), float(b))
        for r, a, b in zip(labels[order, 0], curve_r, curve_theta)
    ]

    central_count = int(inside.sum())
    return PerceptionSummary(
        count=len(labels),
        mae_r=float(err_r.mean()),
        mae_theta=float(err_theta.mean()),
        central_count=central_count,
        central_mae_r=float(err_r[inside].mean()) if central_count else float("nan"),
        central_mae_theta=(
            float(err_theta[inside].mean()) if central_count else float("nan")
        ),
        bins=bins,
        curve=curve,
    )


def summary_text(summary: PerceptionSummary) -> str:
    lines = [
        f"samples: {summary.count}",
        f"overall: {format_mm_deg(summary.mae_r, summary.mae_theta)}",
        f"central ({summary.central_count} samples): "
        f"{format_mm_deg(summary.central_mae_r, summary.central_mae_theta)}",
        "",
        f"{'r bin (mm)':>14}  {'n':>5}  {'MAE r (mm)':>10}  {'MAE theta (deg)':>15}",
    ]
    for low, high, count, mae_r, mae_theta in summary.bins:
        lines.append(
            f"{f'[{low:g}, {high:g})':>14}  {count:>5}  {mae_r:>10.3f}  "
            f"{mae_theta:>15.2f}"
        )
    return "\n".join(lines) + "\n"


def bins_csv(summary: PerceptionSummary) -> str:
    return rows_to_csv(
        ("r_low_mm", "r_high_mm", "count", "mae_r_mm", "mae_theta_deg"),
        summary.bins,
    )


def curve_csv(summary: PerceptionSummary) -> str:
    return rows_to_csv(("r_mm", "mae_r_mm", "mae_theta_deg"), summary.curve)


@dataclass
class GridResult:
    """One cell of the disk accuracy grid."""

    mode: str
    experiment: str
    parameter: str
    value: float
    metrics: Optional[TrajectoryMetrics]
    status: TrajectoryStatus

    @property
    def setting(self) -> str:
        if self.parameter == "default":
            return "defaults"
        return f"{self.parameter}={self.value:g}"

    @property
    def cell(self) -> str:
        return metrics_line(self.metrics)


def _by_mode(results: Sequence[GridResult], mode: str) -> List[GridResult]:
    return [result for result in results if result.mode == mode]


def table1_text(results: Sequence[GridResult], reference: str = "") -> str:
    """
    Two-column comparison: each experiment lists its tapping and sliding
    settings side by side.
    """
    header = f"{'experiment':<18} {'tap setting':<16} {'tapping':<22} "
    header += f"{'slide setting':<16} {'sliding':<22}"
    lines = [header, "-" * len(header)]
    experiments: List[str] = []
    for result in results:
        if result.experiment not in experiments:
            experiments.append(result.experiment)
    for experiment in experiments:
        taps = [r for r in _by_mode(results, "tap") if r.experiment == experiment]
        slides = [r for r in _by_mode(results, "slide") if r.experiment == experiment]
        for index in range(max(len(taps), len(slides))):
            tap = taps[index] if index < len(taps) else None
            slide = slides[index] if index < len(slides) else None
            lines.append(
                f"{experiment if index == 0 else '':<18} "
                f"{tap.setting if tap else '':<16} {tap.cell if tap else '':<22} "
                f"{slide.setting if slide else '':<16} "
                f"{slide.cell if slide else '':<22}".rstrip()
            )
    if reference:
        lines += ["", reference]
    return "\n".join(lines) + "\n"


def table1_csv(results: Sequence[GridResult]) -> str:
    rows = []
    for result in results:
        metrics = result.metrics
        rows.append(
            (
                result.mode,
                result.experiment,
                result.parameter,
                result.value,
                result.status.value,
                metrics.radial_mae if metrics else "",
                metrics.angle_mae if metrics else "",
                result.cell,
            )
        )
    return rows_to_csv(
        (
            "mode",
            "experiment",
            "parameter",
            "value",
            "status",
            "radial_mae_mm",
            "angle_mae_deg",
            "result",
        ),
        rows,
    )
