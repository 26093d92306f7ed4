"""
Repository pattern implementation for the file-backed data layer.

Every persisted artifact of the workbench lives in a plain file: datasets
(TCDS), trained networks (TCNN), contours (segment text), trajectories and
training histories (CSV) and debug frames (PGM). Repositories bridge those
formats and the pydantic models, and all writes go through a temporary file
and a rename.
"""

import csv
import io
import re
import struct
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Generic, Iterable, List, Sequence, Tuple, Type, TypeVar

import numpy as np
import pydantic

from app.core.constants import FILE_FORMATS, PEAK_WINDOW, TRAJECTORY_CSV_COLUMNS
from app.core.exceptions import FormatError, NotFoundError, ValidationError
from app.core.utils import (
    PathLike,
    atomic_write_bytes,
    atomic_write_text,
    dict_to_key_value_text,
    format_float,
    parse_key_value_text,
)
from app.data.models.base import BaseDataModel
from app.data.models.dataset import MODE_NAMES, Dataset
from app.data.models.geometry import ArcSegment, Contour, LineSegment, Segment
from app.data.models.network import (
    ARCHITECTURE_IDS,
    EpochRecord,
    LayerSpec,
    ModelArtifact,
    NetworkSpec,
    TrainingHistory,
)
from app.data.models.sensor import SensorState
from app.data.models.servo import (
    Action,
    EdgePose,
    ServoParams,
    Trajectory,
    TrajectoryRecord,
    TrajectoryStatus,
)

T = TypeVar("T", bound=BaseDataModel)


class BaseRepository(ABC, Generic[T]):
    """
    Base repository for one file format.

    Type Parameters:
        T: The data model type stored by the repository

    Attributes:
        model_class: The pydantic model class the format decodes to
        format_name: Short format name used in error messages

    Example:
        ```python
        class DatasetRepository(BaseRepository[Dataset]):
            def __init__(self):
                super().__init__(Dataset, "TCDS")
        ```
    """

    def __init__(self, model_class: Type[T], format_name: str):
        self.model_class = model_class
        self.format_name = format_name

    @abstractmethod
    def encode(self, model: T) -> bytes:
        """Serialize a model to the file payload."""

    @abstractmethod
    def decode(self, payload: bytes) -> T:
        """Parse a file payload back into a model."""

    def save(self, model: T, path: PathLike) -> Path:
        """
        Write ``model`` to ``path`` atomically.

        Raises:
            StorageError: If the path cannot be written
        """
        return atomic_write_bytes(path, self.encode(model))

    def load(self, path: PathLike) -> T:
        """
        Read a model from ``path``.

        Raises:
            NotFoundError: If the file does not exist
            FormatError: If the payload is malformed
        """
        return self.decode(self._read(path))

    def exists(self, path: PathLike) -> bool:
        return Path(path).is_file()

    def _read(self, path: PathLike) -> bytes:
        source = Path(path)
        if not source.is_file():
            raise NotFoundError(f"{self.format_name} file not found: {source}")
        return source.read_bytes()


class _ByteReader:
    """Sequential little-endian reader that reports where a payload ran short."""

    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    @property
    def remaining(self) -> int:
        return len(self.payload) - self.offset

    def unpack(self, fmt: str, section: str) -> Tuple[Any, ...]:
        size = struct.calcsize(fmt)
        if self.remaining < size:
            raise FormatError(
                f"Truncated file: expected {size} bytes, found {self.remaining}",
                offset=len(self.payload),
                section=section,
            )
        values = struct.unpack_from(fmt, self.payload, self.offset)
        self.offset += size
        return values

    def array(self, shape: Sequence[int], section: str) -> np.ndarray:
        count = int(np.prod(shape)) if len(shape) else 1
        size = 4 * count
        if self.remaining < size:
            raise FormatError(
                f"Truncated file: expected {size} bytes, found {self.remaining}",
                offset=len(self.payload),
                section=section,
            )
        data = np.frombuffer(self.payload, dtype="<f4", count=count, offset=self.offset)
        self.offset += size
        return data.reshape(shape).astype(np.float32)

    def expect_magic(self, magic: bytes) -> None:
        (found,) = self.unpack(f"<{len(magic)}s", "header")
        if found != magic:
            raise FormatError(
                f"Bad magic {found!r}, expected {magic!r}", offset=0, section="header"
            )

    def expect_version(self, version: int) -> None:
        start = self.offset
        (found,) = self.unpack("<I", "header")
        if found != version:
            raise FormatError(
                f"Unsupported format version {found}", offset=start, section="header"
            )

    def expect_end(self) -> None:
        if self.remaining:
            raise FormatError(
                f"{self.remaining} unexpected trailing bytes",
                offset=self.offset,
                section="trailer",
            )


_DATASET_HEADER = "<4sIIHH"
_SAMPLE_HEADER = "<BffB"


class DatasetRepository(BaseRepository[Dataset]):
    """
    TCDS dataset files.

    Layout (little-endian): magic ``TCDS``, u32 version, u32 sample count,
    u16 H, u16 W, then per sample u8 mode, f32 r, f32 theta, u8 frame count
    and the frames as f32 row-major. A ``<file>.provenance`` text sidecar
    keeps the collection provenance.

    A zero-sample file has no frame count on disk; it decodes to the
    collector's peak-window length.
    """

    def __init__(self) -> None:
        super().__init__(Dataset, "TCDS")

    @staticmethod
    def _record_dtype(frame_count: int, height: int, width: int) -> np.dtype:
        return np.dtype(
            [
                ("mode", "u1"),
                ("r", "<f4"),
                ("theta", "<f4"),
                ("count", "u1"),
                ("frames", "<f4", (frame_count, height, width)),
            ]
        )

    def encode(self, model: Dataset) -> bytes:
        count = len(model)
        frames_per_sample = model.frames_per_sample
        height, width = model.frame_shape
        if frames_per_sample > 255:
            raise ValidationError("At most 255 frames per sample can be stored")
        header = struct.pack(
            _DATASET_HEADER,
            FILE_FORMATS["DATASET_MAGIC"],
            FILE_FORMATS["DATASET_VERSION"],
            count,
            height,
            width,
        )
        records = np.zeros(
            count, dtype=self._record_dtype(frames_per_sample, height, width)
        )
        records["mode"] = model.modes
        records["r"] = model.labels[:, 0]
        records["theta"] = model.labels[:, 1]
        records["count"] = frames_per_sample
        records["frames"] = model.frames
        return header + records.tobytes()

    def decode(self, payload: bytes) -> Dataset:
        reader = _ByteReader(payload)
        reader.expect_magic(FILE_FORMATS["DATASET_MAGIC"])
        reader.expect_version(FILE_FORMATS["DATASET_VERSION"])
        count, height, width = reader.unpack("<IHH", "header")

        if count == 0:
            reader.expect_end()
            return Dataset(
                frames=np.zeros((0, PEAK_WINDOW, height, width), dtype=np.float32),
                labels=np.zeros((0, 2), dtype=np.float32),
                modes=np.zeros(0, dtype=np.uint8),
            )

        first = reader.offset
        _, _, _, frame_count = reader.unpack(_SAMPLE_HEADER, "sample 0 header")
        reader.offset = first
        dtype = self._record_dtype(frame_count, height, width)

        available = reader.remaining // dtype.itemsize
        if available < count:
            partial = reader.remaining - available * dtype.itemsize
            part = "header" if partial < struct.calcsize(_SAMPLE_HEADER) else "frames"
            raise FormatError(
                f"Truncated file: {count} samples declared, {available} complete",
                offset=len(payload),
                section=f"sample {available} {part}",
            )

        records = np.frombuffer(payload, dtype=dtype, count=count, offset=first)
        mismatched = np.flatnonzero(records["count"] != frame_count)
        if mismatched.size:
            index = int(mismatched[0])
            raise FormatError(
                "Samples must share one frame count",
                offset=first + index * dtype.itemsize,
                section=f"sample {index} header",
            )
        unknown = np.flatnonzero(~np.isin(records["mode"], list(MODE_NAMES)))
        if unknown.size:
            index = int(unknown[0])
            raise FormatError(
                f"Unknown mode code {int(records['mode'][index])}",
                offset=first + index * dtype.itemsize,
                section=f"sample {index} header",
            )
        reader.offset = first + count * dtype.itemsize
        reader.expect_end()

        return Dataset(
            frames=np.array(records["frames"], dtype=np.float32),
            labels=np.stack([records["r"], records["theta"]], axis=1).astype(
                np.float32
            ),
            modes=np.array(records["mode"], dtype=np.uint8),
        )

    @staticmethod
    def provenance_path(path: PathLike) -> Path:
        target = Path(path)
        return target.with_name(target.name + ".provenance")

    def save(self, model: Dataset, path: PathLike) -> Path:
        target = super().save(model, path)
        if model.provenance:
            atomic_write_text(
                self.provenance_path(target), dict_to_key_value_text(model.provenance)
            )
        return target

    def load(self, path: PathLike) -> Dataset:
        dataset = super().load(path)
        sidecar = self.provenance_path(path)
        if sidecar.is_file():
            provenance = parse_key_value_text(sidecar.read_text(encoding="utf-8"))
            dataset = dataset.model_copy(update={"provenance": provenance})
        return dataset


LAYER_KIND_CODES = {
    "conv2d": 0,
    "relu": 1,
    "maxpool2x2": 2,
    "flatten": 3,
    "dense": 4,
    "dropout": 5,
}
LAYER_KIND_NAMES = {code: kind for kind, code in LAYER_KIND_CODES.items()}
ARCHITECTURE_NAMES = {code: name for name, code in ARCHITECTURE_IDS.items()}

_MODEL_HEADER = "<4sIBHHH4dH"


def _layer_params(layer: LayerSpec) -> Tuple[int, int, int, int]:
    if layer.kind == "conv2d":
        return (layer.kernel, layer.filters, layer.stride, int(layer.same_pad))
    if layer.kind == "dense":
        return (layer.units, 0, 0, 0)
    if layer.kind == "dropout":
        return (int(round(layer.rate * 1000)), 0, 0, 0)
    return (0, 0, 0, 0)


def _layer_from_params(kind: str, params: Tuple[int, ...]) -> LayerSpec:
    if kind == "conv2d":
        return LayerSpec(
            kind="conv2d",
            kernel=params[0],
            filters=params[1],
            stride=params[2],
            same_pad=bool(params[3]),
        )
    if kind == "dense":
        return LayerSpec(kind="dense", units=params[0])
    if kind == "dropout":
        return LayerSpec(kind="dropout", rate=params[0] / 1000.0)
    return LayerSpec(kind=kind)  # type: ignore[arg-type]


class ModelRepository(BaseRepository[ModelArtifact]):
    """
    TCNN model files.

    Layout (little-endian): magic ``TCNN``, u32 version, u8 architecture id,
    u16 input H, W, C, four f64 label-range bounds, u16 layer count, per layer
    u8 kind and four i32 parameters, u32 tensor count, per tensor u8 ndim,
    u32 dims and f32 data in declaration order.
    """

    def __init__(self) -> None:
        super().__init__(ModelArtifact, "TCNN")

    def encode(self, model: ModelArtifact) -> bytes:
        spec = model.spec
        height, width, channels = spec.input_shape
        parts: List[bytes] = [
            struct.pack(
                _MODEL_HEADER,
                FILE_FORMATS["MODEL_MAGIC"],
                FILE_FORMATS["MODEL_VERSION"],
                spec.architecture_id,
                height,
                width,
                channels,
                *model.r_range,
                *model.theta_range,
                len(spec.layers),
            )
        ]
        for layer in spec.layers:
            parts.append(
                struct.pack("<B4i", LAYER_KIND_CODES[layer.kind], *_layer_params(layer))
            )
        parts.append(struct.pack("<I", len(model.parameters)))
        for tensor in model.parameters:
            parts.append(struct.pack("<B", tensor.ndim))
            parts.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            parts.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
        return b"".join(parts)

    def decode(self, payload: bytes) -> ModelArtifact:
        reader = _ByteReader(payload)
        reader.expect_magic(FILE_FORMATS["MODEL_MAGIC"])
        reader.expect_version(FILE_FORMATS["MODEL_VERSION"])
        arch_offset = reader.offset
        arch_id, height, width, channels = reader.unpack("<BHHH", "header")
        r_lo, r_hi, t_lo, t_hi = reader.unpack("<4d", "label ranges")
        (layer_count,) = reader.unpack("<H", "layer table")
        if arch_id not in ARCHITECTURE_NAMES:
            raise FormatError(
                f"Unknown architecture id {arch_id}",
                offset=arch_offset,
                section="header",
            )

        layers: List[LayerSpec] = []
        for index in range(layer_count):
            start = reader.offset
            code, *params = reader.unpack("<B4i", f"layer {index}")
            if code not in LAYER_KIND_NAMES:
                raise FormatError(
                    f"Unknown layer kind {code}", offset=start, section=f"layer {index}"
                )
            layers.append(_layer_from_params(LAYER_KIND_NAMES[code], tuple(params)))

        (tensor_count,) = reader.unpack("<I", "tensor table")
        parameters: List[np.ndarray] = []
        for index in range(tensor_count):
            (ndim,) = reader.unpack("<B", f"tensor {index}")
            shape = reader.unpack(f"<{ndim}I", f"tensor {index}") if ndim else ()
            parameters.append(reader.array(shape, f"tensor {index}"))
        reader.expect_end()

        try:
            spec = NetworkSpec(
                architecture=ARCHITECTURE_NAMES[arch_id],  # type: ignore[arg-type]
                input_shape=(height, width, channels),
                layers=layers,
            )
        except pydantic.ValidationError as exc:
            raise FormatError(
                f"Invalid layer table: {exc.errors()[0]['msg']}",
                offset=arch_offset,
                section="layer table",
            ) from exc
        return ModelArtifact(
            spec=spec,
            r_range=(r_lo, r_hi),
            theta_range=(t_lo, t_hi),
            parameters=parameters,
        )


class ContourRepository(BaseRepository[Contour]):
    """
    Plain-text contour files, one primitive per line.

    ```
    # comment
    name volute
    closed true
    arc 0 0 30 -90 90
    line 0 -70 0 -30
    ```

    ``line x0 y0 x1 y1`` and ``arc cx cy radius start_deg sweep_deg`` use mm
    and degrees.
    """

    def __init__(self) -> None:
        super().__init__(Contour, "contour")

    def encode(self, model: Contour) -> bytes:
        lines = [f"name {model.name}", f"closed {str(model.closed).lower()}"]
        for segment in model.segments:
            if isinstance(segment, LineSegment):
                values = (*segment.start, *segment.end)
            else:
                values = (
                    *segment.center,
                    segment.radius,
                    segment.start_deg,
                    segment.sweep_deg,
                )
            lines.append(
                " ".join([segment.kind, *(format_float(v) for v in values)])
            )
        return ("\n".join(lines) + "\n").encode("utf-8")

    def decode(self, payload: bytes) -> Contour:
        name = "contour"
        closed = True
        segments: List[Segment] = []
        offset = 0
        for number, raw in enumerate(payload.decode("utf-8").splitlines(True), 1):
            line_offset = offset
            offset += len(raw.encode("utf-8"))
            tokens = raw.split("#", 1)[0].split()
            if not tokens:
                continue
            keyword, args = tokens[0].lower(), tokens[1:]
            section = f"line {number}"
            if keyword == "name" and len(args) == 1:
                name = args[0]
            elif keyword == "closed" and len(args) == 1:
                if args[0].lower() not in ("true", "false"):
                    raise FormatError(
                        "closed must be true or false", line_offset, section
                    )
                closed = args[0].lower() == "true"
            elif keyword in ("line", "arc") and len(args) == (
                4 if keyword == "line" else 5
            ):
                try:
                    values = [float(v) for v in args]
                except ValueError as exc:
                    raise FormatError(f"Bad number: {exc}", line_offset, section)
                segments.append(self._segment(keyword, values, section))
            else:
                raise FormatError(
                    f"Unrecognized primitive {raw.strip()!r}", line_offset, section
                )

        if not segments:
            raise FormatError("Contour file has no segments", offset, "segments")
        try:
            return Contour(name=name, closed=closed, segments=segments)
        except pydantic.ValidationError as exc:
            raise ValidationError(f"Invalid contour: {exc.errors()[0]['msg']}")

    @staticmethod
    def _segment(keyword: str, values: List[float], section: str) -> Segment:
        try:
            if keyword == "line":
                return LineSegment(
                    start=(values[0], values[1]), end=(values[2], values[3])
                )
            return ArcSegment(
                center=(values[0], values[1]),
                radius=values[2],
                start_deg=values[3],
                sweep_deg=values[4],
            )
        except pydantic.ValidationError as exc:
            raise ValidationError(f"Invalid {section}: {exc.errors()[0]['msg']}")


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Render rows as CSV text; floats use their shortest round-trip form."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [format_float(v) if isinstance(v, float) else v for v in row]
        )
    return buffer.getvalue()


def csv_to_rows(text: str) -> List[Dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


_TRAJECTORY_EXTRA_COLUMNS = (
    "mode",
    "sensed_r_mm",
    "sensed_theta_deg",
    "arc_position_mm",
    "at_corner",
)


class TrajectoryRepository(BaseRepository[Trajectory]):
    """
    Trajectory CSV: one row per sense-act cycle, the final status repeated on
    every row, followed by the bookkeeping columns needed to redraw a run.
    """

    def __init__(self) -> None:
        super().__init__(Trajectory, "trajectory CSV")

    def encode(self, model: Trajectory) -> bytes:
        rows = []
        for record in model.records:
            rows.append(
                (
                    record.step,
                    record.state.x,
                    record.state.y,
                    record.state.heading,
                    record.pred.r,
                    record.pred.theta,
                    record.gt_r,
                    record.gt_theta,
                    record.action.dr,
                    record.action.dtheta,
                    record.action.de,
                    int(record.in_contact),
                    model.status.value,
                    model.mode,
                    record.sensed_r,
                    record.sensed_theta,
                    record.arc_position,
                    int(record.at_corner),
                )
            )
        header = TRAJECTORY_CSV_COLUMNS + _TRAJECTORY_EXTRA_COLUMNS
        return rows_to_csv(header, rows).encode("utf-8")

    def decode(self, payload: bytes) -> Trajectory:
        rows = csv_to_rows(payload.decode("utf-8"))
        try:
            records = [
                TrajectoryRecord(
                    step=int(row["step"]),
                    state=SensorState(
                        x=float(row["x_mm"]),
                        y=float(row["y_mm"]),
                        heading=float(row["heading_deg"]),
                        in_contact=row["in_contact"] == "1",
                    ),
                    pred=EdgePose(
                        r=float(row["pred_r_mm"]), theta=float(row["pred_theta_deg"])
                    ),
                    gt_r=float(row["gt_r_mm"]),
                    gt_theta=float(row["gt_theta_deg"]),
                    sensed_r=float(row.get("sensed_r_mm") or row["gt_r_mm"]),
                    sensed_theta=float(
                        row.get("sensed_theta_deg") or row["gt_theta_deg"]
                    ),
                    action=Action(
                        dr=float(row["dr_mm"]),
                        dtheta=float(row["dtheta_deg"]),
                        de=float(row["de_mm"]),
                    ),
                    in_contact=row["in_contact"] == "1",
                    arc_position=float(row.get("arc_position_mm") or 0.0),
                    at_corner=row.get("at_corner") == "1",
                )
                for row in rows
            ]
            status = TrajectoryStatus(rows[0]["status"]) if rows else None
        except (KeyError, ValueError) as exc:
            raise FormatError(f"Bad trajectory row: {exc}", offset=0, section="rows")
        if status is None:
            raise FormatError("Trajectory CSV has no rows", offset=0, section="rows")

        step = records[0].action.de
        return Trajectory(
            contour_name="",
            mode=rows[0].get("mode") or "tap",
            params=ServoParams(step=step) if step > 0 else ServoParams(),
            records=records,
            status=status,
        )


class HistoryRepository(BaseRepository[TrainingHistory]):
    """Training history CSV with columns epoch, train_loss, val_loss."""

    def __init__(self) -> None:
        super().__init__(TrainingHistory, "history CSV")

    def encode(self, model: TrainingHistory) -> bytes:
        rows = [(e.epoch, e.train_loss, e.val_loss) for e in model.epochs]
        return rows_to_csv(("epoch", "train_loss", "val_loss"), rows).encode("utf-8")

    def decode(self, payload: bytes) -> TrainingHistory:
        try:
            epochs = [
                EpochRecord(
                    epoch=int(row["epoch"]),
                    train_loss=float(row["train_loss"]),
                    val_loss=float(row["val_loss"]),
                )
                for row in csv_to_rows(payload.decode("utf-8"))
            ]
        except (KeyError, ValueError) as exc:
            raise FormatError(f"Bad history row: {exc}", offset=0, section="rows")
        if not epochs:
            raise FormatError("History CSV has no rows", offset=0, section="rows")
        best = min(epochs, key=lambda e: e.val_loss)
        return TrainingHistory(
            epochs=epochs,
            best_epoch=best.epoch,
            best_val_loss=best.val_loss,
            stopped_early=best.epoch < epochs[-1].epoch,
        )


def encode_pgm(frame: np.ndarray) -> bytes:
    """Binary 8-bit PGM (P5) of a frame with intensities in [0, 1]."""
    if frame.ndim != 2:
        raise ValidationError("PGM frames must be two-dimensional")
    height, width = frame.shape
    pixels = np.round(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)
    return f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()


_PGM_HEADER = re.compile(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s")


def decode_pgm(payload: bytes) -> np.ndarray:
    """Inverse of :func:`encode_pgm` (intensities rescaled to [0, 1])."""
    header = _PGM_HEADER.match(payload)
    if header is None:
        raise FormatError("Not a binary PGM", offset=0, section="header")
    width, height, maxval = (int(v) for v in header.groups())
    pixels = payload[header.end() :]
    if len(pixels) < width * height:
        raise FormatError(
            "Truncated PGM raster", offset=len(payload), section="raster"
        )
    data = np.frombuffer(pixels[: width * height], dtype=np.uint8)
    return data.reshape(height, width).astype(np.float64) / float(maxval)


def write_pgm(frame: np.ndarray, path: PathLike) -> Path:
    return atomic_write_bytes(path, encode_pgm(frame))
