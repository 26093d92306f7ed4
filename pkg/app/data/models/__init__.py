from app.data.models.base import BaseDataModel
from app.data.models.dataset import MODE_CODES, MODE_NAMES, Dataset, Sample
from app.data.models.experiment import ExperimentConfig, TrainingOverrides
from app.data.models.geometry import (
    ArcSegment,
    Contour,
    Corner,
    EdgePoseGT,
    LineSegment,
    Point,
    Segment,
)
from app.data.models.network import (
    ARCHITECTURE_IDS,
    AdamConfig,
    EpochRecord,
    LayerSpec,
    ModelArtifact,
    NetworkSpec,
    TrainConfig,
    TrainingHistory,
)
from app.data.models.sensor import (
    ContactParams,
    DeformationParams,
    ImageSpec,
    PinLattice,
    SensorState,
    ShearState,
    TapJitter,
    TapResult,
)
from app.data.models.servo import (
    Action,
    EdgePose,
    ServoParams,
    Trajectory,
    TrajectoryMetrics,
    TrajectoryRecord,
    TrajectoryStatus,
)

__all__ = [
    "BaseDataModel",
    "Point",
    "LineSegment",
    "ArcSegment",
    "Segment",
    "Contour",
    "Corner",
    "EdgePoseGT",
    "PinLattice",
    "ContactParams",
    "DeformationParams",
    "ImageSpec",
    "ShearState",
    "TapJitter",
    "SensorState",
    "TapResult",
    "LayerSpec",
    "NetworkSpec",
    "AdamConfig",
    "TrainConfig",
    "EpochRecord",
    "TrainingHistory",
    "ModelArtifact",
    "ARCHITECTURE_IDS",
    "Sample",
    "Dataset",
    "MODE_CODES",
    "MODE_NAMES",
    "EdgePose",
    "ServoParams",
    "Action",
    "TrajectoryStatus",
    "TrajectoryRecord",
    "Trajectory",
    "TrajectoryMetrics",
    "ExperimentConfig",
    "TrainingOverrides",
]
