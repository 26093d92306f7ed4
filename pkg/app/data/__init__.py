"""
Data layer package containing the domain models and file repositories.

This package provides the data access layer for the workbench, including:
- Pydantic domain models (contours, sensor state, networks, datasets, trajectories)
- Repositories for the TCDS, TCNN, contour text, CSV and PGM formats
"""

from app.data.models.base import BaseDataModel
from app.data.repositories import (
    BaseRepository,
    ContourRepository,
    DatasetRepository,
    HistoryRepository,
    ModelRepository,
    TrajectoryRepository,
    decode_pgm,
    encode_pgm,
    rows_to_csv,
    write_pgm,
)

__all__ = [
    "BaseDataModel",
    "BaseRepository",
    "DatasetRepository",
    "ModelRepository",
    "ContourRepository",
    "TrajectoryRepository",
    "HistoryRepository",
    "rows_to_csv",
    "encode_pgm",
    "decode_pgm",
    "write_pgm",
]
