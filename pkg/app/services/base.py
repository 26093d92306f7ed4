"""
Base service classes and interfaces for business logic layer.

Services own the domain computation of one artifact type and delegate
persistence to a file repository, logging every load and save.
"""

from abc import ABC
from pathlib import Path
from typing import Any, Dict, Generic, TypeVar

import structlog

from app.core.utils import PathLike
from app.data import BaseRepository
from app.data.models.base import BaseDataModel

T = TypeVar("T", bound=BaseDataModel)

logger = structlog.get_logger()


class BaseService(ABC, Generic[T]):
    """
    Abstract base class for all service implementations.

    Type Parameters:
        T: The data model type that the service manages

    Attributes:
        repository: The file repository used for persistence
        service_name: Name of the service for logging and identification

    Example:
        ```python
        class DatasetService(BaseService[Dataset]):
            def __init__(self, repository: DatasetRepository):
                super().__init__(repository, "DatasetService")
        ```
    """

    def __init__(self, repository: BaseRepository[T], service_name: str):
        self.repository: BaseRepository[T] = repository
        self.service_name: str = service_name

    def save(self, model: T, path: PathLike) -> Path:
        """
        Persist a model.

        Raises:
            StorageError: If the path cannot be written
        """
        target = self.repository.save(model, path)
        self._log_operation("save", {"path": str(target)})
        return target

    def load(self, path: PathLike) -> T:
        """
        Load a model.

        Raises:
            NotFoundError: If the file does not exist
            FormatError: If the file is malformed
        """
        model = self.repository.load(path)
        self._log_operation("load", {"path": str(path)})
        return model

    def _log_operation(self, operation: str, details: Dict[str, Any]) -> None:
        logger.info(f"{self.service_name} {operation}", **details)
