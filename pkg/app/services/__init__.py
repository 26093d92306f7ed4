"""
Services package providing the domain computation of the workbench.

Geometry, the simulated sensor, the network, dataset collection, servoing and
reporting are plain modules; persistence goes through the file repositories
via :class:`BaseService` subclasses.
"""

# Base service classes
from app.services.base import BaseService

# Artifact services
from app.services.dataset import DatasetService
from app.services.servo import ServoService

__all__ = [
    # Base classes
    "BaseService",
    # Service implementations
    "DatasetService",
    "ServoService",
]
