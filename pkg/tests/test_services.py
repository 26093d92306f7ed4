"""
Unit tests for service layer.
Tests service logic with mocked file repositories.
"""
from pathlib import Path
from unittest.mock import MagicMock

import pytest

from app.core.exceptions import NotFoundError
from app.services.dataset import DatasetService
from app.services.servo import OraclePerceiver, ServoService

from .conftest import make_dataset


class TestDatasetService:
    """Test DatasetService persistence and splitting."""

    def test_save_delegates_to_repository(self, tmp_path):
        """Test that save hands the dataset to the repository."""
        repository = MagicMock()
        repository.save.return_value = tmp_path / "d.tcds"
        service = DatasetService(repository)
        dataset = make_dataset(count=2)

        assert service.save(dataset, tmp_path / "d.tcds") == tmp_path / "d.tcds"
        repository.save.assert_called_once_with(dataset, tmp_path / "d.tcds")

    def test_load_delegates_to_repository(self):
        """Test that load returns the repository's dataset."""
        repository = MagicMock()
        repository.load.return_value = make_dataset(count=1)
        service = DatasetService(repository)

        assert len(service.load("any.tcds")) == 1
        repository.load.assert_called_once_with("any.tcds")

    def test_load_missing(self):
        """Test that repository errors propagate."""
        repository = MagicMock()
        repository.load.side_effect = NotFoundError("TCDS file not found: x")

        with pytest.raises(NotFoundError):
            DatasetService(repository).load("x")

    def test_split(self):
        """Test the 80/20 split through the service."""
        train, val = DatasetService().split(make_dataset(count=10), seed=0)

        assert (len(train), len(val)) == (8, 2)

    def test_default_repository(self):
        """Test that the service builds its own repository."""
        assert DatasetService().repository.format_name == "TCDS"


class TestServoService:
    """Test ServoService persistence."""

    def test_saves_trajectory(self, tmp_path, straight_edge):
        """Test that a run is written as CSV."""
        service = ServoService()
        trajectory, _ = service.follow(straight_edge, OraclePerceiver(), max_steps=2)
        path = service.save(trajectory, tmp_path / "t.csv")

        assert Path(path).read_text().startswith("step,")
