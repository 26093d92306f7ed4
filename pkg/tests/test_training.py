"""
Unit tests for training, early stopping and prediction.
"""
import numpy as np
import pytest

from app.core.exceptions import (
    ShapeMismatchError,
    TrainingDivergedError,
    ValidationError,
)
from app.data.models.dataset import Dataset
from app.data.models.network import AdamConfig, LayerSpec, NetworkSpec, TrainConfig
from app.services.neuralnet import (
    EarlyStopping,
    Network,
    denormalize,
    evaluate_loss,
    mse_loss,
    normalize_labels,
    predict,
    predict_batch,
    train,
)

from .conftest import make_dataset

R_RANGE = (-6.0, 9.0)
THETA_RANGE = (-45.0, 45.0)


def _toy_dataset(count: int, seed: int) -> Dataset:
    """Single-frame samples whose brightness encodes the radial label."""
    rng = np.random.default_rng(seed)
    level = rng.uniform(0.0, 1.0, count)
    frames = np.ones((count, 1, 8, 8)) * level[:, None, None, None]
    labels = np.stack([-6.0 + 15.0 * level, np.zeros(count)], axis=1)
    return Dataset(
        frames=frames.astype(np.float32),
        labels=labels.astype(np.float32),
        modes=np.zeros(count, dtype=np.uint8),
    )


@pytest.fixture
def linear_network():
    """Provide a small network without dropout."""
    spec = NetworkSpec(
        input_shape=(8, 8, 1),
        layers=[
            LayerSpec(kind="conv2d", kernel=3, filters=2, same_pad=True),
            LayerSpec(kind="relu"),
            LayerSpec(kind="flatten"),
            LayerSpec(kind="dense", units=2),
        ],
    )
    return Network(spec, seed=1)


class TestLabelScaling:
    """Test label normalization."""

    def test_range_ends(self):
        """Test that range ends map to -1 and +1."""
        labels = np.array([[-6.0, -45.0], [9.0, 45.0], [1.5, 0.0]])
        scaled = normalize_labels(labels, R_RANGE, THETA_RANGE)

        np.testing.assert_allclose(scaled, [[-1, -1], [1, 1], [0, 0]])

    def test_inverse(self):
        """Test that denormalize undoes normalize."""
        labels = np.array([[2.5, -10.0], [-4.0, 33.0]])
        scaled = normalize_labels(labels, R_RANGE, THETA_RANGE)

        np.testing.assert_allclose(denormalize(scaled, R_RANGE, THETA_RANGE), labels)


class TestLoss:
    """Test the mean squared error."""

    def test_value_and_gradient(self):
        """Test a two-element example."""
        loss, grad = mse_loss(np.array([[1.0, 3.0]]), np.array([[0.0, 1.0]]))

        assert loss == pytest.approx(2.5)
        np.testing.assert_allclose(grad, [[1.0, 2.0]])

    def test_shape_mismatch(self):
        """Test that differing shapes are rejected."""
        with pytest.raises(ShapeMismatchError):
            mse_loss(np.zeros((2, 2)), np.zeros((3, 2)))


class TestEarlyStopping:
    """Test the patience rule."""

    def test_stops_five_epochs_after_best(self):
        """Test a plateau after epoch 2."""
        stopper = EarlyStopping(5)
        losses = [1.0, 0.5, 0.6, 0.6, 0.6, 0.6, 0.6, 0.4]
        stopped_at = None
        for epoch, loss in enumerate(losses, start=1):
            stopper.update(epoch, loss, [np.array([float(epoch)])])
            if stopper.should_stop:
                stopped_at = epoch
                break

        assert stopped_at == 7
        assert stopper.best_epoch == 2
        assert stopper.best_parameters[0][0] == 2.0

    def test_equal_loss_is_not_improvement(self):
        """Test that only strict improvements reset patience."""
        stopper = EarlyStopping(2)
        stopper.update(1, 0.5, [])

        assert stopper.update(2, 0.5, []) is False
        assert stopper.wait == 1

    def test_invalid_patience(self):
        """Test that patience must be positive."""
        with pytest.raises(ValidationError):
            EarlyStopping(0)


class TestTrain:
    """Test the training loop."""

    def test_loss_decreases(self, linear_network):
        """Test that full-batch training loss falls over three epochs."""
        data = _toy_dataset(50, seed=0)
        config = TrainConfig(
            batch_size=50, max_epochs=3, patience=3, adam=AdamConfig(lr=1e-3)
        )
        history = train(linear_network, data, _toy_dataset(10, seed=1), config)
        losses = [record.train_loss for record in history.epochs]

        assert len(losses) == 3
        assert losses[0] > losses[1] > losses[2]

    def test_best_weights_restored(self, tiny_network, small_dataset):
        """Test that the final weights reproduce the best validation loss."""
        val = make_dataset(count=6, seed=1)
        config = TrainConfig(batch_size=4, max_epochs=4, patience=2)
        history = train(tiny_network, small_dataset, val, config)
        targets = normalize_labels(val.labels, R_RANGE, THETA_RANGE)

        assert history.epochs_run <= 4
        assert 1 <= history.best_epoch <= history.epochs_run
        assert evaluate_loss(
            tiny_network, val.frames[:, 1], targets, 4
        ) == pytest.approx(history.best_val_loss, rel=1e-12)
        assert history.stopped_early == (history.epochs_run < 4)

    def test_deterministic(self, tiny_spec, small_dataset):
        """Test that two runs with one seed give identical weights."""
        val = make_dataset(count=4, seed=2)
        config = TrainConfig(batch_size=4, max_epochs=2, seed=11, augment=True)
        results = []
        for _ in range(2):
            network = Network(tiny_spec, seed=3)
            train(network, small_dataset, val, config)
            results.append(network.parameters)

        for p, q in zip(*results):
            np.testing.assert_array_equal(p, q)

    def test_augmentation_changes_weights(self, tiny_spec, small_dataset):
        """Test that shift augmentation alters the trained weights."""
        val = make_dataset(count=4, seed=2)
        trained = []
        for augment in (False, True):
            network = Network(tiny_spec, seed=3)
            config = TrainConfig(batch_size=5, max_epochs=1, augment=augment)
            train(network, small_dataset, val, config)
            trained.append(network.parameters[0])

        assert not np.array_equal(trained[0], trained[1])

    def test_epoch_callback(self, tiny_network, small_dataset):
        """Test that the callback sees every epoch."""
        seen = []
        train(
            tiny_network,
            small_dataset,
            make_dataset(count=3, seed=4),
            TrainConfig(max_epochs=2, patience=5),
            on_epoch=seen.append,
        )

        assert [record.epoch for record in seen] == [1, 2]

    def test_nan_labels_diverge(self, tiny_network):
        """Test that a non-finite loss stops training."""
        data = make_dataset(count=4)
        data.labels[0, 0] = np.nan

        with pytest.raises(TrainingDivergedError) as exc_info:
            train(tiny_network, data, make_dataset(count=2), TrainConfig(max_epochs=1))
        assert exc_info.value.epoch == 1

    def test_frame_size_mismatch(self, tiny_network):
        """Test that dataset frames must match the input size."""
        with pytest.raises(ShapeMismatchError):
            train(tiny_network, make_dataset(size=9), make_dataset(size=9))

    def test_empty_validation(self, tiny_network, small_dataset):
        """Test that an empty validation set is rejected."""
        empty = Dataset(
            frames=np.zeros((0, 3, 8, 8), dtype=np.float32),
            labels=np.zeros((0, 2), dtype=np.float32),
            modes=np.zeros(0, dtype=np.uint8),
        )

        with pytest.raises(ValidationError):
            train(tiny_network, small_dataset, empty)


class TestPredict:
    """Test inference helpers."""

    def test_zero_output_layer(self, tiny_network):
        """Test that zero outputs map to the middle of both ranges."""
        weights, bias = tiny_network.layers[-1].params
        weights[...] = 0.0
        bias[...] = 0.0
        pose = predict(tiny_network, np.random.default_rng(0).random((8, 8)))

        assert pose.r == pytest.approx(1.5)
        assert pose.theta == pytest.approx(0.0)

    def test_wrong_frame_size(self, tiny_network):
        """Test that a 9x9 frame is rejected."""
        with pytest.raises(ShapeMismatchError):
            predict(tiny_network, np.zeros((9, 9)))

    def test_batch_matches_single(self, tiny_network):
        """Test that batching does not change predictions."""
        frames = np.random.default_rng(1).random((5, 8, 8))
        batch = predict_batch(tiny_network, frames, batch_size=2)
        single = predict(tiny_network, frames[3])

        assert batch.shape == (5, 2)
        assert batch[3, 0] == pytest.approx(single.r)
        assert batch[3, 1] == pytest.approx(single.theta)

    def test_empty_batch(self, tiny_network):
        """Test an empty prediction request."""
        assert predict_batch(tiny_network, np.zeros((0, 8, 8))).shape == (0, 2)
