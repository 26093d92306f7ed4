"""
Unit tests for layer primitives, initializers and gradient checks.
"""
import numpy as np
import pytest

from app.core.exceptions import ShapeMismatchError, ValidationError
from app.services.neuralnet import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool2x2,
    ReLU,
    check_layer_gradients,
    check_network_gradients,
    conv2d_forward,
    dropout_apply,
    glorot_bound,
    glorot_uniform_init,
    maxpool2x2_backward,
    maxpool2x2_forward,
    numerical_gradient,
    relative_error,
    relu_forward,
)

TOLERANCE = 1e-4


def _rng(seed):
    return np.random.default_rng(seed)


class TestInitializers:
    """Test Glorot uniform initialization."""

    def test_dense_bound(self):
        """Test the bound for a 100x100 dense layer."""
        assert glorot_bound((100, 100)) == pytest.approx(0.17320, abs=1e-5)

    def test_conv_bound(self):
        """Test fans of a convolution kernel."""
        assert glorot_bound((8, 1, 3, 3)) == pytest.approx(np.sqrt(6.0 / (9 + 72)))

    def test_values_within_bound(self):
        """Test the range and the mean of 10^4 draws."""
        weights = glorot_uniform_init((100, 100), seed=1)
        bound = glorot_bound((100, 100))

        assert np.abs(weights).max() <= bound
        assert abs(weights.mean()) < bound / 10

    def test_same_seed_same_weights(self):
        """Test determinism per seed."""
        np.testing.assert_array_equal(
            glorot_uniform_init((4, 3), 9), glorot_uniform_init((4, 3), 9)
        )

    def test_one_dimensional_shape_rejected(self):
        """Test that fans need a weight tensor."""
        with pytest.raises(ValidationError):
            glorot_bound((5,))


class TestForwardExamples:
    """Test layer forward passes on hand-checked inputs."""

    def test_identity_convolution(self):
        """Test that a 1x1 unit kernel copies the input."""
        x = _rng(0).random((2, 1, 5, 5))
        out = conv2d_forward(x, np.ones((1, 1, 1, 1)), np.zeros(1))

        np.testing.assert_array_equal(out, x)

    def test_summing_convolution(self):
        """Test a 2x2 all-ones kernel over a 2x2 all-ones input."""
        out = conv2d_forward(np.ones((1, 1, 2, 2)), np.ones((1, 1, 2, 2)), np.zeros(1))

        assert out.shape == (1, 1, 1, 1)
        assert out[0, 0, 0, 0] == 4.0

    def test_same_padding_keeps_size(self):
        """Test that same padding preserves the spatial size."""
        layer = Conv2D(1, 3, 5, same_pad=True, rng=_rng(0))

        assert layer.forward(np.zeros((1, 1, 9, 9))).shape == (1, 3, 9, 9)

    def test_channel_mismatch(self):
        """Test that a wrong channel count is rejected."""
        with pytest.raises(ShapeMismatchError):
            conv2d_forward(np.zeros((1, 2, 4, 4)), np.zeros((1, 1, 3, 3)), np.zeros(1))

    def test_kernel_larger_than_input(self):
        """Test that an oversized kernel is rejected."""
        with pytest.raises(ShapeMismatchError):
            conv2d_forward(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 3, 3)), np.zeros(1))

    def test_relu(self):
        """Test ReLU on a small vector."""
        out = relu_forward(np.array([-1.0, 0.0, 2.0]))

        np.testing.assert_array_equal(out, [0.0, 0.0, 2.0])

    def test_maxpool_routes_to_argmax(self):
        """Test pooling [[1, 2], [3, 4]] and its backward pass."""
        x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
        out, winner = maxpool2x2_forward(x)
        dx = maxpool2x2_backward(np.ones_like(out), winner, x.shape)

        assert out[0, 0, 0, 0] == 4.0
        np.testing.assert_array_equal(dx[0, 0], [[0.0, 0.0], [0.0, 1.0]])

    def test_maxpool_tie_goes_to_first(self):
        """Test that ties resolve to the first cell in scan order."""
        x = np.ones((1, 1, 2, 2))
        out, winner = maxpool2x2_forward(x)
        dx = maxpool2x2_backward(np.ones_like(out), winner, x.shape)

        np.testing.assert_array_equal(dx[0, 0], [[1.0, 0.0], [0.0, 0.0]])

    def test_maxpool_drops_odd_edge(self):
        """Test that odd trailing rows and columns are dropped."""
        out, _ = maxpool2x2_forward(np.zeros((1, 1, 5, 7)))

        assert out.shape == (1, 1, 2, 3)

    def test_dense_shape_mismatch(self):
        """Test that a wrong feature count is rejected."""
        with pytest.raises(ShapeMismatchError):
            Dense(4, 2, _rng(0)).forward(np.zeros((1, 3)))


class TestDropout:
    """Test inverted dropout."""

    def test_rate_zero_is_identity(self):
        """Test that rate 0 leaves the input untouched in training."""
        x = _rng(0).random((4, 4))
        out, mask = dropout_apply(x, 0.0, training=True, rng=_rng(1))

        assert out is x
        assert mask is None

    def test_inference_is_identity(self):
        """Test that dropout is off at inference."""
        x = _rng(0).random((4, 4))

        np.testing.assert_array_equal(Dropout(0.25).forward(x, training=False), x)

    def test_mean_preserved(self):
        """Test that the train-mode expectation matches within 2%."""
        out, _ = dropout_apply(np.ones(10_000), 0.25, training=True, rng=_rng(2))

        assert out.mean() == pytest.approx(1.0, rel=0.02)

    def test_invalid_rate(self):
        """Test that a rate of 1 is rejected."""
        with pytest.raises(ValidationError):
            Dropout(1.0)

    def test_training_needs_generator(self):
        """Test that train-mode dropout requires randomness."""
        with pytest.raises(ValidationError):
            dropout_apply(np.ones(3), 0.5, training=True)


class TestGradientChecks:
    """Test analytic gradients against central differences."""

    def test_numerical_gradient_of_square(self):
        """Test the helper on a quadratic."""
        w = np.array([1.0, -2.0, 3.0])
        grad = numerical_gradient(lambda: float(np.sum(w**2)), w)

        np.testing.assert_allclose(grad, 2 * w, rtol=1e-8)
        np.testing.assert_array_equal(w, [1.0, -2.0, 3.0])

    def test_relative_error_of_zeros(self):
        """Test that two zero gradients agree."""
        assert relative_error(np.zeros(3), np.zeros(3)) == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_conv2d(self, seed):
        """Test a 3x3 convolution on random 8x8 input."""
        layer = Conv2D(2, 3, 3, rng=_rng(seed))
        errors = check_layer_gradients(layer, _rng(seed + 10).normal(size=(2, 2, 8, 8)))

        assert max(errors.values()) < TOLERANCE

    @pytest.mark.parametrize("seed", range(5))
    def test_conv2d_same_pad_strided(self, seed):
        """Test a padded strided convolution."""
        layer = Conv2D(1, 2, 5, stride=2, same_pad=True, rng=_rng(seed))
        errors = check_layer_gradients(layer, _rng(seed + 20).normal(size=(1, 1, 9, 9)))

        assert max(errors.values()) < TOLERANCE

    @pytest.mark.parametrize("seed", range(5))
    def test_dense(self, seed):
        """Test a dense layer."""
        layer = Dense(6, 3, rng=_rng(seed))
        errors = check_layer_gradients(layer, _rng(seed + 30).normal(size=(4, 6)))

        assert max(errors.values()) < TOLERANCE

    @pytest.mark.parametrize("seed", range(5))
    def test_relu(self, seed):
        """Test ReLU away from the kink."""
        errors = check_layer_gradients(ReLU(), _rng(seed).normal(size=(3, 5)))

        assert errors["input"] < TOLERANCE

    @pytest.mark.parametrize("seed", range(5))
    def test_maxpool(self, seed):
        """Test pooling on odd-sized input."""
        errors = check_layer_gradients(
            MaxPool2x2(), _rng(seed).normal(size=(2, 2, 7, 6))
        )

        assert errors["input"] < TOLERANCE

    @pytest.mark.parametrize("seed", range(5))
    def test_flatten(self, seed):
        """Test flattening."""
        errors = check_layer_gradients(Flatten(), _rng(seed).normal(size=(2, 3, 2, 2)))

        assert errors["input"] < TOLERANCE

    @pytest.mark.parametrize("seed", range(5))
    def test_dropout_training(self, seed):
        """Test dropout with a fixed train-mode mask."""
        errors = check_layer_gradients(
            Dropout(0.25), _rng(seed).normal(size=(4, 6)), seed=seed, training=True
        )

        assert errors["input"] < TOLERANCE

    def test_whole_network(self, tiny_network):
        """Test every parameter of a small network end to end."""
        rng = _rng(4)
        errors = check_network_gradients(
            tiny_network, rng.random((3, 8, 8)), rng.uniform(-1, 1, (3, 2))
        )

        assert len(errors) == len(tiny_network.parameters)
        assert max(errors.values()) < TOLERANCE
