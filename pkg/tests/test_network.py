"""Network tests: forward arithmetic, loss oracles, gradient checking against
central finite differences, and by-hand Adam traces."""

import numpy as np
import pytest

from ohmicnet.network import (
    AdamState,
    Head,
    Loss,
    MlpSpec,
    ModelParams,
    TrainConfig,
    adam_step,
    backward,
    evaluate_classification,
    evaluate_regression,
    forward,
    init_params,
    load_checkpoint,
    loss_cross_entropy,
    loss_mse,
    save_checkpoint,
    train,
)


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def numerical_gradients(params, spec, x, y, loss_fn, h=1e-5):
    """Central finite differences on every parameter entry."""
    grads = ModelParams(
        weights=[np.zeros_like(w) for w in params.weights],
        biases=[np.zeros_like(b) for b in params.biases],
    )

    def loss_at():
        out, _ = forward(params, spec, x)
        return loss_fn(out, y)

    for group in ("weights", "biases"):
        for arr, g in zip(getattr(params, group), getattr(grads, group)):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                up = loss_at()
                arr[idx] = orig - h
                down = loss_at()
                arr[idx] = orig
                g[idx] = (up - down) / (2 * h)
    return grads


class TestInit:
    def test_deterministic(self):
        spec = MlpSpec((4, 5, 3), Head.SOFTMAX)
        a = init_params(spec, 7)
        b = init_params(spec, 7)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_biases_zero(self):
        params = init_params(MlpSpec((6, 4, 2), Head.LINEAR), 1)
        for b in params.biases:
            assert np.all(b == 0.0)

    def test_glorot_bound_800_250(self):
        params = init_params(MlpSpec((800, 250, 3), Head.SOFTMAX), 0)
        bound = np.sqrt(6.0 / 1050.0)
        assert np.max(np.abs(params.weights[0])) <= bound
        # the draw should come close to the bound too
        assert np.max(np.abs(params.weights[0])) > 0.9 * bound


class TestForward:
    def test_equal_logits_give_uniform_softmax(self):
        spec = MlpSpec((4, 3, 3), Head.SOFTMAX)
        params = init_params(spec, 0)
        params.weights[-1][:] = 0.0
        params.biases[-1][:] = 5.0  # equal shift leaves softmax uniform
        out, _ = forward(params, spec, np.ones((2, 4)))
        assert np.allclose(out, 1.0 / 3.0, atol=1e-12)

    def test_zero_params_give_half_activations(self):
        spec = MlpSpec((5, 4, 2), Head.LINEAR)
        params = init_params(spec, 0)
        for w in params.weights:
            w[:] = 0.0
        out, cache = forward(params, spec, np.random.rand(3, 5))
        assert np.allclose(cache["activations"][1], 0.5)
        assert np.allclose(out, 0.0)

    def test_hand_computed_tiny_net(self):
        spec = MlpSpec((2, 2, 2), Head.LINEAR)
        w1 = np.array([[0.5, -1.0], [0.25, 2.0]])
        b1 = np.array([0.1, -0.2])
        w2 = np.array([[1.0, 0.0], [-0.5, 2.0]])
        b2 = np.array([0.0, 1.0])
        params = ModelParams(weights=[w1, w2], biases=[b1, b2])
        x = np.array([[1.0, 2.0]])
        h = sigmoid(x @ w1 + b1)
        want = h @ w2 + b2
        out, _ = forward(params, spec, x)
        assert np.allclose(out, want, atol=1e-12)

    def test_softmax_rows_normalized_and_shift_invariant(self):
        spec = MlpSpec((3, 4, 3), Head.SOFTMAX)
        params = init_params(spec, 3)
        rng = np.random.Generator(np.random.PCG64(0))
        x = rng.standard_normal((10, 3))
        out, _ = forward(params, spec, x)
        assert np.all(out > 0) and np.all(out < 1)
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-12)
        params.biases[-1][:] += 123.0  # uniform logit shift
        out2, _ = forward(params, spec, x)
        assert np.allclose(out, out2, atol=1e-9)

    def test_shape_mismatch(self):
        spec = MlpSpec((4, 3, 2), Head.LINEAR)
        with pytest.raises(ValueError):
            forward(init_params(spec, 0), spec, np.zeros((2, 5)))


class TestLosses:
    def test_cross_entropy_perfect(self):
        pred = np.eye(3)
        assert loss_cross_entropy(pred, np.eye(3)) <= 1e-11

    def test_cross_entropy_uniform(self):
        pred = np.full((5, 3), 1.0 / 3.0)
        truth = np.zeros((5, 3))
        truth[:, 1] = 1.0
        assert loss_cross_entropy(pred, truth) == pytest.approx(np.log(3.0))

    def test_cross_entropy_by_hand(self):
        pred = np.array([[0.7, 0.2, 0.1], [0.1, 0.8, 0.1]])
        truth = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        want = -(np.log(0.7) + np.log(0.8)) / 2
        assert loss_cross_entropy(pred, truth) == pytest.approx(want, abs=1e-12)

    def test_mse_basics(self):
        a = np.random.rand(4, 3)
        assert loss_mse(a, a) == 0.0
        assert loss_mse(a + 1.0, a) == pytest.approx(1.0)

    def test_mse_by_hand(self):
        rng = np.random.Generator(np.random.PCG64(2))
        pred = rng.standard_normal((3, 3))
        truth = rng.standard_normal((3, 3))
        want = sum(
            (pred[i, j] - truth[i, j]) ** 2 for i in range(3) for j in range(3)
        ) / 9.0
        assert loss_mse(pred, truth) == pytest.approx(want, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            loss_mse(np.zeros((2, 2)), np.zeros((2, 3)))


class TestBackward:
    def test_zero_error_regression_gives_zero_grads(self):
        spec = MlpSpec((3, 4, 2), Head.LINEAR)
        params = init_params(spec, 4)
        x = np.random.rand(6, 3)
        out, cache = forward(params, spec, x)
        grads = backward(params, spec, cache, out.copy())
        for g in grads.weights + grads.biases:
            assert np.all(g == 0.0)

    @pytest.mark.parametrize("head", [Head.SOFTMAX, Head.LINEAR])
    def test_finite_difference_agreement(self, head):
        rng = np.random.Generator(np.random.PCG64(21))
        spec = MlpSpec((4, 5, 3), head)
        params = init_params(spec, 99)
        x = rng.standard_normal((7, 4))
        if head is Head.SOFTMAX:
            y = np.zeros((7, 3))
            y[np.arange(7), rng.integers(0, 3, 7)] = 1.0
            loss_fn = loss_cross_entropy
        else:
            y = rng.standard_normal((7, 3))
            loss_fn = loss_mse
        out, cache = forward(params, spec, x)
        analytic = backward(params, spec, cache, y)
        numeric = numerical_gradients(params, spec, x, y, loss_fn)
        for ga, gn in zip(
            analytic.weights + analytic.biases, numeric.weights + numeric.biases
        ):
            denom = np.maximum(np.abs(gn), 1e-8)
            assert np.max(np.abs(ga - gn) / denom) < 1e-5

    def test_linear_head_bias_gradient_formula(self):
        spec = MlpSpec((3, 4, 2), Head.LINEAR)
        params = init_params(spec, 5)
        rng = np.random.Generator(np.random.PCG64(6))
        x = rng.standard_normal((10, 3))
        y = rng.standard_normal((10, 2))
        out, cache = forward(params, spec, x)
        grads = backward(params, spec, cache, y)
        want = np.mean(out - y, axis=0) * 2.0 / 2  # column mean * 2/D, D=2
        assert np.allclose(grads.biases[-1], want, atol=1e-12)


class TestAdam:
    def test_zero_gradient_no_motion(self):
        spec = MlpSpec((2, 2, 1), Head.LINEAR)
        params = init_params(spec, 0)
        before = params.copy()
        zeros = ModelParams(
            weights=[np.zeros_like(w) for w in params.weights],
            biases=[np.zeros_like(b) for b in params.biases],
        )
        state = AdamState.fresh(params, lr=0.1)
        adam_step(params, zeros, state)
        for a, b in zip(params.weights, before.weights):
            assert np.array_equal(a, b)

    def test_first_step_magnitude(self):
        spec = MlpSpec((1, 1, 1), Head.LINEAR)
        params = init_params(spec, 0)
        g = ModelParams(
            weights=[np.full_like(w, 3.7) for w in params.weights],
            biases=[np.full_like(b, -0.2) for b in params.biases],
        )
        state = AdamState.fresh(params, lr=1e-3)
        before = params.copy()
        adam_step(params, g, state)
        # bias-corrected first step is lr * g/|g| up to epsilon
        for a, b in zip(params.weights, before.weights):
            delta = a - b
            assert np.allclose(np.abs(delta), 1e-3, rtol=1e-6)
            assert np.all(np.sign(delta) == -1.0)

    def test_two_step_by_hand_trace(self):
        lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
        p = 0.5
        m = v = 0.0
        grads = [0.3, -0.1]
        for step, g in enumerate(grads, start=1):
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            p -= lr * (m / (1 - b1**step)) / (np.sqrt(v / (1 - b2**step)) + eps)

        spec = MlpSpec((1, 1, 1), Head.LINEAR)
        params = ModelParams(weights=[np.array([[0.5]]), np.array([[1.0]])],
                             biases=[np.zeros(1), np.zeros(1)])
        state = AdamState.fresh(params, lr=lr)
        for g in grads:
            gp = ModelParams(
                weights=[np.array([[g]]), np.zeros((1, 1))],
                biases=[np.zeros(1), np.zeros(1)],
            )
            adam_step(params, gp, state)
        assert params.weights[0][0, 0] == pytest.approx(p, abs=1e-12)


class TestTrain:
    def _toy(self):
        # linearly separable 2-class toy set: sign of the first coordinate
        x = np.array(
            [[1.0, 0.2], [2.0, -0.3], [1.5, 0.8], [0.7, -1.0],
             [-1.0, 0.1], [-2.0, 0.4], [-1.2, -0.7], [-0.6, 0.9]]
        )
        y = np.zeros((8, 2))
        y[:4, 0] = 1.0
        y[4:, 1] = 1.0
        return x, y

    def test_zero_iterations_returns_init(self):
        spec = MlpSpec((2, 3, 2), Head.SOFTMAX)
        x, y = self._toy()
        config = TrainConfig(iterations=0, seed=5)
        params, history = train(spec, x, y, x, y, config)
        want = init_params(spec, 5)
        for a, b in zip(params.weights, want.weights):
            assert np.array_equal(a, b)
        assert len(history) == 1 and history[0].iteration == 0

    def test_toy_classification_reaches_100(self):
        spec = MlpSpec((2, 8, 2), Head.SOFTMAX)
        x, y = self._toy()
        config = TrainConfig(iterations=2000, lr=0.05, seed=2, eval_every=100)
        params, history = train(spec, x, y, x, y, config)
        assert history[-1].train_metric == 1.0

    def test_deterministic_training(self):
        spec = MlpSpec((2, 4, 2), Head.SOFTMAX)
        x, y = self._toy()
        config = TrainConfig(iterations=50, lr=0.01, seed=3, eval_every=10)
        p1, h1 = train(spec, x, y, x, y, config)
        p2, h2 = train(spec, x, y, x, y, config)
        for a, b in zip(p1.weights + p1.biases, p2.weights + p2.biases):
            assert np.array_equal(a, b)
        assert h1 == h2

    def test_loss_head_pairing_enforced(self):
        spec = MlpSpec((2, 3, 2), Head.SOFTMAX)
        x, y = self._toy()
        with pytest.raises(ValueError):
            train(spec, x, y, x, y, TrainConfig(iterations=1, loss=Loss.MSE))


class TestEvaluate:
    def test_perfect_classifier_diagonal_confusion(self):
        spec = MlpSpec((3, 3, 3), Head.SOFTMAX)
        params = init_params(spec, 0)
        # force the identity map from a one-hot-ish input through large weights
        params.weights[0][:] = np.eye(3) * 50
        params.weights[1][:] = np.eye(3) * 50
        x = np.eye(3)
        y = np.eye(3)
        acc, conf = evaluate_classification(params, spec, x, y)
        assert acc == 1.0
        assert np.array_equal(conf, np.eye(3, dtype=int))

    def test_random_predictor_near_third(self):
        rng = np.random.Generator(np.random.PCG64(17))
        spec = MlpSpec((4, 8, 3), Head.SOFTMAX)
        params = init_params(spec, 12)
        x = rng.standard_normal((2400, 4))
        y = np.zeros((2400, 3))
        y[np.arange(2400), np.tile([0, 1, 2], 800)] = 1.0
        acc, conf = evaluate_classification(params, spec, x, y)
        assert abs(acc - 1.0 / 3.0) < 0.03
        assert conf.sum() == 2400
        assert np.all(conf.sum(axis=1) == 800)  # row sums = per-class counts

    def test_regression_constant_targets(self):
        spec = MlpSpec((2, 3, 1), Head.LINEAR)
        params = init_params(spec, 1)
        for w in params.weights:
            w[:] = 0.0
        params.biases[-1][:] = 4.2
        x = np.random.rand(5, 2)
        y = np.full((5, 1), 4.2)
        mse, per_target, pred = evaluate_regression(params, spec, x, y)
        assert mse == 0.0
        assert np.allclose(pred, 4.2)

    def test_head_mismatch_errors(self):
        spec = MlpSpec((2, 3, 1), Head.LINEAR)
        params = init_params(spec, 0)
        with pytest.raises(ValueError):
            evaluate_classification(params, spec, np.zeros((1, 2)), np.zeros((1, 1)))
        spec2 = MlpSpec((2, 3, 3), Head.SOFTMAX)
        with pytest.raises(ValueError):
            evaluate_regression(init_params(spec2, 0), spec2, np.zeros((1, 2)), np.zeros((1, 3)))

    def test_per_target_mse_averages_to_overall(self):
        spec = MlpSpec((3, 4, 3), Head.LINEAR)
        params = init_params(spec, 8)
        rng = np.random.Generator(np.random.PCG64(18))
        x = rng.standard_normal((20, 3))
        y = rng.standard_normal((20, 3))
        mse, per_target, _ = evaluate_regression(params, spec, x, y)
        assert mse == pytest.approx(np.mean(per_target), abs=1e-12)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        spec = MlpSpec((4, 5, 2), Head.LINEAR)
        params = init_params(spec, 33)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, spec, seed=33, iterations=10, loss=Loss.MSE)
        loaded, spec2, manifest = load_checkpoint(path)
        assert spec2 == spec
        assert manifest["seed"] == 33 and manifest["iterations"] == 10
        for a, b in zip(params.weights + params.biases, loaded.weights + loaded.biases):
            assert np.array_equal(a, b)

    def test_corruption_detected(self, tmp_path):
        from ohmicnet.network import CheckpointError

        spec = MlpSpec((2, 2, 1), Head.LINEAR)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, init_params(spec, 0), spec, 0, 0, Loss.MSE)
        blob = path.read_bytes()
        path.write_bytes(blob[:-4])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
