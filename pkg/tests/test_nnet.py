import numpy as np
import pytest

from hystnet.nnet import (
    Adam,
    DenseNet,
    LSTMNet,
    Param,
    ResidualNet,
    fit_network,
    grad_check,
    mlp,
    mse_loss,
)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestDenseForward:
    def test_identity_network(self):
        net = DenseNet([3, 3], ["identity"], rng())
        net.weights[0].values[...] = np.eye(3)
        net.biases[0].values[...] = 0.0
        x = np.array([1.0, -2.0, 0.5])
        y, _ = net.forward(x)
        assert np.array_equal(y, x)

    def test_zero_weights_bias_output(self):
        net = DenseNet([4, 2], ["identity"], rng())
        net.weights[0].values[...] = 0.0
        net.biases[0].values[...] = np.array([1.5, -0.5])
        y, _ = net.forward(np.ones(4))
        assert np.array_equal(y, [1.5, -0.5])

    def test_hand_computed_two_layer(self):
        # x=(1,1); W1=[[1,2],[3,4]], b1=0, relu; W2=[[1,0],[0,1]], b2=(1,1).
        net = DenseNet([2, 2, 2], ["relu", "identity"], rng())
        net.weights[0].values[...] = [[1.0, 2.0], [3.0, 4.0]]
        net.biases[0].values[...] = 0.0
        net.weights[1].values[...] = np.eye(2)
        net.biases[1].values[...] = 1.0
        y, _ = net.forward(np.array([1.0, 1.0]))
        # z1 = (4, 6) -> relu -> (4, 6) -> +1 = (5, 7)
        assert np.array_equal(y, [5.0, 7.0])

    def test_batch_matches_single(self):
        net = mlp(5, [8, 8], 3, rng(1))
        X = rng(2).normal(size=(4, 5))
        Y, _ = net.forward(X)
        for i in range(4):
            yi, _ = net.forward(X[i])
            assert np.allclose(Y[i], yi)

    def test_dimension_mismatch(self):
        net = mlp(5, [4], 2, rng())
        with pytest.raises(ValueError):
            net.forward(np.zeros(7))


class TestDenseBackward:
    def test_linear_layer_outer_product_rule(self):
        net = DenseNet([3, 2], ["identity"], rng(0))
        x = np.array([1.0, 2.0, -1.0])
        dy = np.array([0.5, -0.25])
        _, cache = net.forward(x)
        net.zero_grad()
        net.backward(cache, dy)
        assert np.allclose(net.weights[0].grad, np.outer(x, dy))
        assert np.allclose(net.biases[0].grad, dy)

    def test_relu_blocks_gradient(self):
        net = DenseNet([1, 1, 1], ["relu", "identity"], rng(0))
        net.weights[0].values[...] = [[1.0]]
        net.biases[0].values[...] = [-5.0]  # pre-activation negative
        net.weights[1].values[...] = [[1.0]]
        x = np.array([1.0])
        _, cache = net.forward(x)
        net.zero_grad()
        net.backward(cache, np.array([1.0]))
        assert net.weights[0].grad[0, 0] == 0.0

    def test_gradcheck_dense(self):
        g = rng(3)
        net = mlp(6, [10, 10], 4, g)
        x = g.normal(size=6)
        target = g.normal(size=4)
        report = grad_check(net, x, target)
        assert report["passed"], report
        assert report["max_rel_err"] < 1e-5


class TestResidual:
    def test_zero_second_layer_is_identity_block(self):
        g = rng(0)
        net = ResidualNet(4, 8, 2, 3, g)
        for _, _, w2, b2 in net.blocks:
            w2.values[...] = 0.0
            b2.values[...] = 0.0
        x = g.normal(size=4)
        y, _ = net.forward(x)
        # Equivalent stem-only net.
        stem = np.maximum(x @ net.stem_w.values + net.stem_b.values, 0.0)
        expected = stem @ net.out_w.values + net.out_b.values
        assert np.allclose(y, expected)

    def test_gradcheck_residual(self):
        g = rng(4)
        net = ResidualNet(5, 9, 2, 3, g)
        x = g.normal(size=5)
        target = g.normal(size=3)
        report = grad_check(net, x, target)
        assert report["passed"], report
        assert report["max_rel_err"] < 1e-5

    def test_infer_matches_forward(self):
        g = rng(5)
        net = ResidualNet(5, 9, 3, 2, g)
        X = g.normal(size=(7, 5))
        y1, _ = net.forward(X)
        assert np.array_equal(net.infer(X), y1)


class TestLSTM:
    def test_zero_everything_gives_zero_hidden(self):
        g = rng(0)
        net = LSTMNet(3, 4, 5, 2, g)
        for p in net.parameters():
            p.values[...] = 0.0
        y, h, c, _ = net.step(np.zeros(3), *net.initial_state(1))
        assert np.allclose(h, 0.0)
        assert np.allclose(c, 0.0)
        assert np.allclose(y, 0.0)

    def test_forget_gate_saturation_preserves_cell(self):
        g = rng(1)
        net = LSTMNet(2, 3, 4, 2, g)
        h = net.hidden_dim
        # Forget bias +20 (open), input bias -20 (closed).
        net.b.values[h:2 * h] = 20.0
        net.b.values[:h] = -20.0
        c_prev = g.normal(size=(1, 4))
        h_prev = np.zeros((1, 4))
        _, _, c, _ = net.step(g.normal(size=2), h_prev, c_prev)
        assert np.allclose(c, c_prev, atol=1e-6)

    def test_hand_traced_single_unit(self):
        # Scalar everything: encoder identity-ish, one hidden unit.
        net = LSTMNet(1, 1, 1, 1, rng(2))
        net.encoder.weights[0].values[...] = [[1.0]]
        net.encoder.biases[0].values[...] = [0.0]
        net.wx.values[...] = [[0.5, 0.25, 1.0, -0.5]]  # i, f, g, o
        net.wh.values[...] = [[0.0, 0.0, 0.0, 0.0]]
        net.b.values[...] = 0.0
        net.decoder.weights[0].values[...] = [[2.0]]
        net.decoder.biases[0].values[...] = [0.0]
        x = np.array([1.0])

        def sig(v):
            return 1.0 / (1.0 + np.exp(-v))

        e = max(x[0], 0.0)
        i = sig(0.5 * e)
        f = sig(0.25 * e)
        gg = np.tanh(1.0 * e)
        o = sig(-0.5 * e)
        c = i * gg
        hh = o * np.tanh(c)
        y_expect = 2.0 * hh
        y, h_out, c_out, _ = net.step(x, *map(lambda a: a[0], net.initial_state(1)))
        assert y[0] == pytest.approx(y_expect, abs=1e-12)
        assert c_out[0] == pytest.approx(c, abs=1e-12)
        assert h_out[0] == pytest.approx(hh, abs=1e-12)

    def test_gradcheck_single_step_window(self):
        g = rng(6)
        net = LSTMNet(4, 5, 6, 3, g)
        window = g.normal(size=(1, 4))
        target = g.normal(size=3)
        report = grad_check(net, window, target, tolerance=1e-4)
        assert report["passed"], report

    def test_gradcheck_three_step_window(self):
        g = rng(7)
        net = LSTMNet(3, 4, 5, 2, g)
        window = g.normal(size=(3, 3))
        target = g.normal(size=2)
        report = grad_check(net, window, target, tolerance=1e-4)
        assert report["passed"], report

    def test_stream_matches_windowed_final_output(self):
        g = rng(8)
        net = LSTMNet(3, 4, 5, 2, g)
        seq = g.normal(size=(10, 3))
        streamed = net.stream(seq)
        y_final, _ = net.forward(seq)
        assert np.allclose(streamed[-1], y_final)


class TestLoss:
    def test_zero_for_equal(self):
        loss, grad = mse_loss(np.ones(4), np.ones(4))
        assert loss == 0.0
        assert np.array_equal(grad, np.zeros(4))

    def test_scalar_case(self):
        loss, grad = mse_loss(np.array([3.0]), np.array([0.0]))
        assert loss == 9.0
        assert grad[0] == 6.0

    def test_gradient_matches_finite_differences(self):
        g = rng(0)
        p = g.normal(size=12)
        t = g.normal(size=12)
        _, grad = mse_loss(p, t)
        h = 1e-7
        for j in range(12):
            pp, pm = p.copy(), p.copy()
            pp[j] += h
            pm[j] -= h
            fd = (mse_loss(pp, t)[0] - mse_loss(pm, t)[0]) / (2 * h)
            assert abs(fd - grad[j]) < 1e-8

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mse_loss(np.zeros(3), np.zeros(4))


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        p = Param(np.array([1.0, 2.0]), np.zeros(2))
        opt = Adam([p], lr=0.1)
        for _ in range(5):
            opt.step()
        assert np.array_equal(p.values, [1.0, 2.0])

    def test_first_step_bias_corrected(self):
        p = Param(np.array([0.0]), np.array([1.0]))
        opt = Adam([p], lr=0.001)
        opt.step()
        # m_hat = v_hat = 1 -> update = -lr / (1 + eps)
        assert p.values[0] == pytest.approx(-0.001 / (1.0 + 1e-8), abs=1e-12)

    def test_constant_gradient_step_magnitude_approaches_lr(self):
        p = Param(np.array([0.0]), np.array([3.0]))
        opt = Adam([p], lr=0.01)
        prev = p.values[0]
        for _ in range(500):
            p.grad[...] = 3.0
            opt.step()
        step = prev - p.values[0]  # positive: moving against gradient
        last_steps = []
        for _ in range(10):
            before = p.values[0]
            p.grad[...] = 3.0
            opt.step()
            last_steps.append(before - p.values[0])
        assert np.mean(last_steps) == pytest.approx(0.01, rel=1e-3)
        del step


class TestFitNetwork:
    def test_zero_epochs_untouched(self):
        g = rng(0)
        net = mlp(3, [5], 2, g)
        before = net.get_flat_params()
        fit_network(net, g.normal(size=(10, 3)), g.normal(size=(10, 2)),
                    epochs=0, rng=g)
        assert np.array_equal(net.get_flat_params(), before)

    def test_learns_constant_target(self):
        g = rng(1)
        net = mlp(4, [16], 2, g)
        X = g.normal(size=(512, 4))
        Y = np.tile([1.5, -2.0], (512, 1))
        fit_network(net, X, Y, epochs=60, batch_size=64, lr=3e-3,
                    val_fraction=0.1, patience=60, rng=g)
        pred, _ = net.forward(X)
        rmse = np.sqrt(np.mean((pred - Y) ** 2, axis=0))
        assert np.all(rmse < 0.1)

    def test_deterministic_given_seed(self):
        def train(seed):
            g = rng(seed)
            net = mlp(3, [8], 2, g)
            X = np.random.default_rng(99).normal(size=(64, 3))
            Y = np.random.default_rng(98).normal(size=(64, 2))
            fit_network(net, X, Y, epochs=3, batch_size=16, rng=g)
            return net.get_flat_params()

        assert np.array_equal(train(7), train(7))
        assert not np.array_equal(train(7), train(8))


class TestGradCheckHarness:
    def test_linear_model_near_exact(self):
        # Quadratic-in-parameter loss: the central difference is analytically
        # exact, so a larger step only reduces floating-point cancellation.
        g = rng(9)
        net = DenseNet([4, 3], ["identity"], g)
        x = g.normal(size=4)
        t = g.normal(size=3)
        report = grad_check(net, x, t, tolerance=1e-10, step=1e-3)
        assert report["max_rel_err"] < 1e-10

    def test_failure_is_reported_not_raised(self):
        g = rng(10)
        net = DenseNet([3, 2], ["identity"], g)

        class Broken:
            def __init__(self, inner):
                self.inner = inner

            def parameters(self):
                return self.inner.parameters()

            def zero_grad(self):
                self.inner.zero_grad()

            def forward(self, x):
                return self.inner.forward(x)

            def backward(self, cache, dy):
                out = self.inner.backward(cache, dy)
                self.inner.weights[0].grad *= 2.0  # corrupt
                return out

        report = grad_check(Broken(net), g.normal(size=3), g.normal(size=2))
        assert not report["passed"]
