import numpy as np
import pytest

from mculearn.model import (
    LinearModel,
    MLPModel,
    load_checkpoint,
    make_model,
    save_checkpoint,
)


def batch_grad_check(model, X, dScores, h=1e-5, tol=1e-5):
    """Finite-difference check of backward() for sum(dScores * forward(X))."""
    analytic = model.backward(X, dScores)
    for p, g in zip(model.params, analytic):
        flat_p, flat_g = p.ravel(), g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            plus = float((dScores * model.forward(X)).sum())
            flat_p[i] = orig - h
            minus = float((dScores * model.forward(X)).sum())
            flat_p[i] = orig
            num = (plus - minus) / (2 * h)
            denom = max(abs(num), abs(flat_g[i]), 1e-3)
            assert abs(num - flat_g[i]) / denom <= tol


class TestForward:
    def test_zero_weights_gives_bias(self):
        m = LinearModel(3, 2, seed=0)
        m.W[...] = 0.0
        m.b[...] = [1.5, -2.0]
        out = m.forward(np.random.default_rng(0).standard_normal((5, 3)))
        np.testing.assert_allclose(out, np.tile([1.5, -2.0], (5, 1)))

    def test_hand_arithmetic(self):
        m = LinearModel(1, 2, seed=0)
        m.W[...] = [[1.0, -1.0]]
        m.b[...] = 0.0
        np.testing.assert_allclose(m.forward([[2.0]]), [[2.0, -2.0]])

    def test_mlp_matches_independent_evaluator(self):
        rng = np.random.default_rng(1)
        m = MLPModel(4, 3, hidden=6, seed=2)
        X = rng.standard_normal((7, 4))
        want = np.maximum(X @ m.W1 + m.b1, 0.0) @ m.W2 + m.b2
        # straightforward row-at-a-time evaluation, no broadcasting
        got = np.array([
            [sum(max(sum(X[i, a] * m.W1[a, j] for a in range(4)) + m.b1[j], 0.0)
                 * m.W2[j, k] for j in range(6)) + m.b2[k] for k in range(3)]
            for i in range(7)
        ])
        np.testing.assert_allclose(m.forward(X), want, atol=1e-12)
        np.testing.assert_allclose(m.forward(X), got, atol=1e-10)

    def test_shape_mismatch(self):
        m = LinearModel(3, 2)
        with pytest.raises(ValueError):
            m.forward(np.zeros((2, 4)))


class TestBackward:
    def test_zero_dscores(self):
        m = MLPModel(3, 2, hidden=4, seed=3)
        X = np.random.default_rng(4).standard_normal((5, 3))
        grads = m.backward(X, np.zeros((5, 2)))
        for g in grads:
            assert not np.any(g)

    def test_linear_single_sample(self):
        m = LinearModel(3, 2, seed=5)
        x = np.array([[1.0, 2.0, 3.0]])
        d = np.array([[0.5, -0.5]])
        dW, db = m.backward(x, d)
        np.testing.assert_allclose(dW, x.T @ d)
        np.testing.assert_allclose(db, d[0])

    def test_linear_finite_difference(self):
        rng = np.random.default_rng(6)
        m = LinearModel(2, 3, seed=7)
        batch_grad_check(m, rng.standard_normal((4, 2)), rng.standard_normal((4, 3)))

    def test_mlp_finite_difference(self):
        rng = np.random.default_rng(8)
        m = MLPModel(2, 2, hidden=3, seed=9)
        batch_grad_check(m, rng.standard_normal((4, 2)), rng.standard_normal((4, 2)))

    def test_shape_mismatch(self):
        m = LinearModel(3, 2)
        with pytest.raises(ValueError):
            m.backward(np.zeros((2, 3)), np.zeros((3, 2)))


class TestPredict:
    def test_tie_breaks_to_smallest(self):
        m = LinearModel(1, 3, seed=0)
        m.W[...] = 0.0
        m.b[...] = 0.0
        assert m.predict([[1.0]])[0] == 1

    def test_argmax(self):
        m = LinearModel(1, 3, seed=0)
        m.W[...] = 0.0
        m.b[...] = [1.0, 3.0, 2.0]
        assert m.predict([[0.0]])[0] == 2

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(10)
        m = LinearModel(2, 4, seed=11)
        X = rng.standard_normal((20, 2))
        base = m.predict(X)
        scores = m.forward(X)
        for a, b in [(2.0, 1.0), (0.5, -3.0)]:
            assert np.array_equal(np.argmax(a * scores + b, axis=1) + 1, base)


class TestCheckpoint:
    @pytest.mark.parametrize("arch,kwargs", [("linear", {}), ("mlp", {"hidden": 7})])
    def test_roundtrip_bit_exact(self, tmp_path, arch, kwargs):
        m = make_model(arch, 5, 3, seed=12, **kwargs)
        p = tmp_path / "ckpt.json"
        save_checkpoint(m, p)
        back = load_checkpoint(p)
        assert back.arch == arch
        for a, b in zip(m.params, back.params):
            assert np.array_equal(a, b)

    def test_version_rejected(self, tmp_path):
        m = make_model("linear", 2, 2)
        p = tmp_path / "ckpt.json"
        save_checkpoint(m, p)
        doc = p.read_text().replace('"version": 1', '"version": 99')
        p.write_text(doc)
        with pytest.raises(ValueError):
            load_checkpoint(p)


def test_init_is_seeded_and_bounded():
    m1 = make_model("mlp", 10, 4, hidden=8, seed=13)
    m2 = make_model("mlp", 10, 4, hidden=8, seed=13)
    for a, b in zip(m1.params, m2.params):
        assert np.array_equal(a, b)
    a = np.sqrt(6.0 / (10 + 8))
    assert np.abs(m1.W1).max() <= a
    assert not np.any(m1.b1)
