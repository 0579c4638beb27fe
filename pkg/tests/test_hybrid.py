import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fforest.errors import RangeError, SingleClassError, TooFewSamplesError
from fforest.hybrid import (
    DenseHead,
    HybridConfig,
    head_input,
    init_params,
    loss_and_grads,
    renormalize_pairs,
    train_head_pair,
)


def numeric_grads(weights, biases, X, y, step=1e-5):
    """Central finite differences of the loss, parameter by parameter."""
    w_grads = [np.zeros_like(w) for w in weights]
    b_grads = [np.zeros_like(b) for b in biases]
    for i, w in enumerate(weights):
        for idx in np.ndindex(w.shape):
            orig = w[idx]
            w[idx] = orig + step
            up = loss_and_grads(weights, biases, X, y)[0]
            w[idx] = orig - step
            down = loss_and_grads(weights, biases, X, y)[0]
            w[idx] = orig
            w_grads[i][idx] = (up - down) / (2.0 * step)
    for i, b in enumerate(biases):
        for idx in np.ndindex(b.shape):
            orig = b[idx]
            b[idx] = orig + step
            up = loss_and_grads(weights, biases, X, y)[0]
            b[idx] = orig - step
            down = loss_and_grads(weights, biases, X, y)[0]
            b[idx] = orig
            b_grads[i][idx] = (up - down) / (2.0 * step)
    return w_grads, b_grads


def relative_error(a, b):
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-8)
    return np.abs(a - b).max() / denom


class TestGradients:
    def test_analytic_matches_numeric(self):
        rng = np.random.default_rng(100)
        for trial in range(8):
            n = int(rng.integers(3, 12))
            in_dim = int(rng.integers(4, 12))
            hidden = (int(rng.integers(4, 10)), 8) if trial % 2 else (8,)
            X = rng.normal(0.0, 1.0, (n, in_dim))
            y = rng.integers(0, 2, n).astype(np.int64)
            y[0] = 0
            y[-1] = 1
            weights, biases = init_params(in_dim, hidden, rng)
            _, wg, bg = loss_and_grads(weights, biases, X, y)
            nwg, nbg = numeric_grads(weights, biases, X, y)
            for a, b in zip(wg, nwg):
                assert relative_error(a, b) <= 1e-4
            for a, b in zip(bg, nbg):
                assert relative_error(a, b) <= 1e-4

    def test_loss_is_log2_at_init_symmetric(self):
        # zero weights give uniform probabilities and loss log(2)
        X = np.random.default_rng(0).normal(size=(10, 8))
        y = np.array([0, 1] * 5)
        weights = [np.zeros((8, 8)), np.zeros((2, 8))]
        biases = [np.zeros(8), np.zeros(2)]
        loss, _, _ = loss_and_grads(weights, biases, X, y)
        assert abs(loss - np.log(2.0)) <= 1e-9


class TestTraining:
    def test_loss_decreases(self):
        rng = np.random.default_rng(101)
        X = np.vstack([rng.normal(0.2, 0.05, (20, 8)), rng.normal(0.8, 0.05, (20, 8))])
        y = np.concatenate([np.zeros(20, np.int64), np.ones(20, np.int64)])
        cfg = HybridConfig(strategy="h3", head_dims=(8,), lr=0.01, epochs=100)
        head = train_head_pair(X, y, cfg, rng)
        assert head.final_loss < head.initial_loss

    def test_output_width_is_eight(self):
        rng = np.random.default_rng(102)
        X = rng.uniform(0.0, 1.0, (12, 16))
        y = np.array([0, 1] * 6)
        cfg = HybridConfig(head_dims=(12, 8), epochs=5)
        head = train_head_pair(X, y, cfg, rng)
        out = head.forward(X)
        assert out.shape == (12, 8)
        assert head.forward(X[0]).shape == (8,)

    def test_single_class_rejected(self):
        cfg = HybridConfig(epochs=2)
        with pytest.raises(SingleClassError):
            train_head_pair(np.zeros((4, 8)), np.zeros(4, np.int64), cfg, 0)

    def test_too_few_samples_rejected(self):
        cfg = HybridConfig(epochs=2)
        with pytest.raises(TooFewSamplesError):
            train_head_pair(np.zeros((1, 8)), np.array([1]), cfg, 0)

    def test_deterministic_given_seed(self):
        rng_data = np.random.default_rng(103)
        X = rng_data.uniform(0.0, 1.0, (16, 8))
        y = np.array([0, 1] * 8)
        cfg = HybridConfig(epochs=20)
        a = train_head_pair(X, y, cfg, np.random.default_rng(5))
        b = train_head_pair(X, y, cfg, np.random.default_rng(5))
        assert all(np.array_equal(wa, wb) for wa, wb in zip(a.weights, b.weights))


class TestConfig:
    def test_head_dims_must_end_in_eight(self):
        with pytest.raises(RangeError):
            HybridConfig(head_dims=(16,))

    def test_bad_strategy(self):
        with pytest.raises(RangeError):
            HybridConfig(strategy="h4")

    def test_bad_lr(self):
        with pytest.raises(RangeError):
            HybridConfig(lr=0.0)


class TestHeadInput:
    def test_first_layer_sees_augmentation_only(self):
        aug = np.ones((4, 8))
        prev = np.zeros((4, 8))
        assert head_input("h3", 0, aug, None).shape == (4, 8)

    def test_h3_later_layers_concatenate(self):
        aug = np.ones((4, 8))
        prev = np.zeros((4, 8))
        got = head_input("h3", 2, aug, prev)
        assert got.shape == (4, 16)
        assert np.array_equal(got[:, :8], prev)
        assert np.array_equal(got[:, 8:], aug)

    def test_h2_always_augmentation_only(self):
        aug = np.ones((4, 8))
        prev = np.zeros((4, 8))
        assert head_input("h2", 3, aug, prev).shape == (4, 8)


class TestRenormalize:
    def test_clamps_and_normalizes(self):
        row = np.array([-1.0, 3.0, 0.25, 0.75, 2.0, 2.0, 0.0, 0.0])
        out = renormalize_pairs(row)
        assert out.tolist() == [0.0, 1.0, 0.25, 0.75, 0.5, 0.5, 0.5, 0.5]

    def test_batch_form(self):
        rows = np.array([[0.2, 0.2, 1.0, 3.0], [-2.0, -3.0, 0.5, 0.5]])
        out = renormalize_pairs(rows)
        assert out.shape == (2, 4)
        assert np.allclose(out.reshape(2, 2, 2).sum(axis=2), 1.0)

    def test_record_round_trip(self):
        rng = np.random.default_rng(104)
        weights, biases = init_params(16, (12, 8), rng)
        head = DenseHead(weights[:-1], biases[:-1])
        back = DenseHead.from_record(head.to_record())
        X = rng.normal(size=(5, 16))
        assert np.array_equal(head.forward(X), back.forward(X))


@settings(deadline=None, max_examples=50)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=16).filter(lambda v: len(v) % 2 == 0))
def test_renormalized_rows_are_probability_pairs(values):
    out = renormalize_pairs(np.array(values))
    pairs = out.reshape(-1, 2)
    assert (pairs >= 0.0).all()
    assert np.allclose(pairs.sum(axis=1), 1.0, atol=1e-9)
