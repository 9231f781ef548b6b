import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedpoison.datasets import Dataset, as_shard
from fedpoison.errors import ContractError, NumericError
from fedpoison.svm import (
    evaluate_accuracy,
    flat_model,
    local_train,
    model_blocks,
    model_dim,
    svm_loss,
    zero_model,
)
from tests.conftest import make_dataset


def loss_oracle(model, shard):
    """Per-sample, per-class hand evaluation of the one-vs-rest hinge objective."""
    weights, biases = model_blocks(np.asarray(model), shard.n_classes)
    total = 0.0
    for c in range(shard.n_classes):
        hinge = 0.0
        for x, label in zip(shard.features, shard.labels):
            y = 1.0 if label == c else -1.0
            hinge += max(0.0, 1.0 - y * (biases[c] + weights[c] @ x))
        total += 0.5 * weights[c] @ weights[c] + hinge / shard.n_samples
    return total / shard.n_classes


class TestSvmLoss:
    def test_zero_model_loss_is_exactly_one(self, tiny_shard):
        model = zero_model(tiny_shard.n_classes, tiny_shard.dataset.n_features)
        assert svm_loss(model, tiny_shard) == 1.0

    def test_vanished_hinge_leaves_only_regularizer(self):
        ds = Dataset(np.array([[2.0, 0.0], [0.0, 2.0]]), np.array([0, 1]), 2)
        model = flat_model(np.array([[0.5, -0.5], [-0.5, 0.5]]), np.zeros(2))
        # every one-vs-rest margin is exactly 1, so the hinge terms vanish
        assert svm_loss(model, as_shard(ds)) == pytest.approx(0.25)

    def test_two_sample_binary_fixture(self):
        # x=(1,0) positive class, x=(0,1) negative; per-class blocks are
        # (1,-1) and its negation, every margin exactly 1: loss = 0.5*2 + 0 = 1
        ds = Dataset(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([1, 0]), 2)
        model = flat_model(np.array([[-1.0, 1.0], [1.0, -1.0]]), np.zeros(2))
        assert svm_loss(model, as_shard(ds)) == pytest.approx(1.0)

    def test_matches_hand_oracle_on_random_fixture(self, rng):
        ds = make_dataset(n=17, d=5, n_classes=4, seed=3)
        shard = as_shard(ds)
        model = rng.normal(0, 1, model_dim(4, 5))
        assert svm_loss(model, shard) == pytest.approx(loss_oracle(model, shard), rel=1e-12)

    @given(seed=st.integers(0, 50))
    @settings(max_examples=25, deadline=None)
    def test_non_negative(self, seed):
        gen = np.random.default_rng(seed)
        ds = make_dataset(n=8, d=3, n_classes=2, seed=seed)
        model = gen.normal(0, 2, model_dim(2, 3))
        assert svm_loss(model, as_shard(ds)) >= 0.0

    def test_dimension_mismatch(self, tiny_shard):
        with pytest.raises(ContractError):
            svm_loss(np.zeros(7), tiny_shard)


class TestLocalTrain:
    def separable_shard(self):
        features = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]])
        labels = np.array([0, 0, 1, 1])
        return as_shard(Dataset(features, labels, 2))

    def test_zero_step_size_is_identity(self, tiny_shard):
        start = np.arange(model_dim(tiny_shard.n_classes, 4), dtype=float)
        out = local_train(tiny_shard, start, t_local=5, eta=0.0)
        assert np.array_equal(out, start)

    def test_zero_iterations_is_identity(self, tiny_shard):
        start = np.arange(model_dim(tiny_shard.n_classes, 4), dtype=float)
        out = local_train(tiny_shard, start, t_local=0, eta=0.1)
        assert np.array_equal(out, start)

    def test_loss_strictly_decreases_on_separable_fixture(self):
        shard = self.separable_shard()
        start = zero_model(2, 2)
        trained = local_train(shard, start, t_local=25, eta=0.1)
        assert svm_loss(trained, shard) < svm_loss(start, shard)

    def test_deterministic(self):
        shard = self.separable_shard()
        start = zero_model(2, 2)
        a = local_train(shard, start, t_local=10, eta=0.05)
        b = local_train(shard, start, t_local=10, eta=0.05)
        assert np.array_equal(a, b)

    def test_does_not_mutate_input_model(self):
        shard = self.separable_shard()
        start = zero_model(2, 2)
        local_train(shard, start, t_local=3, eta=0.1)
        assert np.array_equal(start, zero_model(2, 2))

    def test_non_finite_gradient_raises(self):
        shard = self.separable_shard()
        with pytest.raises(NumericError):
            local_train(shard, zero_model(2, 2), t_local=5, eta=1e300)

    def test_mu_zero_drops_weight_decay(self):
        # with mu=0 and no active hinge terms the model is a fixed point
        ds = Dataset(np.array([[2.0, 0.0], [0.0, 2.0]]), np.array([0, 1]), 2)
        model = flat_model(np.array([[1.0, -1.0], [-1.0, 1.0]]), np.zeros(2))
        out = local_train(as_shard(ds), model, t_local=4, eta=0.1, mu=0.0)
        assert np.allclose(out, model)


class TestAccuracy:
    def test_perfect_model(self, tiny_dataset):
        # score +1 on the true class, -1 elsewhere, via biases only on an
        # all-zero feature copy
        ds = Dataset(
            np.zeros_like(tiny_dataset.features), tiny_dataset.labels, tiny_dataset.n_classes
        )
        n, d = ds.n_classes, ds.n_features
        acc = []
        for label in range(n):
            biases = np.where(np.arange(n) == label, 1.0, -1.0)
            model = flat_model(np.zeros((n, d)), biases)
            acc.append(evaluate_accuracy(model, ds))
        # the model favoring class c is right exactly on class-c samples
        for label in range(n):
            assert acc[label] == pytest.approx(np.mean(ds.labels == label))

    def test_zero_model_ties_break_to_class_zero(self, tiny_dataset):
        model = zero_model(tiny_dataset.n_classes, tiny_dataset.n_features)
        expected = float(np.mean(tiny_dataset.labels == 0))
        assert evaluate_accuracy(model, tiny_dataset) == pytest.approx(expected)

    def test_matches_per_sample_oracle(self, rng):
        ds = make_dataset(n=30, d=6, n_classes=5, seed=11)
        model = rng.normal(0, 1, model_dim(5, 6))
        from fedpoison.svm import decision_scores

        hits = 0
        scores = decision_scores(model, ds.features, ds.n_classes)
        for i in range(ds.n_samples):
            best, best_score = 0, scores[i, 0]
            for c in range(1, ds.n_classes):
                if scores[i, c] > best_score:
                    best, best_score = c, scores[i, c]
            hits += best == ds.labels[i]
        assert evaluate_accuracy(model, ds) == pytest.approx(hits / ds.n_samples)

    def test_dimension_mismatch(self, tiny_dataset):
        with pytest.raises(ContractError):
            evaluate_accuracy(np.zeros(5), tiny_dataset)
