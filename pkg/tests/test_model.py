import math
from dataclasses import replace

import numpy as np
import pytest

from robust_grasp_loss.corruption import Dataset, apply_mcar, plan_corruption
from robust_grasp_loss.generation import BlobParams, gen_blobs
from robust_grasp_loss.losses import EmptyBatchError, LabeledBatch, ce_supervised
from robust_grasp_loss.losses.prob_core import InvalidInputError
from robust_grasp_loss.model import (
    ConfigError,
    PredictorParams,
    TrainConfig,
    backward,
    batch_objective,
    evaluate,
    forward,
    init_params,
    load_params,
    predict,
    predict_proba,
    save_params,
    train,
)
from robust_grasp_loss.model.training import HISTORY_COLUMNS
from robust_grasp_loss.utils.gradcheck import check_gradient
from tests.conftest import _make_dataset


def _separable_split(seed: int = 0):
    return gen_blobs(
        BlobParams(n_train=100, n_test=100, classes=2, dimension=2, cluster_spread=0.1),
        seed,
    )


# ---------------------------------------------------------------------------
# Initialisation
# ---------------------------------------------------------------------------


def test_init_params_is_deterministic_per_seed():
    first = init_params(4, 3, hidden_width=5, seed=11)
    second = init_params(4, 3, hidden_width=5, seed=11)
    np.testing.assert_array_equal(first.flatten(), second.flatten())
    assert not np.array_equal(first.flatten(), init_params(4, 3, 5, seed=12).flatten())


def test_init_params_linear_model_has_single_layer():
    params = init_params(4, 3)
    assert len(params.weights) == 1
    assert params.weights[0].shape == (3, 4)
    assert params.hidden_width == 0


def test_init_params_hidden_model_shapes_and_zero_biases():
    params = init_params(4, 3, hidden_width=6, seed=2)
    assert [w.shape for w in params.weights] == [(6, 4), (3, 6)]
    assert params.hidden_width == 6
    assert params.input_dim == 4
    assert params.num_classes == 3
    for b in params.biases:
        assert np.all(b == 0.0)


def test_init_params_respects_fan_in_bound():
    params = init_params(9, 2, hidden_width=16, seed=5)
    for w in params.weights:
        assert np.max(np.abs(w)) <= math.sqrt(3.0 / w.shape[1])


@pytest.mark.parametrize(
    "dims",
    [(0, 3, 0), (4, 0, 0), (4, 3, -1)],
)
def test_init_params_rejects_zero_sized_dims(dims):
    with pytest.raises(InvalidInputError, match="Invalid predictor dimensions"):
        init_params(*dims)


def test_predictor_params_validation():
    with pytest.raises(InvalidInputError, match="one or two layers"):
        PredictorParams((), ())
    with pytest.raises(InvalidInputError, match="disagree"):
        PredictorParams((np.zeros((2, 3)),), (np.zeros(3),))
    with pytest.raises(InvalidInputError, match="non-finite"):
        PredictorParams((np.full((2, 3), np.nan),), (np.zeros(2),))
    with pytest.raises(InvalidInputError, match="Hidden layer output"):
        PredictorParams((np.zeros((4, 3)), np.zeros((2, 5))), (np.zeros(4), np.zeros(2)))
    with pytest.raises(InvalidInputError, match="Unsupported activation"):
        PredictorParams((np.zeros((2, 3)),), (np.zeros(2),), activation="tanh")


def test_flatten_and_with_vector_are_inverse():
    params = init_params(3, 2, hidden_width=4, seed=1)
    rebuilt = params.with_vector(params.flatten())
    for original, copy in zip(params.weights + params.biases, rebuilt.weights + rebuilt.biases):
        np.testing.assert_array_equal(original, copy)
    with pytest.raises(InvalidInputError, match="Expected"):
        params.with_vector(np.zeros(params.flatten().size + 1))


# ---------------------------------------------------------------------------
# Forward and backward passes
# ---------------------------------------------------------------------------


def test_forward_zero_weights_give_zero_logits():
    params = PredictorParams((np.zeros((3, 2)),), (np.zeros(3),))
    logits = forward(params, np.arange(8.0).reshape(4, 2))
    np.testing.assert_array_equal(logits, np.zeros((4, 3)))


def test_forward_unit_weight_returns_feature():
    params = PredictorParams((np.ones((1, 1)),), (np.zeros(1),))
    features = np.array([[-2.5], [0.0], [3.25]])
    np.testing.assert_array_equal(forward(params, features), features)


def test_forward_matches_manual_hidden_evaluation(rng):
    params = init_params(3, 2, hidden_width=4, seed=3)
    x = rng.normal(size=(5, 3))
    expected = np.zeros((5, 2))
    for n in range(5):
        hidden = [
            max(sum(params.weights[0][h, d] * x[n, d] for d in range(3)) + params.biases[0][h], 0.0)
            for h in range(4)
        ]
        for k in range(2):
            expected[n, k] = (
                sum(params.weights[1][k, h] * hidden[h] for h in range(4)) + params.biases[1][k]
            )
    np.testing.assert_allclose(forward(params, x), expected, rtol=0, atol=1e-12)


def test_forward_rejects_shape_mismatch():
    params = init_params(3, 2)
    with pytest.raises(InvalidInputError, match="Features must have shape"):
        forward(params, np.zeros((4, 2)))
    with pytest.raises(InvalidInputError, match="Features must have shape"):
        forward(params, np.zeros(3))


def test_backward_zero_loss_gradient_gives_zero_gradient(rng):
    params = init_params(3, 2, hidden_width=4, seed=0)
    grads = backward(params, rng.normal(size=(5, 3)), np.zeros((5, 2)))
    assert np.all(grads.flatten() == 0.0)


def test_backward_linear_model_closed_form(rng):
    params = init_params(3, 2, seed=0)
    x = rng.normal(size=(6, 3))
    g = rng.normal(size=(6, 2))
    grads = backward(params, x, g)
    np.testing.assert_allclose(grads.weights[0], g.T @ x, rtol=0, atol=1e-12)
    np.testing.assert_allclose(grads.biases[0], g.sum(axis=0), rtol=0, atol=1e-12)


def test_backward_rejects_mismatched_loss_gradient():
    params = init_params(3, 2)
    with pytest.raises(InvalidInputError, match="grad_logits must have shape"):
        backward(params, np.zeros((4, 3)), np.zeros((4, 3)))


@pytest.mark.parametrize("hidden_width", [0, 5])
def test_backward_matches_finite_differences(hidden_width):
    for seed in range(5):
        rng = np.random.default_rng(seed)
        params = init_params(3, 4, hidden_width=hidden_width, seed=seed)
        x = rng.normal(size=(7, 3))
        labels = rng.integers(0, 4, size=7)
        report = ce_supervised(LabeledBatch.from_labels(forward(params, x), labels))
        grads = backward(params, x, report.grad_logits)

        def objective(vector):
            logits = forward(params.with_vector(vector), x)
            return ce_supervised(LabeledBatch.from_labels(logits, labels)).value

        check_gradient(objective, params.flatten(), grads.flatten(), rtol=1e-5, atol=1e-8)


def test_predict_and_predict_proba_agree(rng):
    params = init_params(2, 3, hidden_width=4, seed=9)
    x = rng.normal(size=(10, 2))
    proba = predict_proba(params, x)
    np.testing.assert_allclose(proba.sum(axis=1), np.ones(10), rtol=0, atol=1e-12)
    np.testing.assert_array_equal(predict(params, x), np.argmax(proba, axis=1))


def test_save_and_load_params_are_lossless(tmp_path):
    params = init_params(3, 2, hidden_width=4, seed=21)
    path = save_params(params, tmp_path / "model.json")
    loaded = load_params(path)
    np.testing.assert_array_equal(loaded.flatten(), params.flatten())
    assert loaded.hidden_width == 4
    assert '"shape": [4, 3]' in path.read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# Training configuration
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"loss_mode": "focal"}, "Unsupported loss_mode"),
        ({"epochs": 0}, "epochs must be >= 1"),
        ({"batch_size": 0}, "batch_size must be >= 1"),
        ({"learning_rate": 0.0}, "learning_rate must be > 0"),
        ({"epochs": 5, "warmup_epochs": 6}, "warmup_epochs must be in"),
        ({"hidden_width": -1}, "hidden_width must be >= 0"),
    ],
)
def test_train_config_rejects_invalid_values(kwargs, message):
    with pytest.raises(ConfigError, match=message):
        TrainConfig(**kwargs)


@pytest.mark.parametrize("epochs, expected", [(100, 10), (10, 10), (5, 5), (1, 1)])
def test_default_warmup_never_exceeds_epochs(epochs, expected):
    config = TrainConfig(epochs=epochs)
    assert config.warmup_epochs is None
    assert config.warmup == expected


def test_default_warmup_follows_replaced_epochs():
    config = replace(TrainConfig(), epochs=3)
    assert config.warmup == 3
    assert replace(config, epochs=50).warmup == 10
    assert TrainConfig(epochs=3, warmup_epochs=0).warmup == 0


def test_batch_objective_returns_none_without_usable_samples():
    params = init_params(2, 3)
    x = np.zeros((4, 2))
    labels = np.zeros(4, dtype=int)
    present = np.zeros(4, dtype=bool)
    assert batch_objective(params, x, labels, present, 3, TrainConfig(loss_mode="ce")) is None
    pseudo = TrainConfig(loss_mode="pseudo")
    assert batch_objective(params, x, labels, present, 3, pseudo, supervised_only=True) is None
    result = batch_objective(params, x, labels, present, 3, pseudo)
    assert result is not None


# ---------------------------------------------------------------------------
# Training and evaluation
# ---------------------------------------------------------------------------


def test_train_separates_linearly_separable_blobs():
    split = _separable_split()
    params, history = train(split.train, split.test, TrainConfig(epochs=50, loss_mode="ce"))
    assert evaluate(params, split.test) == 1.0
    assert history["val_accuracy"].iloc[-1] == 1.0


def test_train_history_layout():
    split = _separable_split()
    _, history = train(split.train, split.test, TrainConfig(epochs=4, loss_mode="ce"))
    assert list(history.columns) == HISTORY_COLUMNS
    assert history["epoch"].tolist() == [0, 1, 2, 3]
    assert history["gated_in_fraction"].isna().all()


def test_train_without_validation_data_records_nan_accuracy():
    split = _separable_split()
    _, history = train(split.train, None, TrainConfig(epochs=2))
    assert history["val_accuracy"].isna().all()


def test_train_is_reproducible_per_seed():
    split = _separable_split(3)
    masked = apply_mcar(split.train, plan_corruption(split.train.size, "mcar", 0.5, seed=3))
    config = TrainConfig(epochs=6, warmup_epochs=2, loss_mode="smoothed_missing", seed=4)
    first_params, first_history = train(masked, split.test, config)
    second_params, second_history = train(masked, split.test, config)
    np.testing.assert_array_equal(first_params.flatten(), second_params.flatten())
    assert first_history.equals(second_history)


def test_full_warmup_in_pseudo_mode_matches_ce_on_labeled_rows():
    split = _separable_split(1)
    masked = apply_mcar(split.train, plan_corruption(split.train.size, "mcar", 0.4, seed=1))
    pseudo_params, pseudo_history = train(
        masked, split.test, TrainConfig(epochs=5, warmup_epochs=5, loss_mode="pseudo")
    )
    ce_params, ce_history = train(
        masked, split.test, TrainConfig(epochs=5, warmup_epochs=5, loss_mode="ce")
    )
    np.testing.assert_array_equal(pseudo_params.flatten(), ce_params.flatten())
    np.testing.assert_array_equal(
        pseudo_history["train_loss"].to_numpy(), ce_history["train_loss"].to_numpy()
    )


def test_train_records_gated_fraction_after_warmup():
    split = _separable_split(2)
    masked = apply_mcar(split.train, plan_corruption(split.train.size, "mcar", 0.5, seed=2))
    config = TrainConfig(epochs=4, warmup_epochs=2, loss_mode="pseudo")
    _, history = train(masked, split.test, config)
    assert history["gated_in_fraction"].iloc[:2].isna().all()
    gated = history["gated_in_fraction"].iloc[2:]
    assert ((gated >= 0.0) & (gated <= 1.0)).all()


def test_full_batch_ce_loss_is_non_increasing():
    split = gen_blobs(BlobParams(n_train=60, n_test=10, classes=3, cluster_spread=1.0), 7)
    config = TrainConfig(epochs=30, batch_size=60, learning_rate=0.01, loss_mode="ce")
    _, history = train(split.train, None, config)
    losses = history["train_loss"].to_numpy()
    assert np.all(np.diff(losses) <= 1e-12)


def test_train_rejects_empty_data():
    empty = _make_dataset(n=0)
    with pytest.raises(EmptyBatchError, match="empty"):
        train(empty, None, TrainConfig(epochs=1))


def test_train_rejects_fully_unlabeled_data_with_warmup():
    data = _make_dataset(n=6)
    masked = apply_mcar(data, plan_corruption(6, "mcar", 1.0, seed=0))
    with pytest.raises(EmptyBatchError, match="no labeled samples"):
        train(masked, None, TrainConfig(epochs=3, warmup_epochs=1, loss_mode="pseudo"))
    with pytest.raises(EmptyBatchError, match="no labeled samples"):
        train(masked, None, TrainConfig(epochs=3, warmup_epochs=0, loss_mode="ce"))


def test_train_fully_unlabeled_without_warmup_runs_self_training():
    data = _make_dataset(n=6)
    masked = apply_mcar(data, plan_corruption(6, "mcar", 1.0, seed=0))
    config = TrainConfig(
        epochs=2, warmup_epochs=0, loss_mode="smoothed_missing", batch_size=6
    )
    _, history = train(masked, None, config)
    assert len(history) == 2


def test_evaluate_counts_correct_predictions():
    # Logit of class 1 is x, of class 0 is 0: predicts 1 exactly for positive x.
    params = PredictorParams((np.array([[0.0], [1.0]]),), (np.zeros(2),))
    features = np.array([[-3.0], [-1.0], [2.0], [0.5], [4.0], [-2.0], [1.0], [-0.5], [3.0], [-4.0]])
    labels = np.array([0, 1, 1, 1, 0, 0, 1, 1, 1, 0])
    data = Dataset(features=features, labels=labels, num_classes=2)
    assert evaluate(params, data) == pytest.approx(0.7)


def test_evaluate_constant_predictor_scores_chance_level():
    data = _make_dataset(n=12, num_classes=3)
    params = PredictorParams((np.zeros((3, 2)),), (np.array([0.0, 1.0, 0.0]),))
    assert evaluate(params, data) == pytest.approx(1.0 / 3.0)


def test_evaluate_rejects_empty_data():
    with pytest.raises(EmptyBatchError, match="empty dataset"):
        evaluate(init_params(2, 3), _make_dataset(n=0))
