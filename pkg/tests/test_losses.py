import math

import numpy as np
import pytest

from robust_grasp_loss.losses import (
    EmptyBatchError,
    InvalidInputError,
    LabeledBatch,
    MissingLossConfig,
    NoisyLossConfig,
    UnlabeledBatch,
    ce_supervised,
    combined_missing_loss,
    pseudo_label_loss,
    sce_baseline,
    smoothed_ce,
    smoothed_rce,
    smoothed_targets,
    smoothed_unlabeled_loss,
    softmax,
    symmetric_noisy_loss,
)
from robust_grasp_loss.utils import check_gradient
from tests.conftest import _random_logits


def _logits_for(p) -> np.ndarray:
    return np.log(np.atleast_2d(np.asarray(p, dtype=np.float64)))


# ---------------------------------------------------------------------------
# Batches and configs
# ---------------------------------------------------------------------------


def test_labeled_batch_rejects_soft_targets():
    with pytest.raises(InvalidInputError, match="one-hot"):
        LabeledBatch(logits=np.zeros((1, 2)), targets=[[0.5, 0.5]])


def test_labeled_batch_rejects_shape_mismatch():
    with pytest.raises(InvalidInputError, match="does not match"):
        LabeledBatch(logits=np.zeros((2, 3)), targets=np.eye(2))


def test_unlabeled_batch_rejects_single_class():
    with pytest.raises(InvalidInputError, match="C >= 2"):
        UnlabeledBatch(np.zeros((3, 1)))


def test_loss_configs_validate_ranges():
    with pytest.raises(ValueError, match="gamma must be in"):
        MissingLossConfig(gamma=1.2)
    with pytest.raises(ValueError, match="lambda2 must be >= 0"):
        MissingLossConfig(lambda2=-1.0)
    with pytest.raises(ValueError, match="Unsupported normalization"):
        MissingLossConfig(normalization="mean")
    with pytest.raises(ValueError, match="log_floor"):
        NoisyLossConfig(log_floor=0.0)


# ---------------------------------------------------------------------------
# Supervised and missing ground truth losses
# ---------------------------------------------------------------------------


def test_ce_supervised_uniform_prediction():
    report = ce_supervised(LabeledBatch.from_labels(np.zeros((1, 3)), [0]))
    assert report.value == pytest.approx(math.log(3.0))
    np.testing.assert_allclose(report.grad_logits, [[1 / 3 - 1.0, 1 / 3, 1 / 3]])


def test_ce_supervised_perfect_prediction_is_near_zero():
    report = ce_supervised(LabeledBatch.from_labels([[40.0, 0.0]], [0]))
    assert report.value == pytest.approx(0.0, abs=1e-15)


def test_ce_supervised_rejects_empty_batch():
    with pytest.raises(EmptyBatchError):
        ce_supervised(LabeledBatch(np.zeros((0, 3)), np.zeros((0, 3))))


def test_ce_supervised_gradient_matches_finite_differences(rng):
    logits = _random_logits(rng, 2, 4)
    labels = [1, 3]
    report = ce_supervised(LabeledBatch.from_labels(logits, labels))
    check_gradient(
        lambda x: ce_supervised(LabeledBatch.from_labels(x, labels)).value,
        logits,
        report.grad_logits,
        rtol=1e-6,
    )


def test_pseudo_label_loss_confident_sample():
    report = pseudo_label_loss(UnlabeledBatch(_logits_for([0.98, 0.01, 0.01])), 0.95)
    assert report.value == pytest.approx(-math.log(0.98))
    assert report.gated_in == 1


def test_pseudo_label_loss_divides_by_batch_size():
    logits = np.vstack([_logits_for([0.98, 0.01, 0.01]), _logits_for([0.9, 0.05, 0.05])])
    report = pseudo_label_loss(UnlabeledBatch(logits), 0.95)
    assert report.value == pytest.approx(-math.log(0.98) / 2)
    np.testing.assert_array_equal(report.grad_logits[1], 0.0)

    gated = pseudo_label_loss(UnlabeledBatch(logits), 0.95, normalization="gated")
    assert gated.value == pytest.approx(-math.log(0.98))


def test_smoothed_unlabeled_loss_reference_value():
    p = np.array([0.98, 0.01, 0.01])
    report = smoothed_unlabeled_loss(
        UnlabeledBatch(_logits_for(p)), MissingLossConfig(gamma=0.95, xi=0.9)
    )
    target = np.array([0.883, 0.0585, 0.0585])
    assert report.value == pytest.approx(-np.sum(target * np.log(p)))
    np.testing.assert_allclose(report.grad_logits[0], p - target, atol=1e-12)


def test_smoothed_unlabeled_loss_is_entropy_at_unit_smoothing():
    p = np.array([0.6, 0.3, 0.1])
    report = smoothed_unlabeled_loss(
        UnlabeledBatch(_logits_for(p)), MissingLossConfig(gamma=0.5, xi=1.0)
    )
    assert report.value == pytest.approx(-np.sum(p * np.log(p)))


def test_smoothed_unlabeled_loss_all_gated_out():
    report = smoothed_unlabeled_loss(UnlabeledBatch(np.zeros((3, 4))), MissingLossConfig())
    assert report.value == 0.0
    assert report.gated_in == 0
    np.testing.assert_array_equal(report.grad_logits, 0.0)


def test_combined_missing_loss_mixed_batch(rng):
    labeled = LabeledBatch.from_labels(_random_logits(rng, 3, 3), [0, 1, 2])
    unlabeled = UnlabeledBatch(_random_logits(rng, 4, 3, scale=4.0))
    config = MissingLossConfig(gamma=0.6, lambda1=0.7, lambda2=1.3)
    report = combined_missing_loss(labeled, unlabeled, config)
    expected = 0.7 * ce_supervised(labeled).value + 1.3 * smoothed_unlabeled_loss(
        unlabeled, config
    ).value
    assert report.value == pytest.approx(expected, abs=1e-12)
    assert report.grad_logits.shape == (7, 3)


def test_combined_missing_loss_zero_unlabeled_weight(rng):
    labeled = LabeledBatch.from_labels(_random_logits(rng, 2, 3), [0, 1])
    unlabeled = UnlabeledBatch(_random_logits(rng, 2, 3, scale=5.0))
    report = combined_missing_loss(labeled, unlabeled, MissingLossConfig(gamma=0.0, lambda2=0.0))
    np.testing.assert_array_equal(report.grad_logits[2:], 0.0)


def test_combined_missing_loss_without_labels_uses_unlabeled_term(rng):
    unlabeled = UnlabeledBatch(_random_logits(rng, 3, 3, scale=5.0))
    config = MissingLossConfig(gamma=0.5)
    report = combined_missing_loss(LabeledBatch(np.zeros((0, 3)), np.zeros((0, 3))), unlabeled, config)
    assert report.value == pytest.approx(smoothed_unlabeled_loss(unlabeled, config).value)


def test_combined_missing_loss_rejects_two_empty_batches():
    with pytest.raises(EmptyBatchError):
        combined_missing_loss(
            LabeledBatch(np.zeros((0, 2)), np.zeros((0, 2))),
            UnlabeledBatch(np.zeros((0, 2))),
            MissingLossConfig(),
        )


def test_combined_missing_loss_rejects_class_mismatch(rng):
    with pytest.raises(InvalidInputError, match="Class count mismatch"):
        combined_missing_loss(
            LabeledBatch.from_labels(np.zeros((1, 2)), [0]),
            UnlabeledBatch(np.zeros((1, 3))),
            MissingLossConfig(),
        )


# ---------------------------------------------------------------------------
# Noisy ground truth losses
# ---------------------------------------------------------------------------


def test_sce_baseline_uses_log_floor():
    report = sce_baseline(
        LabeledBatch.from_labels(np.zeros((1, 2)), [0]), NoisyLossConfig(log_floor=-4.0)
    )
    assert report.value == pytest.approx(math.log(2.0) + 2.0)
    assert report.terms["rce"] == pytest.approx(2.0)


def test_smoothed_targets_of_one_hot_label():
    batch = LabeledBatch.from_labels(np.zeros((1, 3)), [0])
    np.testing.assert_allclose(smoothed_targets(batch, NoisyLossConfig(delta=0.8)), [[0.8, 0.1, 0.1]])


def test_smoothed_ce_uniform_prediction():
    batch = LabeledBatch.from_labels(np.zeros((1, 3)), [0])
    assert smoothed_ce(batch, NoisyLossConfig(delta=0.8)).value == pytest.approx(math.log(3.0))


def test_smoothed_rce_uniform_prediction():
    batch = LabeledBatch.from_labels(np.zeros((1, 3)), [0])
    value = smoothed_rce(batch, NoisyLossConfig(delta=0.8)).value
    assert value == pytest.approx(-(math.log(0.8) + 2.0 * math.log(0.1)) / 3.0)
    assert value == pytest.approx(1.6094, abs=1e-4)


def test_smoothed_rce_at_unit_delta_matches_sce_reverse_term(rng):
    batch = LabeledBatch.from_labels(_random_logits(rng, 3, 4), [0, 1, 3])
    config = NoisyLossConfig(delta=1.0, log_floor=-4.0)
    assert smoothed_rce(batch, config).value == pytest.approx(sce_baseline(batch, config).terms["rce"])


def test_symmetric_noisy_loss_uniform_prediction():
    batch = LabeledBatch.from_labels(np.zeros((1, 3)), [0])
    report = symmetric_noisy_loss(batch, NoisyLossConfig(delta=0.8))
    assert report.value == pytest.approx(math.log(3.0) + 1.6094, abs=1e-4)
    assert set(report.terms) == {"ce", "rce"}


def test_symmetric_noisy_loss_is_invariant_under_class_permutation(rng):
    logits = _random_logits(rng, 4, 5)
    labels = np.array([0, 4, 2, 1])
    permutation = np.array([3, 0, 4, 1, 2])
    inverse = np.argsort(permutation)
    config = NoisyLossConfig()
    original = symmetric_noisy_loss(LabeledBatch.from_labels(logits, labels), config)
    permuted = symmetric_noisy_loss(
        LabeledBatch.from_labels(logits[:, permutation], inverse[labels]), config
    )
    assert permuted.value == pytest.approx(original.value, abs=1e-12)


def test_literal_smoothing_ignores_the_label(rng):
    logits = _random_logits(rng, 3, 3)
    config = NoisyLossConfig(literal_paper_smoothing=True)
    first = symmetric_noisy_loss(LabeledBatch.from_labels(logits, [0, 0, 0]), config)
    second = symmetric_noisy_loss(LabeledBatch.from_labels(logits, [1, 2, 1]), config)
    assert first.value == second.value
    np.testing.assert_allclose(
        smoothed_targets(LabeledBatch.from_labels(logits, [0, 0, 0]), config),
        0.8 * softmax(logits) + 0.1 * (1.0 - softmax(logits)),
    )


@pytest.mark.parametrize("loss", [sce_baseline, smoothed_ce, smoothed_rce, symmetric_noisy_loss])
def test_noisy_loss_gradients_match_finite_differences(rng, loss):
    logits = _random_logits(rng, 3, 5)
    labels = [4, 0, 2]
    config = NoisyLossConfig(delta=0.7, alpha1=0.6, alpha2=1.4)
    report = loss(LabeledBatch.from_labels(logits, labels), config)
    check_gradient(
        lambda x: loss(LabeledBatch.from_labels(x, labels), config).value,
        logits,
        report.grad_logits,
        rtol=1e-6,
    )
