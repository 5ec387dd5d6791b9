from dataclasses import replace

import numpy as np
import pytest

from robust_grasp_loss.generation.grasp_synthetic import random_unit_vectors, tilt
from robust_grasp_loss.losses import (
    CompositeWeights,
    GraspCandidateBatch,
    LabeledBatch,
    MissingLossConfig,
    NoisyLossConfig,
    OperationBatch,
    UnlabeledBatch,
    ValueBins,
    approach_loss,
    ce_supervised,
    combined_missing_loss,
    log_softmax,
    operation_loss_missing,
    operation_loss_noisy,
    operation_loss_supervised,
    pseudo_label_loss,
    sce_baseline,
    smooth_distribution,
    smooth_l1,
    smoothed_ce,
    smoothed_rce,
    smoothed_unlabeled_loss,
    softmax,
    symmetric_noisy_loss,
    two_class_softmax_loss,
)
from robust_grasp_loss.model import TrainConfig, batch_objective, forward, init_params
from robust_grasp_loss.utils.gradcheck import check_gradient

MISSING = MissingLossConfig(gamma=0.6, xi=0.9, lambda1=1.0, lambda2=0.7)
NOISY = NoisyLossConfig(delta=0.8, alpha1=1.0, alpha2=0.5)


def _random_labeled(rng: np.random.Generator) -> LabeledBatch:
    n = int(rng.integers(1, 6))
    c = int(rng.integers(2, 6))
    return LabeledBatch.from_labels(2.0 * rng.normal(size=(n, c)), rng.integers(0, c, size=n))


def _frozen_self_target_loss(logits: np.ndarray, targets: np.ndarray, gate: np.ndarray) -> float:
    values = -np.sum(targets * log_softmax(logits), axis=1)
    return float(np.where(gate, values, 0.0).sum() / logits.shape[0])


LABELED_LOSSES = {
    "ce_supervised": ce_supervised,
    "sce_baseline": lambda batch: sce_baseline(batch, NOISY),
    "smoothed_ce": lambda batch: smoothed_ce(batch, NOISY),
    "smoothed_rce": lambda batch: smoothed_rce(batch, NOISY),
    "symmetric_noisy_loss": lambda batch: symmetric_noisy_loss(batch, NOISY),
}


# ----
# Classification losses
# ----


@pytest.mark.validation_category("gradients")
@pytest.mark.validation_criterion("finite differences")
@pytest.mark.parametrize("name", sorted(LABELED_LOSSES))
def test_labeled_loss_gradients_match_finite_differences(name, gradient_instances):
    """
    Checks the analytic logit gradient of every loss over labeled samples
    against central finite differences (h = 1e-5, rtol 1e-5) on seeded random
    batches.
    """
    loss = LABELED_LOSSES[name]
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        batch = _random_labeled(rng)
        report = loss(batch)
        check_gradient(
            lambda x: loss(LabeledBatch(x, batch.targets)).value,
            batch.logits,
            report.grad_logits,
        )


@pytest.mark.validation_category("gradients")
@pytest.mark.validation_criterion("finite differences")
def test_pseudo_label_loss_gradient_matches_finite_differences(gradient_instances):
    """
    The pseudo-label loss is differentiated with its argmax targets and its
    confidence gate held fixed; both are locally constant.
    """
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        batch = UnlabeledBatch(3.0 * rng.normal(size=(int(rng.integers(1, 6)), 4)))
        report = pseudo_label_loss(batch, gamma=0.6)
        check_gradient(
            lambda x: pseudo_label_loss(UnlabeledBatch(x), gamma=0.6).value,
            batch.logits,
            report.grad_logits,
        )


@pytest.mark.validation_category("gradients")
@pytest.mark.validation_criterion("finite differences")
def test_smoothed_unlabeled_loss_gradient_with_frozen_target(gradient_instances):
    """
    The smoothed self-target is a constant during differentiation, so the
    reference gradient is taken with the target computed once at the base point.
    """
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        batch = UnlabeledBatch(3.0 * rng.normal(size=(int(rng.integers(1, 6)), 4)))
        p = softmax(batch.logits)
        targets = smooth_distribution(p, MISSING.xi)
        gate = p.max(axis=1) > MISSING.gamma
        report = smoothed_unlabeled_loss(batch, MISSING)
        check_gradient(
            lambda x: _frozen_self_target_loss(x, targets, gate),
            batch.logits,
            report.grad_logits,
        )


@pytest.mark.validation_category("gradients")
@pytest.mark.validation_criterion("finite differences")
@pytest.mark.parametrize("unlabeled_loss", ["smoothed", "pseudo"])
def test_combined_missing_loss_gradient_with_frozen_target(unlabeled_loss, gradient_instances):
    """
    Checks the combined missing ground truth loss, labeled rows first and
    unlabeled rows second, with the unlabeled targets frozen.
    """
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        labeled = LabeledBatch.from_labels(
            2.0 * rng.normal(size=(3, 4)), rng.integers(0, 4, size=3)
        )
        unlabeled = UnlabeledBatch(3.0 * rng.normal(size=(int(rng.integers(1, 5)), 4)))
        p = softmax(unlabeled.logits)
        if unlabeled_loss == "smoothed":
            targets = smooth_distribution(p, MISSING.xi)
        else:
            targets = np.eye(4)[np.argmax(p, axis=1)]
        gate = p.max(axis=1) > MISSING.gamma
        report = combined_missing_loss(labeled, unlabeled, MISSING, unlabeled_loss)

        def objective(x):
            labeled_part = ce_supervised(LabeledBatch(x[:3], labeled.targets)).value
            unlabeled_part = _frozen_self_target_loss(x[3:], targets, gate)
            return MISSING.lambda1 * labeled_part + MISSING.lambda2 * unlabeled_part

        check_gradient(
            objective, np.vstack([labeled.logits, unlabeled.logits]), report.grad_logits
        )


# ----
# Grasp-head primitives and composites
# ----


@pytest.mark.validation_category("gradients")
@pytest.mark.validation_criterion("finite differences")
def test_smooth_l1_and_two_class_softmax_gradients(gradient_instances):
    """Elementwise smooth-L1 and the two-class softmax loss against finite differences."""
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        pred = 3.0 * rng.normal(size=6)
        truth = 3.0 * rng.normal(size=6)
        _, grads = smooth_l1(pred, truth)
        check_gradient(lambda x: float(np.sum(smooth_l1(x, truth)[0])), pred, grads)

        logits = 2.0 * rng.normal(size=(4, 2))
        labels = rng.integers(0, 2, size=4)
        _, grads = two_class_softmax_loss(logits, labels)
        check_gradient(
            lambda x: float(np.sum(two_class_softmax_loss(x, labels)[0])), logits, grads
        )


def _random_candidates(rng: np.random.Generator) -> GraspCandidateBatch:
    n, v, k = 3, 3, 6
    true_approach = random_unit_vectors(rng, (n, v))
    pred_approach = np.stack(
        [tilt(true_approach[:, j], float(rng.uniform(0.0, 10.0)), rng) for j in range(v)],
        axis=1,
    )
    mask = rng.uniform(size=(n, v)) < 0.6
    mask[0, 0] = True
    truth = rng.integers(0, 2, size=n)
    truth[0] = 1
    return GraspCandidateBatch(
        graspable_logits=2.0 * rng.normal(size=(n, 2)),
        graspable_truth=truth,
        view_score_logits=3.0 * rng.normal(size=(n, v, k)),
        view_score_truth=rng.uniform(size=(n, v)),
        view_score_mask=mask,
        pred_approach=pred_approach,
        true_approach=true_approach,
        score_bins=ValueBins(0.0, 1.0, k),
    )


def _random_operations(rng: np.random.Generator, mask_ratio: float) -> OperationBatch:
    n, d, k_rot, k = 2, 2, 4, 6
    mask = rng.uniform(size=(n, d)) >= mask_ratio
    return OperationBatch(
        rotation_logits=2.0 * rng.normal(size=(n, d, k_rot)),
        score_logits=3.0 * rng.normal(size=(n, d, k)),
        width_logits=3.0 * rng.normal(size=(n, d, k)),
        rotation_truth=rng.integers(0, k_rot, size=(n, d)),
        score_truth=rng.uniform(size=(n, d)),
        width_truth=rng.uniform(0.0, 0.1, size=(n, d)),
        truth_mask=mask,
        score_bins=ValueBins(0.0, 1.0, k),
        width_bins=ValueBins(0.0, 0.1, k),
    )


def _check_fields(loss, batch, report, fields):
    for name in fields:
        check_gradient(
            lambda x: loss(replace(batch, **{name: x})).value,
            getattr(batch, name),
            report.grads[name],
        )


@pytest.mark.validation_category("gradients")
@pytest.mark.validation_criterion("finite differences")
def test_approach_loss_gradient_matches_finite_differences(gradient_instances):
    """
    Approach-head loss with masked view scores routed to the pseudo-label
    branch, whose targets are locally constant.
    """
    weights = CompositeWeights()
    config = MissingLossConfig(gamma=0.5)
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        batch = _random_candidates(rng)

        def loss(b):
            return approach_loss(b, config, weights, masked_branch="pseudo")

        _check_fields(loss, batch, loss(batch), ["graspable_logits", "view_score_logits"])


@pytest.mark.validation_category("gradients")
@pytest.mark.validation_criterion("finite differences")
def test_operation_losses_gradients_match_finite_differences(gradient_instances):
    """Both operation-head losses and the supervised baseline against finite differences."""
    weights = CompositeWeights(beta2=0.7, beta3=1.3, eta2=0.6, eta3=1.4)
    fields = ["rotation_logits", "score_logits", "width_logits"]
    config = MissingLossConfig(gamma=0.5)
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        masked = _random_operations(rng, mask_ratio=0.4)

        def missing(b):
            return operation_loss_missing(b, config, weights, masked_branch="pseudo")

        def supervised(b):
            return operation_loss_supervised(b, weights)

        def noisy(b):
            return operation_loss_noisy(b, NOISY, weights)

        _check_fields(missing, masked, missing(masked), fields)
        _check_fields(supervised, masked, supervised(masked), fields)
        complete = _random_operations(rng, mask_ratio=0.0)
        _check_fields(noisy, complete, noisy(complete), fields)


# ----
# End-to-end model backpropagation
# ----


def _frozen_model_objective(params, x, labels, present, config: TrainConfig):
    """Missing ground truth objective with self-targets frozen at ``params``."""
    logits = forward(params, x[~present])
    p = softmax(logits)
    if config.loss_mode == "smoothed_missing":
        targets = smooth_distribution(p, config.missing.xi)
    else:
        targets = np.eye(p.shape[1])[np.argmax(p, axis=1)]
    gate = p.max(axis=1) > config.missing.gamma

    def objective(vector):
        candidate = params.with_vector(vector)
        labeled = LabeledBatch.from_labels(forward(candidate, x[present]), labels[present])
        unlabeled = _frozen_self_target_loss(forward(candidate, x[~present]), targets, gate)
        return (
            config.missing.lambda1 * ce_supervised(labeled).value
            + config.missing.lambda2 * unlabeled
        )

    return objective


@pytest.mark.validation_category("gradients")
@pytest.mark.validation_criterion("model backpropagation")
@pytest.mark.parametrize("hidden_width", [0, 5])
@pytest.mark.parametrize(
    "loss_mode", ["ce", "pseudo", "smoothed_missing", "sce", "smoothed_noisy"]
)
def test_model_backpropagation_matches_finite_differences(
    loss_mode, hidden_width, gradient_instances
):
    """
    Full parameter gradient of one mini-batch for every training loss,
    linear (rtol 1e-5) and one-hidden-layer (rtol 1e-4) predictors.
    """
    rtol = 1e-5 if hidden_width == 0 else 1e-4
    config = TrainConfig(
        loss_mode=loss_mode,
        hidden_width=hidden_width,
        missing=MissingLossConfig(gamma=0.4),
        noisy=NOISY,
    )
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(6, 3))
        labels = rng.integers(0, 3, size=6)
        present = np.array([True, True, True, False, False, False])
        params = init_params(3, 3, hidden_width, seed)
        report, grads = batch_objective(params, x, labels, present, 3, config)

        if loss_mode in ("pseudo", "smoothed_missing"):
            objective = _frozen_model_objective(params, x, labels, present, config)
        else:

            def objective(vector):
                result = batch_objective(
                    params.with_vector(vector), x, labels, present, 3, config
                )
                return result[0].value

        check_gradient(objective, params.flatten(), grads.flatten(), rtol=rtol)
