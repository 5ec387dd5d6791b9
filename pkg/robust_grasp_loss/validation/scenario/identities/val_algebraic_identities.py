from dataclasses import replace

import numpy as np
import pytest

from robust_grasp_loss.generation.grasp_synthetic import (
    GraspSyntheticParams,
    gen_grasp_synthetic,
    mask_operations,
    mask_view_scores,
    tilt,
)
from robust_grasp_loss.grasp import approach_angle_deg
from robust_grasp_loss.losses import (
    CompositeWeights,
    LabeledBatch,
    MissingLossConfig,
    NoisyLossConfig,
    UnlabeledBatch,
    approach_loss,
    ce_supervised,
    combined_missing_loss,
    operation_loss_missing,
    operation_loss_noisy,
    operation_loss_supervised,
    pseudo_label_loss,
    smooth_distribution,
    smooth_l1,
    smoothed_rce,
    smoothed_unlabeled_loss,
    softmax,
    symmetric_noisy_loss,
    two_class_softmax_loss,
)


def _simplex(rng: np.random.Generator, n: int, c: int) -> np.ndarray:
    return softmax(3.0 * rng.normal(size=(n, c)))


@pytest.mark.validation_category("identities")
@pytest.mark.validation_criterion("smoothing normalization")
def test_smoothed_distributions_sum_to_one(gradient_instances):
    """Every smoothed distribution sums to one within 1e-12 for xi in [0, 1]."""
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        c = int(rng.integers(2, 10))
        p = _simplex(rng, 8, c)
        for xi in (0.0, 1.0 / c, 0.5, 0.9, 1.0, float(rng.uniform())):
            s = smooth_distribution(p, xi)
            assert np.max(np.abs(s.sum(axis=1) - 1.0)) <= 1e-12
            assert np.all(s >= 0.0)


@pytest.mark.validation_category("identities")
@pytest.mark.validation_criterion("argmax invariance")
def test_smoothing_preserves_argmax_above_uniform(gradient_instances):
    """For xi > 1/C smoothing keeps the argmax of every distribution."""
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        c = int(rng.integers(2, 10))
        p = _simplex(rng, 8, c)
        xi = float(rng.uniform(1.0 / c + 1e-3, 1.0))
        np.testing.assert_array_equal(
            np.argmax(smooth_distribution(p, xi), axis=1), np.argmax(p, axis=1)
        )


@pytest.mark.validation_category("identities")
@pytest.mark.validation_criterion("reductions to cross-entropy")
def test_unit_smoothing_reduces_to_cross_entropy(gradient_instances):
    """
    xi = 1 turns the smoothed self-target loss into plain cross-entropy
    against the prediction, and delta = 1 with alpha2 = 0 turns the noisy
    loss into plain cross-entropy against the label, both within 1e-12.
    """
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        batch = LabeledBatch.from_labels(2.0 * rng.normal(size=(6, 4)), rng.integers(0, 4, size=6))
        noisy = symmetric_noisy_loss(batch, NoisyLossConfig(delta=1.0, alpha1=1.0, alpha2=0.0))
        assert abs(noisy.value - ce_supervised(batch).value) <= 1e-12

        logits = 3.0 * rng.normal(size=(6, 4))
        p = softmax(logits)
        expected = -np.sum(p * np.log(p), axis=1)
        report = smoothed_unlabeled_loss(UnlabeledBatch(logits), MissingLossConfig(gamma=0.0, xi=1.0))
        assert abs(report.value - expected.mean()) <= 1e-12


@pytest.mark.validation_category("identities")
@pytest.mark.validation_criterion("empty unlabeled batch")
def test_combined_loss_without_unlabeled_samples(gradient_instances):
    """L_m with N_u = 0 equals lambda1 times the supervised loss within 1e-12."""
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        batch = LabeledBatch.from_labels(2.0 * rng.normal(size=(5, 3)), rng.integers(0, 3, size=5))
        config = MissingLossConfig(lambda1=float(rng.uniform(0.1, 2.0)), lambda2=2.0)
        report = combined_missing_loss(batch, UnlabeledBatch(np.zeros((0, 3))), config)
        assert abs(report.value - config.lambda1 * ce_supervised(batch).value) <= 1e-12


@pytest.mark.validation_category("identities")
@pytest.mark.validation_criterion("reverse term finite")
def test_reverse_cross_entropy_finite_without_floor(gradient_instances):
    """For delta < 1 every smoothed target entry is positive, so the log floor never applies."""
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        batch = LabeledBatch.from_labels(2.0 * rng.normal(size=(5, 4)), rng.integers(0, 4, size=5))
        delta = float(rng.uniform(0.0, 1.0))
        low = smoothed_rce(batch, NoisyLossConfig(delta=delta, log_floor=-1.0))
        high = smoothed_rce(batch, NoisyLossConfig(delta=delta, log_floor=-100.0))
        assert np.isfinite(low.value)
        assert low.value == high.value


@pytest.mark.validation_category("identities")
@pytest.mark.validation_criterion("gated-out samples")
def test_gated_out_samples_contribute_zero(gradient_instances):
    """
    Appending low-confidence samples changes neither the gradient of the
    confident ones nor the summed loss; only the N_u divisor moves.
    """
    gamma = 0.8
    flat = np.zeros((4, 4))
    for seed in range(gradient_instances):
        rng = np.random.default_rng(seed)
        logits = 3.0 * rng.normal(size=(8, 4))
        padded = np.vstack([logits, flat])
        for loss in (
            lambda x: pseudo_label_loss(UnlabeledBatch(x), gamma),
            lambda x: smoothed_unlabeled_loss(UnlabeledBatch(x), MissingLossConfig(gamma=gamma)),
        ):
            base = loss(logits)
            extended = loss(padded)
            assert np.all(extended.grad_logits[8:] == 0.0)
            assert extended.gated_in == base.gated_in
            assert abs(extended.value * 12 - base.value * 8) <= 1e-12
            np.testing.assert_allclose(
                extended.grad_logits[:8] * 12, base.grad_logits * 8, rtol=0, atol=1e-12
            )


@pytest.mark.validation_category("identities")
@pytest.mark.validation_criterion("composite reductions")
def test_composites_reduce_to_supervised_without_masking_or_noise(replicate_seeds):
    """
    Without masking the missing ground truth operation loss equals the
    supervised composite, and with delta = 1, alpha2 = 0 the noisy rotation
    term equals the summed per-bin symmetric loss, within 1e-10.
    """
    weights = CompositeWeights()
    for seed in replicate_seeds:
        corpus = gen_grasp_synthetic(GraspSyntheticParams(logit_noise=1.0), seed)
        ops = corpus.operations
        missing = operation_loss_missing(ops, MissingLossConfig(), weights)
        supervised = operation_loss_supervised(ops, weights)
        assert abs(missing.value - supervised.value) <= 1e-10

        config = NoisyLossConfig(delta=1.0, alpha1=1.0, alpha2=0.0)
        rotation_only = operation_loss_noisy(ops, config, CompositeWeights(eta2=0.0, eta3=0.0))
        per_bin = sum(
            symmetric_noisy_loss(
                LabeledBatch.from_labels(ops.rotation_logits[:, d], ops.rotation_truth[:, d]),
                config,
            ).value
            for d in range(ops.num_distance_bins)
        )
        assert abs(rotation_only.value - per_bin) <= 1e-10

        fully_masked = mask_operations(ops, np.zeros(ops.truth_mask.shape, dtype=bool))
        closed = operation_loss_missing(fully_masked, MissingLossConfig(gamma=1.0), weights)
        assert closed.value == 0.0


def _mixed_candidates(seed: int):
    """Candidates with roughly half the views tilted out of the gate and 40% of scores masked."""
    rng = np.random.default_rng(seed)
    candidates = gen_grasp_synthetic(GraspSyntheticParams(logit_noise=2.0), seed).candidates
    tilted = rng.uniform(size=candidates.view_score_mask.shape) < 0.5
    pred_approach = np.where(
        tilted[..., None], tilt(candidates.true_approach, 10.0, rng), candidates.pred_approach
    )
    present = rng.uniform(size=tilted.shape) < 0.6
    return mask_view_scores(replace(candidates, pred_approach=pred_approach), present)


@pytest.mark.validation_category("identities")
@pytest.mark.validation_criterion("composite elementwise assembly")
def test_approach_loss_matches_elementwise_assembly(replicate_seeds):
    """The approach loss equals a per-candidate, per-view sum of its primitives within 1e-10."""
    config = MissingLossConfig(gamma=0.5, xi=0.9)
    weights = CompositeWeights(beta1=0.7)
    for seed in replicate_seeds:
        batch = _mixed_candidates(seed)
        report = approach_loss(batch, config, weights)

        classification = 0.0
        regression = 0.0
        counted = 0
        centers = batch.score_bins.centers
        for i in range(batch.size):
            value, _ = two_class_softmax_loss(batch.graspable_logits[i], batch.graspable_truth[i])
            classification += value
            if batch.graspable_truth[i] != 1:
                continue
            for j in range(batch.num_views):
                angle = approach_angle_deg(batch.pred_approach[i, j], batch.true_approach[i, j])
                if angle >= weights.gate_angle_deg:
                    continue
                counted += 1
                logits = batch.view_score_logits[i, j]
                if batch.view_score_mask[i, j]:
                    expected = float(softmax(logits) @ centers)
                    value, _ = smooth_l1(expected, batch.view_score_truth[i, j])
                else:
                    value = smoothed_unlabeled_loss(UnlabeledBatch(logits[None, :]), config).value
                regression += value

        oracle = classification / batch.size
        if counted:
            oracle += weights.beta1 * regression / counted
        assert report.n_reg == counted
        assert abs(report.value - oracle) <= 1e-10


@pytest.mark.validation_category("identities")
@pytest.mark.validation_criterion("approach-angle gate")
def test_gated_out_view_scores_do_not_affect_approach_loss(replicate_seeds):
    """
    Perturbing the score prediction of any view that fails the approach-angle
    gate, or of a non-graspable candidate, changes neither value nor gradient.
    """
    config = MissingLossConfig()
    weights = CompositeWeights()
    for seed in replicate_seeds:
        batch = _mixed_candidates(seed)
        rng = np.random.default_rng(1000 + seed)
        gated = (batch.graspable_truth[:, None] == 1) & (
            batch.approach_angles() < weights.gate_angle_deg
        )
        assert (~gated).any()
        noise = rng.normal(size=batch.view_score_logits.shape)
        perturbed = replace(
            batch,
            view_score_logits=np.where(
                gated[..., None], batch.view_score_logits, batch.view_score_logits + noise
            ),
        )
        base = approach_loss(batch, config, weights)
        moved = approach_loss(perturbed, config, weights)
        assert moved.value == base.value
        for key, grad in base.grads.items():
            np.testing.assert_array_equal(moved.grads[key], grad)
