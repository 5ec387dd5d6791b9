"""
Classification losses for missing and noisy ground truth.

Every loss returns a :class:`LossReport` with a hand-derived gradient with
respect to the logits. Targets built from the model's own predictions
(pseudo-labels, smoothed self-targets) are constants during differentiation.
"""

import numpy as np

from .models import (
    EmptyBatchError,
    LabeledBatch,
    LossReport,
    MissingLossConfig,
    NoisyLossConfig,
    Normalization,
    UnlabeledBatch,
    UnlabeledLoss,
)
from .prob_core import (
    InvalidInputError,
    confidence_gate,
    log_softmax,
    one_hot,
    smooth_distribution,
    softmax,
)


def _require_samples(size: int, name: str) -> None:
    if size == 0:
        raise EmptyBatchError(f"{name} needs at least one sample.")


def safe_log(values: np.ndarray, log_floor: float) -> np.ndarray:
    """Elementwise log with ``log_floor`` in place of ``log 0``."""
    positive = values > 0.0
    return np.where(positive, np.log(np.where(positive, values, 1.0)), log_floor)


def cross_entropy_terms(
    logits: np.ndarray, targets: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample ``-sum(t * log p)`` and its logit gradient ``p * sum(t) - t``."""
    log_p = log_softmax(logits)
    p = np.exp(log_p)
    values = -np.sum(targets * log_p, axis=-1)
    grads = p * targets.sum(axis=-1, keepdims=True) - targets
    return values, grads


def reverse_cross_entropy_terms(
    logits: np.ndarray, log_targets: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample ``-sum(p * log t)`` with ``log t`` held constant, and its logit gradient."""
    p = softmax(logits)
    values = -np.sum(p * log_targets, axis=-1)
    expected = np.sum(p * log_targets, axis=-1, keepdims=True)
    grads = -p * (log_targets - expected)
    return values, grads


def ce_supervised(batch: LabeledBatch) -> LossReport:
    """Mean cross-entropy of labeled samples against their one-hot targets."""
    _require_samples(batch.size, "ce_supervised")
    values, grads = cross_entropy_terms(batch.logits, batch.targets)
    value = float(values.sum() / batch.size)
    return LossReport(value=value, grad_logits=grads / batch.size, terms={"ce": value})


def _gated_denominator(size: int, gated_in: int, normalization: Normalization) -> int:
    if normalization == "batch":
        return size
    return max(gated_in, 1)


def _gated_report(
    values: np.ndarray,
    grads: np.ndarray,
    gate: np.ndarray,
    normalization: Normalization,
    term: str,
) -> LossReport:
    gated_in = int(gate.sum())
    denominator = _gated_denominator(len(values), gated_in, normalization)
    value = float(np.where(gate, values, 0.0).sum() / denominator)
    grad_logits = np.where(gate[:, None], grads, 0.0) / denominator
    return LossReport(
        value=value, grad_logits=grad_logits, terms={term: value}, gated_in=gated_in
    )


def pseudo_label_loss(
    batch: UnlabeledBatch, gamma: float, normalization: Normalization = "batch"
) -> LossReport:
    """
    Hard pseudo-label cross-entropy with a confidence gate.

    Each sample's target is the one-hot argmax of its own prediction; samples
    whose largest probability does not exceed ``gamma`` contribute nothing.
    The sum is divided by N_u (``normalization="batch"``), not by the number
    of confident samples, unless ``normalization="gated"``.
    """
    _require_samples(batch.size, "pseudo_label_loss")
    p = softmax(batch.logits)
    pseudo_targets = one_hot(np.argmax(p, axis=1), batch.num_classes)
    values, grads = cross_entropy_terms(batch.logits, pseudo_targets)
    gate = confidence_gate(p, gamma)
    return _gated_report(values, grads, gate, normalization, "pseudo")


def smoothed_unlabeled_loss(
    batch: UnlabeledBatch, config: MissingLossConfig
) -> LossReport:
    """
    Confidence-gated cross-entropy against the smoothed self-target.

    The target is ``smooth_distribution(p, xi)`` of the sample's own
    prediction, frozen during differentiation, so the gradient of a gated-in
    sample is ``(p - s) / N_u``.
    """
    _require_samples(batch.size, "smoothed_unlabeled_loss")
    p = softmax(batch.logits)
    targets = smooth_distribution(p, config.xi)
    values, grads = cross_entropy_terms(batch.logits, targets)
    gate = confidence_gate(p, config.gamma)
    return _gated_report(values, grads, gate, config.normalization, "smoothed")


def combined_missing_loss(
    labeled: LabeledBatch,
    unlabeled: UnlabeledBatch,
    config: MissingLossConfig,
    unlabeled_loss: UnlabeledLoss = "smoothed",
) -> LossReport:
    """
    ``lambda1 * L_w + lambda2 * L_u`` over a labeled and an unlabeled batch.

    A term whose batch is empty is 0. The gradient rows are the labeled rows
    followed by the unlabeled rows.

    Raises:
        EmptyBatchError: If both batches are empty.
    """
    if labeled.size + unlabeled.size == 0:
        raise EmptyBatchError("combined_missing_loss needs at least one sample.")
    if labeled.num_classes != unlabeled.num_classes:
        raise InvalidInputError(
            f"Class count mismatch: labeled C={labeled.num_classes}, "
            f"unlabeled C={unlabeled.num_classes}."
        )

    num_classes = labeled.num_classes
    labeled_value = 0.0
    labeled_grad = np.zeros((0, num_classes))
    if labeled.size > 0:
        labeled_report = ce_supervised(labeled)
        labeled_value = labeled_report.value
        labeled_grad = labeled_report.grad_logits

    unlabeled_value = 0.0
    unlabeled_grad = np.zeros((0, num_classes))
    gated_in = 0
    if unlabeled.size > 0:
        if unlabeled_loss == "smoothed":
            unlabeled_report = smoothed_unlabeled_loss(unlabeled, config)
        elif unlabeled_loss == "pseudo":
            unlabeled_report = pseudo_label_loss(
                unlabeled, config.gamma, config.normalization
            )
        else:
            raise ValueError(f"Unsupported unlabeled_loss '{unlabeled_loss}'.")
        unlabeled_value = unlabeled_report.value
        unlabeled_grad = unlabeled_report.grad_logits
        gated_in = unlabeled_report.gated_in

    if unlabeled.size == 0:
        value = config.lambda1 * labeled_value
    else:
        value = config.lambda1 * labeled_value + config.lambda2 * unlabeled_value
    return LossReport(
        value=float(value),
        grad_logits=np.vstack(
            [config.lambda1 * labeled_grad, config.lambda2 * unlabeled_grad]
        ),
        terms={"labeled": labeled_value, "unlabeled": unlabeled_value},
        gated_in=gated_in,
    )


def sce_baseline(batch: LabeledBatch, config: NoisyLossConfig) -> LossReport:
    """
    Symmetric cross-entropy against the raw one-hot label.

    The reverse term uses ``config.log_floor`` for ``log 0``.
    """
    _require_samples(batch.size, "sce_baseline")
    ce_values, ce_grads = cross_entropy_terms(batch.logits, batch.targets)
    rce_values, rce_grads = reverse_cross_entropy_terms(
        batch.logits, safe_log(batch.targets, config.log_floor)
    )
    ce = float(ce_values.sum() / batch.size)
    rce = float(rce_values.sum() / batch.size)
    return LossReport(
        value=ce + rce,
        grad_logits=(ce_grads + rce_grads) / batch.size,
        terms={"ce": ce, "rce": rce},
    )


def smoothed_targets(batch: LabeledBatch, config: NoisyLossConfig) -> np.ndarray:
    """
    The delta-smoothed target distribution ``s``.

    By default the observed label is smoothed. With
    ``literal_paper_smoothing`` the prediction is smoothed instead.
    """
    if config.literal_paper_smoothing:
        return smooth_distribution(softmax(batch.logits), config.delta)
    return smooth_distribution(batch.targets, config.delta)


def smoothed_ce(batch: LabeledBatch, config: NoisyLossConfig) -> LossReport:
    """Mean cross-entropy ``-sum(s * log p)`` against the smoothed target."""
    _require_samples(batch.size, "smoothed_ce")
    values, grads = cross_entropy_terms(batch.logits, smoothed_targets(batch, config))
    value = float(values.sum() / batch.size)
    return LossReport(value=value, grad_logits=grads / batch.size, terms={"ce": value})


def smoothed_rce(batch: LabeledBatch, config: NoisyLossConfig) -> LossReport:
    """
    Mean reverse cross-entropy ``-sum(p * log s)`` against the smoothed target.

    For ``delta < 1`` every entry of ``s`` is at least ``(1 - delta) / (C - 1)``,
    so ``log_floor`` is never used.
    """
    _require_samples(batch.size, "smoothed_rce")
    log_targets = safe_log(smoothed_targets(batch, config), config.log_floor)
    values, grads = reverse_cross_entropy_terms(batch.logits, log_targets)
    value = float(values.sum() / batch.size)
    return LossReport(value=value, grad_logits=grads / batch.size, terms={"rce": value})


def symmetric_noisy_loss(batch: LabeledBatch, config: NoisyLossConfig) -> LossReport:
    """``alpha1 * smoothed_ce + alpha2 * smoothed_rce``."""
    ce = smoothed_ce(batch, config)
    rce = smoothed_rce(batch, config)
    return LossReport(
        value=config.alpha1 * ce.value + config.alpha2 * rce.value,
        grad_logits=config.alpha1 * ce.grad_logits + config.alpha2 * rce.grad_logits,
        terms={"ce": ce.value, "rce": rce.value},
    )
