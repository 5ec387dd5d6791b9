"""
Mini-batch SGD training with the missing and noisy ground truth losses.

In the missing ground truth modes (``pseudo`` and ``smoothed_missing``) the
first ``warmup_epochs`` epochs train on the labeled members of each
mini-batch only. Afterwards each mini-batch combines the supervised loss over
its labeled members with the pseudo-label or smoothed self-target loss over
its unlabeled members; pseudo-labels are recomputed from the current model on
every mini-batch. Labeled and unlabeled samples are interleaved in the
shuffled data order.

The noisy ground truth modes (``sce``, ``smoothed_noisy``) and plain ``ce``
use only labeled samples.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd

from robust_grasp_loss.corruption.models import Dataset, MaskedDataset
from robust_grasp_loss.losses.classification import (
    ce_supervised,
    combined_missing_loss,
    sce_baseline,
    symmetric_noisy_loss,
)
from robust_grasp_loss.losses.models import (
    EmptyBatchError,
    LabeledBatch,
    LossReport,
    MissingLossConfig,
    NoisyLossConfig,
    UnlabeledBatch,
)

from .predictor import PredictorParams, backward, forward, init_params, predict

LossMode = Literal["ce", "pseudo", "smoothed_missing", "sce", "smoothed_noisy"]
LOSS_MODES = ("ce", "pseudo", "smoothed_missing", "sce", "smoothed_noisy")
MISSING_MODES = ("pseudo", "smoothed_missing")
HISTORY_COLUMNS = ["epoch", "train_loss", "val_accuracy", "gated_in_fraction"]
DEFAULT_WARMUP_EPOCHS = 10


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """
    Training schedule and loss selection.

    Attributes:
        epochs: Number of passes over the training data.
        batch_size: Mini-batch size; a value >= N gives full-batch gradient descent.
        learning_rate: SGD step size.
        seed: Seed of the initialisation and of the per-epoch shuffles.
        warmup_epochs: Supervised-only epochs before the unlabeled loss activates.
            ``None`` means ``min(10, epochs)``; see :attr:`warmup`.
        loss_mode: One of ``ce``, ``pseudo``, ``smoothed_missing``, ``sce``,
            ``smoothed_noisy``.
        missing: Hyperparameters of the missing ground truth losses.
        noisy: Hyperparameters of the noisy ground truth losses.
        hidden_width: Hidden layer width; 0 trains the linear model.
    """

    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.1
    seed: int = 0
    warmup_epochs: int | None = None
    loss_mode: LossMode = "ce"
    missing: MissingLossConfig = field(default_factory=MissingLossConfig)
    noisy: NoisyLossConfig = field(default_factory=NoisyLossConfig)
    hidden_width: int = 0

    def __post_init__(self):
        if self.loss_mode not in LOSS_MODES:
            raise ConfigError(
                f"Unsupported loss_mode '{self.loss_mode}'. Choose one of {LOSS_MODES}."
            )
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}.")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}.")
        if not self.learning_rate > 0.0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}.")
        if self.warmup_epochs is not None and not 0 <= self.warmup_epochs <= self.epochs:
            raise ConfigError(
                f"warmup_epochs must be in [0, epochs={self.epochs}], got {self.warmup_epochs}."
            )
        if self.hidden_width < 0:
            raise ConfigError(f"hidden_width must be >= 0, got {self.hidden_width}.")

    @property
    def warmup(self) -> int:
        """Supervised-only epochs in effect."""
        if self.warmup_epochs is None:
            return min(DEFAULT_WARMUP_EPOCHS, self.epochs)
        return self.warmup_epochs


def _split(data: Dataset | MaskedDataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(data, MaskedDataset):
        return data.features, np.asarray(data.labels.data, dtype=np.int64), data.mask
    return data.features, data.labels, np.ones(data.size, dtype=bool)


def batch_objective(
    params: PredictorParams,
    features: np.ndarray,
    labels: np.ndarray,
    present: np.ndarray,
    num_classes: int,
    config: TrainConfig,
    supervised_only: bool = False,
) -> tuple[LossReport, PredictorParams] | None:
    """
    Loss of one mini-batch and its parameter gradient.

    Returns None when the mini-batch holds no sample the loss can use.
    """
    labeled_rows = np.flatnonzero(present)
    uses_unlabeled = config.loss_mode in MISSING_MODES and not supervised_only
    unlabeled_rows = np.flatnonzero(~present) if uses_unlabeled else np.array([], dtype=int)
    if labeled_rows.size + unlabeled_rows.size == 0:
        return None

    rows = np.concatenate([labeled_rows, unlabeled_rows])
    logits = forward(params, features[rows])
    labeled_logits = logits[: labeled_rows.size]
    labeled = LabeledBatch(
        logits=labeled_logits.reshape(-1, num_classes),
        targets=np.eye(num_classes)[labels[labeled_rows]].reshape(-1, num_classes),
    )

    if uses_unlabeled:
        unlabeled = UnlabeledBatch(logits[labeled_rows.size :].reshape(-1, num_classes))
        unlabeled_loss = "pseudo" if config.loss_mode == "pseudo" else "smoothed"
        report = combined_missing_loss(labeled, unlabeled, config.missing, unlabeled_loss)
    elif labeled_rows.size == 0:
        return None
    elif config.loss_mode == "sce":
        report = sce_baseline(labeled, config.noisy)
    elif config.loss_mode == "smoothed_noisy":
        report = symmetric_noisy_loss(labeled, config.noisy)
    else:
        report = ce_supervised(labeled)
    return report, backward(params, features[rows], report.grad_logits)


def train(
    train_data: Dataset | MaskedDataset,
    val_data: Dataset | None,
    config: TrainConfig,
) -> tuple[PredictorParams, pd.DataFrame]:
    """
    Train a predictor with plain mini-batch SGD.

    Args:
        train_data: Training samples; a MaskedDataset marks samples without labels.
        val_data: Optional validation samples, evaluated after every epoch.
        config: Schedule and loss selection.

    Returns:
        tuple: The trained parameters and the per-epoch history with columns
        ``epoch``, ``train_loss``, ``val_accuracy`` and ``gated_in_fraction``.

    Raises:
        EmptyBatchError: If the training data is empty, or holds no labels
            while the loss needs them.
    """
    features, labels, present = _split(train_data)
    size = features.shape[0]
    if size == 0:
        raise EmptyBatchError("Training data is empty.")
    if not present.any() and (config.loss_mode not in MISSING_MODES or config.warmup > 0):
        raise EmptyBatchError(
            f"Training data has no labeled samples, which loss_mode "
            f"'{config.loss_mode}' with warmup_epochs={config.warmup} needs."
        )

    num_classes = train_data.num_classes
    params = init_params(features.shape[1], num_classes, config.hidden_width, config.seed)
    rng = np.random.default_rng(config.seed)
    records = []
    for epoch in range(config.epochs):
        supervised_only = epoch < config.warmup
        order = rng.permutation(size)
        losses, weights = [], []
        unlabeled_seen, gated_in = 0, 0
        for start in range(0, size, config.batch_size):
            rows = order[start : start + config.batch_size]
            result = batch_objective(
                params,
                features[rows],
                labels[rows],
                present[rows],
                num_classes,
                config,
                supervised_only,
            )
            if result is None:
                continue
            report, grads = result
            params = params.step(grads, config.learning_rate)
            losses.append(report.value)
            weights.append(rows.size)
            if report.gated_in is not None and config.loss_mode in MISSING_MODES:
                unlabeled_seen += int((~present[rows]).sum())
                gated_in += report.gated_in

        train_loss = float(np.average(losses, weights=weights)) if losses else float("nan")
        val_accuracy = evaluate(params, val_data) if val_data is not None else float("nan")
        gated_fraction = gated_in / unlabeled_seen if unlabeled_seen else float("nan")
        logging.debug(
            f"epoch {epoch}: train_loss={train_loss:.6g} val_accuracy={val_accuracy:.4f} "
            f"gated_in_fraction={gated_fraction:.4f}"
        )
        records.append((epoch, train_loss, val_accuracy, gated_fraction))

    return params, pd.DataFrame.from_records(records, columns=HISTORY_COLUMNS)


def evaluate(params: PredictorParams, data: Dataset) -> float:
    """
    Fraction of samples whose argmax prediction equals the label.

    Raises:
        EmptyBatchError: If ``data`` is empty.
    """
    if data.size == 0:
        raise EmptyBatchError("Cannot evaluate on an empty dataset.")
    return float(np.mean(predict(params, data.features) == data.labels))
