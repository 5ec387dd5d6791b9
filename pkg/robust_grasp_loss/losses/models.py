from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

from .prob_core import InvalidInputError, as_logits, one_hot

Normalization = Literal["batch", "gated"]
UnlabeledLoss = Literal["smoothed", "pseudo"]


class EmptyBatchError(ValueError):
    pass


def _logit_matrix(logits, name: str) -> np.ndarray:
    values = as_logits(logits)
    if values.ndim != 2:
        raise InvalidInputError(f"{name} must have shape (N, C), got {values.shape}.")
    if values.shape[1] < 2:
        raise InvalidInputError(f"{name} needs C >= 2 classes, got {values.shape[1]}.")
    return values


@dataclass(frozen=True)
class LabeledBatch:
    """Logits with one-hot targets, both of shape ``(N_l, C)``."""

    logits: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        logits = _logit_matrix(self.logits, "LabeledBatch.logits")
        targets = np.asarray(self.targets, dtype=np.float64)
        if targets.shape != logits.shape:
            raise InvalidInputError(
                f"Targets shape {targets.shape} does not match logits shape {logits.shape}."
            )
        if not np.all((targets == 0.0) | (targets == 1.0)) or not np.all(
            targets.sum(axis=1) == 1.0
        ):
            raise InvalidInputError("Targets must be one-hot rows.")
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "targets", targets)

    @classmethod
    def from_labels(cls, logits, labels) -> "LabeledBatch":
        logits = _logit_matrix(logits, "LabeledBatch.logits")
        return cls(logits=logits, targets=one_hot(labels, logits.shape[1]))

    @property
    def size(self) -> int:
        return self.logits.shape[0]

    @property
    def num_classes(self) -> int:
        return self.logits.shape[1]

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.targets, axis=1)


@dataclass(frozen=True)
class UnlabeledBatch:
    """Logits of samples without ground truth; pseudo-labels are derived, not stored."""

    logits: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "logits", _logit_matrix(self.logits, "UnlabeledBatch.logits")
        )

    @property
    def size(self) -> int:
        return self.logits.shape[0]

    @property
    def num_classes(self) -> int:
        return self.logits.shape[1]


def _require_unit_interval(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}.")


def _require_non_negative(value: float, name: str) -> None:
    if value < 0.0:
        raise ValueError(f"{name} must be >= 0, got {value}.")


@dataclass(frozen=True)
class MissingLossConfig:
    """
    Hyperparameters of the missing ground truth losses.

    Attributes:
        gamma: Confidence threshold; a pseudo-labeled term is kept only when the
            largest predicted probability strictly exceeds it.
        xi: Smoothing coefficient of the self-target.
        lambda1: Weight of the supervised term.
        lambda2: Weight of the unlabeled term.
        normalization: ``"batch"`` divides the unlabeled sum by N_u, ``"gated"``
            divides by the number of samples passing the confidence gate.
    """

    gamma: float = 0.95
    xi: float = 0.9
    lambda1: float = 1.0
    lambda2: float = 1.0
    normalization: Normalization = "batch"

    def __post_init__(self):
        _require_unit_interval(self.gamma, "gamma")
        _require_unit_interval(self.xi, "xi")
        _require_non_negative(self.lambda1, "lambda1")
        _require_non_negative(self.lambda2, "lambda2")
        if self.normalization not in ("batch", "gated"):
            raise ValueError(f"Unsupported normalization '{self.normalization}'.")


@dataclass(frozen=True)
class NoisyLossConfig:
    """
    Hyperparameters of the noisy ground truth losses.

    ``log_floor`` replaces ``log 0`` in reverse cross-entropy terms; it only
    matters when a target distribution has zero entries (``delta = 1`` or the
    unsmoothed baseline). ``literal_paper_smoothing`` smooths the prediction
    instead of the observed label, which makes the loss independent of the label.
    """

    delta: float = 0.8
    alpha1: float = 1.0
    alpha2: float = 1.0
    log_floor: float = -4.0
    literal_paper_smoothing: bool = False

    def __post_init__(self):
        _require_unit_interval(self.delta, "delta")
        _require_non_negative(self.alpha1, "alpha1")
        _require_non_negative(self.alpha2, "alpha2")
        if not np.isfinite(self.log_floor) or self.log_floor >= 0.0:
            raise ValueError(f"log_floor must be finite and < 0, got {self.log_floor}.")


@dataclass(frozen=True)
class LossReport:
    """
    Scalar loss value in nats and its gradient with respect to the logits.

    Attributes:
        value: Loss value.
        grad_logits: Gradient of ``value`` with respect to the logits, shape ``(N, C)``.
        terms: Named component values, e.g. ``{"ce": ..., "rce": ...}``.
        gated_in: Number of unlabeled samples that passed the confidence gate,
            ``None`` for losses without a gate.
    """

    value: float
    grad_logits: np.ndarray
    terms: Mapping[str, float] = field(default_factory=dict)
    gated_in: int | None = None
