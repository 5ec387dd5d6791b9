"""
Grasp-head composite losses.

Two heads are covered:

* the approach head, a graspable/not-graspable classifier per candidate plus
  a view score per (candidate, view) pair, and
* the operation head, which predicts in-plane rotation class, grasp score and
  gripper width per (candidate, distance bin).

Regression quantities are predicted as logits over :class:`ValueBins`; the
scalar prediction is the expectation over bin centres. Smooth-L1 acts on that
expectation, while the distribution losses (smoothed self-target, forward and
reverse cross-entropy) act on the bin distribution itself.
"""

from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

from .classification import cross_entropy_terms, reverse_cross_entropy_terms, safe_log
from .models import MissingLossConfig, NoisyLossConfig
from .prob_core import (
    InvalidInputError,
    as_logits,
    confidence_gate,
    one_hot,
    smooth_distribution,
    softmax,
)

MaskedBranch = Literal["smoothed", "pseudo", "ignore"]


class DegenerateNormalizerError(ValueError):
    pass


@dataclass(frozen=True)
class ValueBins:
    """Equal-width bins over ``[low, high]``."""

    low: float = 0.0
    high: float = 1.0
    count: int = 12

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"ValueBins needs count >= 2, got {self.count}.")
        if not self.high > self.low:
            raise ValueError(f"ValueBins needs high > low, got [{self.low}, {self.high}].")

    @property
    def width(self) -> float:
        return (self.high - self.low) / self.count

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.low, self.high, self.count + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.low + (np.arange(self.count) + 0.5) * self.width

    def index(self, values) -> np.ndarray:
        """Bin index of each value; values outside the range go to the end bins."""
        positions = np.floor((np.asarray(values, dtype=np.float64) - self.low) / self.width)
        return np.clip(positions, 0, self.count - 1).astype(np.int64)

    def to_dict(self) -> dict:
        return {"low": self.low, "high": self.high, "count": self.count}


def rotation_bins(count: int) -> ValueBins:
    """In-plane rotation classes over [-pi, pi)."""
    return ValueBins(low=-np.pi, high=np.pi, count=count)


def expected_value(logits: np.ndarray, bins: ValueBins) -> np.ndarray:
    return softmax(logits) @ bins.centers


def _check_bins(logits: np.ndarray, bins: ValueBins, name: str) -> None:
    if logits.shape[-1] != bins.count:
        raise InvalidInputError(
            f"{name} has {logits.shape[-1]} bins but its ValueBins has {bins.count}."
        )


def _require_shape(values: np.ndarray, shape: tuple, name: str) -> None:
    if values.shape != shape:
        raise InvalidInputError(f"{name} must have shape {shape}, got {values.shape}.")


def _present_or(values: np.ndarray, present: np.ndarray, fill) -> np.ndarray:
    return np.where(present, values, fill)


@dataclass(frozen=True)
class GraspCandidateBatch:
    """
    Approach-head predictions and truths for N candidates and V views.

    Attributes:
        graspable_logits: Two-class logits per candidate, shape ``(N, 2)``.
        graspable_truth: 1 if the candidate is graspable, shape ``(N,)``.
        view_score_logits: Score logits over ``score_bins``, shape ``(N, V, K)``.
        view_score_truth: Score truth, shape ``(N, V)``; masked entries are kept
            as given and never read by the losses.
        view_score_mask: True where the score truth is present, shape ``(N, V)``.
        pred_approach: Predicted unit approach vectors, shape ``(N, V, 3)``.
        true_approach: Ground-truth unit approach vectors, shape ``(N, V, 3)``.
        score_bins: Value bins of the view score.
    """

    graspable_logits: np.ndarray
    graspable_truth: np.ndarray
    view_score_logits: np.ndarray
    view_score_truth: np.ndarray
    view_score_mask: np.ndarray
    pred_approach: np.ndarray
    true_approach: np.ndarray
    score_bins: ValueBins = field(default_factory=ValueBins)

    def __post_init__(self):
        graspable_logits = as_logits(self.graspable_logits)
        if graspable_logits.ndim != 2 or graspable_logits.shape[1] != 2:
            raise InvalidInputError(
                f"graspable_logits must have shape (N, 2), got {graspable_logits.shape}."
            )
        size = graspable_logits.shape[0]
        graspable_truth = np.asarray(self.graspable_truth, dtype=np.int64)
        _require_shape(graspable_truth, (size,), "graspable_truth")
        if not np.all((graspable_truth == 0) | (graspable_truth == 1)):
            raise InvalidInputError("graspable_truth must contain only 0 and 1.")

        view_score_logits = as_logits(self.view_score_logits)
        if view_score_logits.ndim != 3 or view_score_logits.shape[0] != size:
            raise InvalidInputError(
                f"view_score_logits must have shape (N, V, K), got {view_score_logits.shape}."
            )
        _check_bins(view_score_logits, self.score_bins, "view_score_logits")
        pairs = view_score_logits.shape[:2]
        mask = np.asarray(self.view_score_mask, dtype=bool)
        _require_shape(mask, pairs, "view_score_mask")
        truth = np.asarray(self.view_score_truth, dtype=np.float64)
        _require_shape(truth, pairs, "view_score_truth")
        if not np.all(np.isfinite(truth[mask])):
            raise InvalidInputError("Present view_score_truth entries must be finite.")
        pred_approach = np.asarray(self.pred_approach, dtype=np.float64)
        true_approach = np.asarray(self.true_approach, dtype=np.float64)
        _require_shape(pred_approach, pairs + (3,), "pred_approach")
        _require_shape(true_approach, pairs + (3,), "true_approach")

        object.__setattr__(self, "graspable_logits", graspable_logits)
        object.__setattr__(self, "graspable_truth", graspable_truth)
        object.__setattr__(self, "view_score_logits", view_score_logits)
        object.__setattr__(self, "view_score_truth", truth)
        object.__setattr__(self, "view_score_mask", mask)
        object.__setattr__(self, "pred_approach", pred_approach)
        object.__setattr__(self, "true_approach", true_approach)

    @property
    def size(self) -> int:
        return self.graspable_logits.shape[0]

    @property
    def num_views(self) -> int:
        return self.view_score_logits.shape[1]

    @property
    def view_scores(self) -> np.ndarray:
        """Scalar view score predictions ``s_ij``."""
        return expected_value(self.view_score_logits, self.score_bins)

    def approach_angles(self) -> np.ndarray:
        # grasp.representation imports this package's exceptions
        from robust_grasp_loss.grasp.representation import approach_angle_deg

        return approach_angle_deg(self.pred_approach, self.true_approach)


@dataclass(frozen=True)
class OperationBatch:
    """
    Operation-head predictions and truths for N candidates and D distance bins.

    The truth mask covers the whole record: a masked (candidate, bin) entry has
    no rotation, score or width truth. Masked entries keep the values given and
    the losses never read them.
    """

    rotation_logits: np.ndarray
    score_logits: np.ndarray
    width_logits: np.ndarray
    rotation_truth: np.ndarray
    score_truth: np.ndarray
    width_truth: np.ndarray
    truth_mask: np.ndarray
    score_bins: ValueBins = field(default_factory=ValueBins)
    width_bins: ValueBins = field(default_factory=lambda: ValueBins(0.0, 0.1, 12))

    def __post_init__(self):
        rotation_logits = as_logits(self.rotation_logits)
        if rotation_logits.ndim != 3 or rotation_logits.shape[2] < 2:
            raise InvalidInputError(
                f"rotation_logits must have shape (N, D, K_rot) with K_rot >= 2, "
                f"got {rotation_logits.shape}."
            )
        cells = rotation_logits.shape[:2]
        score_logits = as_logits(self.score_logits)
        width_logits = as_logits(self.width_logits)
        _require_shape(score_logits, cells + (self.score_bins.count,), "score_logits")
        _require_shape(width_logits, cells + (self.width_bins.count,), "width_logits")

        mask = np.asarray(self.truth_mask, dtype=bool)
        _require_shape(mask, cells, "truth_mask")
        rotation_truth = np.asarray(self.rotation_truth, dtype=np.int64)
        _require_shape(rotation_truth, cells, "rotation_truth")
        num_rotations = rotation_logits.shape[2]
        present_rotations = rotation_truth[mask]
        if np.any((present_rotations < 0) | (present_rotations >= num_rotations)):
            raise InvalidInputError(f"rotation_truth must be in [0, {num_rotations}).")
        score_truth = np.asarray(self.score_truth, dtype=np.float64)
        width_truth = np.asarray(self.width_truth, dtype=np.float64)
        _require_shape(score_truth, cells, "score_truth")
        _require_shape(width_truth, cells, "width_truth")
        present_finite = np.isfinite(score_truth[mask]) & np.isfinite(width_truth[mask])
        if not present_finite.all():
            raise InvalidInputError("Present score and width truths must be finite.")

        object.__setattr__(self, "rotation_logits", rotation_logits)
        object.__setattr__(self, "score_logits", score_logits)
        object.__setattr__(self, "width_logits", width_logits)
        object.__setattr__(self, "rotation_truth", rotation_truth)
        object.__setattr__(self, "score_truth", score_truth)
        object.__setattr__(self, "width_truth", width_truth)
        object.__setattr__(self, "truth_mask", mask)

    @property
    def size(self) -> int:
        return self.rotation_logits.shape[0]

    @property
    def num_distance_bins(self) -> int:
        return self.rotation_logits.shape[1]

    @property
    def score_pred(self) -> np.ndarray:
        return expected_value(self.score_logits, self.score_bins)

    @property
    def width_pred(self) -> np.ndarray:
        return expected_value(self.width_logits, self.width_bins)


@dataclass(frozen=True)
class CompositeWeights:
    """
    Term weights and optional fixed normalizers.

    ``n_cls`` and ``n_reg`` default to per-batch counts: the number of
    classification terms and the number of gate-passing regression terms.
    ``gate_angle_deg`` is the approach-angle gate of the approach head.
    """

    beta1: float = 0.5
    beta2: float = 1.0
    beta3: float = 1.0
    eta2: float = 1.0
    eta3: float = 1.0
    n_cls: int | None = None
    n_reg: int | None = None
    gate_angle_deg: float = 5.0

    def __post_init__(self):
        for name in ("beta1", "beta2", "beta3", "eta2", "eta3"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}.")
        if not 0.0 < self.gate_angle_deg <= 180.0:
            raise ValueError(f"gate_angle_deg must be in (0, 180], got {self.gate_angle_deg}.")


@dataclass(frozen=True)
class CompositeLossReport:
    """
    Value of a composite loss, its gradient per head input and its named terms.

    ``grads`` maps the batch field name (e.g. ``"rotation_logits"``) to the
    gradient of ``value`` with respect to that field.
    """

    value: float
    grads: Mapping[str, np.ndarray]
    terms: Mapping[str, float] = field(default_factory=dict)
    n_cls: int = 0
    n_reg: int = 0


def smooth_l1(pred, truth) -> tuple:
    """
    Smooth-L1 (Huber with unit threshold) and its derivative with respect to ``pred``.

    Scalars give floats; arrays are handled elementwise.
    """
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(truth, dtype=np.float64)
    magnitude = np.abs(diff)
    quadratic = magnitude < 1.0
    values = np.where(quadratic, 0.5 * diff**2, magnitude - 0.5)
    grads = np.where(quadratic, diff, np.sign(diff))
    if values.ndim == 0:
        return float(values), float(grads)
    return values, grads


def two_class_softmax_loss(logits, truth) -> tuple:
    """
    Cross-entropy over the softmax of two logits.

    ``logits`` may be a single pair ``(2,)`` or a batch ``(N, 2)``.
    """
    values = as_logits(logits)
    if values.shape[-1] != 2:
        raise InvalidInputError(f"Expected 2 logits, got {values.shape[-1]}.")
    losses, grads = cross_entropy_terms(values, one_hot(truth, 2))
    if np.ndim(losses) == 0:
        return float(losses), grads
    return losses, grads


def sigmoid_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple:
    """
    Per-class sigmoid cross-entropy against one-hot ``labels``, summed over classes.

    Returns the per-element loss and its logit gradient ``sigmoid(z) - y``.
    """
    targets = one_hot(labels, logits.shape[-1])
    values = np.sum(np.logaddexp(0.0, logits) - targets * logits, axis=-1)
    sigmoid = 0.5 * (1.0 + np.tanh(0.5 * logits))
    return values, sigmoid - targets


def _self_target_terms(
    logits: np.ndarray, config: MissingLossConfig, branch: MaskedBranch
) -> tuple:
    """Gated self-target cross-entropy per element, zero where the gate is closed."""
    p = softmax(logits)
    if branch == "pseudo":
        targets = one_hot(np.argmax(p, axis=-1), p.shape[-1])
    else:
        targets = smooth_distribution(p, config.xi)
    values, grads = cross_entropy_terms(logits, targets)
    gate = np.asarray(confidence_gate(p, config.gamma))
    return np.where(gate, values, 0.0), np.where(gate[..., None], grads, 0.0)


def _regression_terms(logits: np.ndarray, bins: ValueBins, truth: np.ndarray) -> tuple:
    """Smooth-L1 on the expected bin value, with the chain rule through the softmax."""
    p = softmax(logits)
    prediction = p @ bins.centers
    values, slopes = smooth_l1(prediction, truth)
    grads = slopes[..., None] * p * (bins.centers - prediction[..., None])
    return values, grads


def _normalizer(explicit: int | None, counted: int, name: str) -> int:
    normalizer = counted if explicit is None else explicit
    if normalizer < 1:
        raise DegenerateNormalizerError(f"{name} must be >= 1, got {normalizer}.")
    return normalizer


def _check_branch(branch: str) -> None:
    if branch not in ("smoothed", "pseudo", "ignore"):
        raise ValueError(f"Unsupported masked_branch '{branch}'.")


def approach_loss(
    batch: GraspCandidateBatch,
    cfg: MissingLossConfig,
    w: CompositeWeights,
    masked_branch: MaskedBranch = "smoothed",
) -> CompositeLossReport:
    """
    Approach-head loss with a missing ground truth branch.

    ``(1/N_cls) sum_i L_cls(c_i, c_i*) + beta1 (1/N_reg) sum_ij c_i* 1(angle_ij < gate) F(i, j)``
    where ``F`` is smooth-L1 against the view score truth when it is present
    and the gated self-target loss on the score distribution when it is
    masked. ``masked_branch="ignore"`` drops masked pairs instead.

    Raises:
        DegenerateNormalizerError: If the batch is empty, a normalizer is
            below one while its terms exist, or every score truth is masked
            and no regression term passes the gate.
    """
    _check_branch(masked_branch)
    if batch.size == 0:
        raise DegenerateNormalizerError("approach_loss needs at least one candidate.")

    cls_values, cls_grads = two_class_softmax_loss(
        batch.graspable_logits, batch.graspable_truth
    )
    n_cls = _normalizer(w.n_cls, batch.size, "N_cls")

    angles = batch.approach_angles()
    gate = (batch.graspable_truth[:, None] == 1) & (angles < w.gate_angle_deg)
    present = gate & batch.view_score_mask
    masked = gate & ~batch.view_score_mask
    if masked_branch == "ignore":
        masked = np.zeros_like(masked)
    counted_reg = int(present.sum() + masked.sum())

    if counted_reg == 0 and not batch.view_score_mask.any():
        raise DegenerateNormalizerError(
            "approach_loss: every view score truth is masked and N_reg = 0."
        )

    score_grads = np.zeros_like(batch.view_score_logits)
    regression_value = 0.0
    if counted_reg > 0:
        n_reg = _normalizer(w.n_reg, counted_reg, "N_reg")
        reg_values, reg_grads = _regression_terms(
            batch.view_score_logits,
            batch.score_bins,
            _present_or(batch.view_score_truth, batch.view_score_mask, 0.0),
        )
        self_values, self_grads = _self_target_terms(
            batch.view_score_logits, cfg, "pseudo" if masked_branch == "pseudo" else "smoothed"
        )
        total = np.where(present, reg_values, 0.0).sum() + np.where(masked, self_values, 0.0).sum()
        regression_value = float(total / n_reg)
        score_grads = (
            w.beta1
            / n_reg
            * (
                np.where(present[..., None], reg_grads, 0.0)
                + np.where(masked[..., None], self_grads, 0.0)
            )
        )
    else:
        n_reg = 0

    classification_value = float(cls_values.sum() / n_cls)
    return CompositeLossReport(
        value=classification_value + w.beta1 * regression_value,
        grads={
            "graspable_logits": cls_grads / n_cls,
            "view_score_logits": score_grads,
        },
        terms={"classification": classification_value, "regression": regression_value},
        n_cls=n_cls,
        n_reg=n_reg,
    )


def _operation_normalizers(batch: OperationBatch, w: CompositeWeights) -> tuple:
    if batch.size == 0:
        raise DegenerateNormalizerError("Operation losses need at least one candidate.")
    return (
        _normalizer(w.n_cls, batch.size, "N_cls"),
        _normalizer(w.n_reg, batch.size, "N_reg"),
    )


def _operation_report(
    heads: dict, n_cls: int, n_reg: int, reg_weights: tuple
) -> CompositeLossReport:
    """Assemble ``sum_d [(1/N_cls) sum F_R + a (1/N_reg) sum F_S + b (1/N_reg) sum F_W]``."""
    scales = {
        "rotation_logits": 1.0 / n_cls,
        "score_logits": reg_weights[0] / n_reg,
        "width_logits": reg_weights[1] / n_reg,
    }
    names = {"rotation_logits": "rotation", "score_logits": "score", "width_logits": "width"}
    value = 0.0
    terms = {}
    grads = {}
    for key, (values, head_grads) in heads.items():
        denominator = n_cls if key == "rotation_logits" else n_reg
        terms[names[key]] = float(values.sum() / denominator)
        value += scales[key] * float(values.sum())
        grads[key] = scales[key] * head_grads
    return CompositeLossReport(
        value=float(value), grads=grads, terms=terms, n_cls=n_cls, n_reg=n_reg
    )


def operation_loss_supervised(
    batch: OperationBatch, w: CompositeWeights
) -> CompositeLossReport:
    """
    The unmodified operation-head loss: masked entries are dropped.

    Rotation uses per-class sigmoid cross-entropy, score and width use
    smooth-L1 on the expected bin value.
    """
    return _operation_missing_terms(batch, None, w, "ignore")


def operation_loss_missing(
    batch: OperationBatch,
    cfg: MissingLossConfig,
    w: CompositeWeights,
    masked_branch: MaskedBranch = "smoothed",
) -> CompositeLossReport:
    """
    Operation-head loss with a missing ground truth branch.

    Entries with truth use the supervised terms; masked entries use the
    gated self-target loss on the rotation, score and width distributions.
    """
    _check_branch(masked_branch)
    return _operation_missing_terms(batch, cfg, w, masked_branch)


def _operation_missing_terms(
    batch: OperationBatch,
    cfg: MissingLossConfig | None,
    w: CompositeWeights,
    masked_branch: MaskedBranch,
) -> CompositeLossReport:
    n_cls, n_reg = _operation_normalizers(batch, w)
    present = batch.truth_mask
    masked = ~present if masked_branch != "ignore" else np.zeros_like(present)

    supervised = {
        "rotation_logits": sigmoid_cross_entropy(
            batch.rotation_logits, _present_or(batch.rotation_truth, present, 0)
        ),
        "score_logits": _regression_terms(
            batch.score_logits, batch.score_bins, _present_or(batch.score_truth, present, 0.0)
        ),
        "width_logits": _regression_terms(
            batch.width_logits, batch.width_bins, _present_or(batch.width_truth, present, 0.0)
        ),
    }
    heads = {}
    for key, (values, grads) in supervised.items():
        head_values = np.where(present, values, 0.0)
        head_grads = np.where(present[..., None], grads, 0.0)
        if masked.any():
            self_values, self_grads = _self_target_terms(
                getattr(batch, key), cfg, masked_branch
            )
            head_values = head_values + np.where(masked, self_values, 0.0)
            head_grads = head_grads + np.where(masked[..., None], self_grads, 0.0)
        heads[key] = (head_values, head_grads)
    return _operation_report(heads, n_cls, n_reg, (w.beta2, w.beta3))


def _symmetric_terms(logits: np.ndarray, labels: np.ndarray, cfg: NoisyLossConfig) -> tuple:
    targets = one_hot(labels, logits.shape[-1])
    source = softmax(logits) if cfg.literal_paper_smoothing else targets
    smoothed = smooth_distribution(source, cfg.delta)
    ce_values, ce_grads = cross_entropy_terms(logits, smoothed)
    rce_values, rce_grads = reverse_cross_entropy_terms(
        logits, safe_log(smoothed, cfg.log_floor)
    )
    return (
        cfg.alpha1 * ce_values + cfg.alpha2 * rce_values,
        cfg.alpha1 * ce_grads + cfg.alpha2 * rce_grads,
    )


def operation_loss_noisy(
    batch: OperationBatch, cfg: NoisyLossConfig, w: CompositeWeights
) -> CompositeLossReport:
    """
    Operation-head loss for noisy ground truth.

    Every term is ``alpha1 * L_ce + alpha2 * L_rce`` against the
    delta-smoothed truth; score and width truths are discretized into their
    value bins first. Score and width terms are weighted by ``eta2`` and ``eta3``.

    Raises:
        InvalidInputError: If any truth is masked.
    """
    if not batch.truth_mask.all():
        raise InvalidInputError(
            "operation_loss_noisy needs every truth present; "
            "use operation_loss_missing for masked ground truth."
        )
    n_cls, n_reg = _operation_normalizers(batch, w)
    heads = {
        "rotation_logits": _symmetric_terms(batch.rotation_logits, batch.rotation_truth, cfg),
        "score_logits": _symmetric_terms(
            batch.score_logits, batch.score_bins.index(batch.score_truth), cfg
        ),
        "width_logits": _symmetric_terms(
            batch.width_logits, batch.width_bins.index(batch.width_truth), cfg
        ),
    }
    return _operation_report(heads, n_cls, n_reg, (w.eta2, w.eta3))
