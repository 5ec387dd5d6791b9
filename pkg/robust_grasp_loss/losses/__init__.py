# __init__.py

from .prob_core import (
    DegenerateDimensionError,
    InvalidInputError,
    argmax_label,
    confidence_gate,
    log_softmax,
    one_hot,
    smooth_distribution,
    softmax,
)
from .models import (
    EmptyBatchError,
    LabeledBatch,
    LossReport,
    MissingLossConfig,
    NoisyLossConfig,
    UnlabeledBatch,
)
from .classification import (
    ce_supervised,
    combined_missing_loss,
    pseudo_label_loss,
    sce_baseline,
    smoothed_ce,
    smoothed_rce,
    smoothed_targets,
    smoothed_unlabeled_loss,
    symmetric_noisy_loss,
)
from .composite import (
    CompositeLossReport,
    CompositeWeights,
    DegenerateNormalizerError,
    GraspCandidateBatch,
    OperationBatch,
    ValueBins,
    approach_loss,
    expected_value,
    operation_loss_missing,
    operation_loss_noisy,
    operation_loss_supervised,
    rotation_bins,
    smooth_l1,
    two_class_softmax_loss,
)

__all__ = [
    "CompositeLossReport",
    "CompositeWeights",
    "DegenerateDimensionError",
    "DegenerateNormalizerError",
    "EmptyBatchError",
    "GraspCandidateBatch",
    "InvalidInputError",
    "LabeledBatch",
    "LossReport",
    "MissingLossConfig",
    "NoisyLossConfig",
    "OperationBatch",
    "UnlabeledBatch",
    "ValueBins",
    "approach_loss",
    "argmax_label",
    "ce_supervised",
    "combined_missing_loss",
    "confidence_gate",
    "expected_value",
    "log_softmax",
    "one_hot",
    "operation_loss_missing",
    "operation_loss_noisy",
    "operation_loss_supervised",
    "pseudo_label_loss",
    "rotation_bins",
    "sce_baseline",
    "smooth_distribution",
    "smooth_l1",
    "smoothed_ce",
    "smoothed_rce",
    "smoothed_targets",
    "smoothed_unlabeled_loss",
    "softmax",
    "symmetric_noisy_loss",
    "two_class_softmax_loss",
]
