# __init__.py

from .models import (
    CorruptionPlan,
    Dataset,
    MaskedDataset,
    PlanMismatchError,
)
from .plan import affected_count, plan_corruption
from .apply import (
    apply_label_flip,
    apply_mcar,
    apply_multiplicative_noise,
    corrupt_dataset,
    restore_targets,
)

__all__ = [
    "CorruptionPlan",
    "Dataset",
    "MaskedDataset",
    "PlanMismatchError",
    "affected_count",
    "apply_label_flip",
    "apply_mcar",
    "apply_multiplicative_noise",
    "corrupt_dataset",
    "plan_corruption",
    "restore_targets",
]
