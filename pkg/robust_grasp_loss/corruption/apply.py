import numpy as np

from .models import CorruptionPlan, Dataset, MaskedDataset, PlanMismatchError
from .random import FLIP_LANE, CounterStream


def _check_plan(plan: CorruptionPlan, kind: str, size: int) -> None:
    if plan.kind != kind:
        raise PlanMismatchError(f"Expected a '{kind}' plan, got '{plan.kind}'.")
    if plan.n != size:
        raise PlanMismatchError(
            f"Plan was drawn for {plan.n} rows but the data has {size}."
        )


def apply_mcar(dataset: Dataset, plan: CorruptionPlan) -> MaskedDataset:
    """
    Remove the labels of the plan's affected rows.

    Features are copied untouched; the whole target record of an affected row
    is removed.

    Raises:
        PlanMismatchError: If the plan is not an MCAR plan or was drawn for a
            different dataset size.
    """
    _check_plan(plan, "mcar", dataset.size)
    present = ~plan.affected_mask
    labels = np.ma.MaskedArray(
        np.where(present, dataset.labels, 0), mask=~present, dtype=np.int64
    )
    return MaskedDataset(
        features=dataset.features.copy(),
        labels=labels,
        mask=present,
        num_classes=dataset.num_classes,
    )


def restore_targets(masked: MaskedDataset, labels) -> Dataset:
    """Inverse of :func:`apply_mcar` given the original labels."""
    original = np.asarray(labels, dtype=np.int64)
    if original.shape != (masked.size,):
        raise PlanMismatchError(
            f"Expected {masked.size} labels to restore, got shape {original.shape}."
        )
    if np.any(masked.labels.data[masked.mask] != original[masked.mask]):
        raise PlanMismatchError("Restored labels disagree with the labels still present.")
    return Dataset(
        features=masked.features.copy(),
        labels=original.copy(),
        num_classes=masked.num_classes,
    )


def apply_multiplicative_noise(targets, plan: CorruptionPlan) -> np.ndarray:
    """
    Multiply the affected target rows elementwise by ``plan.factor``.

    Unaffected rows are copied bit for bit.

    Raises:
        PlanMismatchError: On a kind or size mismatch.
    """
    values = np.array(targets, dtype=np.float64)
    _check_plan(plan, "multiplicative", values.shape[0] if values.ndim else 0)
    affected = list(plan.affected_indices)
    values[affected] = values[affected] * plan.factor
    return values


def apply_label_flip(labels, plan: CorruptionPlan, num_classes: int) -> np.ndarray:
    """
    Replace each affected label by a uniformly drawn different class.

    Replacement classes come from the plan's seed on a separate stream, so the
    same plan always flips to the same classes.

    Raises:
        ValueError: If ``num_classes < 2``.
        PlanMismatchError: On a kind or size mismatch.
    """
    if num_classes < 2:
        raise ValueError(f"Label flipping needs num_classes >= 2, got {num_classes}.")
    flipped = np.array(labels, dtype=np.int64)
    _check_plan(plan, "label_flip", flipped.shape[0])
    stream = CounterStream(plan.seed, FLIP_LANE)
    for index in plan.affected_indices:
        offset = 1 + stream.bounded(num_classes - 1)
        flipped[index] = (flipped[index] + offset) % num_classes
    return flipped


def corrupt_dataset(dataset: Dataset, plan: CorruptionPlan, relabel=None):
    """
    Apply any plan kind to a dataset.

    ``relabel`` maps noisy continuous ``values`` back to class labels and is
    required for multiplicative plans.

    Returns:
        MaskedDataset for MCAR plans, otherwise a Dataset with noisy labels.
    """
    if plan.kind == "mcar":
        return apply_mcar(dataset, plan)
    if plan.kind == "label_flip":
        return Dataset(
            features=dataset.features.copy(),
            labels=apply_label_flip(dataset.labels, plan, dataset.num_classes),
            num_classes=dataset.num_classes,
            values=dataset.values,
        )
    if dataset.values is None or relabel is None:
        raise PlanMismatchError(
            "Multiplicative noise needs continuous target values and a relabel function."
        )
    noisy_values = apply_multiplicative_noise(dataset.values, plan)
    return Dataset(
        features=dataset.features.copy(),
        labels=relabel(noisy_values),
        num_classes=dataset.num_classes,
        values=noisy_values,
    )
