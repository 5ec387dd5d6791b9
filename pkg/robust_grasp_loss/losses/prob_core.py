"""Probability primitives shared by every loss in this package.

All functions operate on the last axis, so a single vector of shape ``(C,)``
and a batch of shape ``(N, C)`` are both accepted.
"""

import numpy as np


class InvalidInputError(ValueError):
    pass


class DegenerateDimensionError(ValueError):
    pass


def as_logits(logits) -> np.ndarray:
    values = np.asarray(logits, dtype=np.float64)
    if values.ndim == 0:
        raise InvalidInputError("Logits must have at least one axis.")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("Logits must be finite.")
    return values


def softmax(logits) -> np.ndarray:
    """
    Max-shifted softmax over the last axis.

    Raises:
        InvalidInputError: If any logit is not finite.
    """
    values = as_logits(logits)
    shifted = values - values.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def log_softmax(logits) -> np.ndarray:
    """Numerically stable ``log(softmax(logits))``; never ``-inf`` for finite input."""
    values = as_logits(logits)
    shifted = values - values.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _check_coefficient(coefficient: float, name: str) -> float:
    if not 0.0 <= coefficient <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {coefficient}.")
    return float(coefficient)


def smooth_distribution(p, xi: float) -> np.ndarray:
    """
    Affine smoothing ``xi * p + (1 - xi) / (C - 1) * (1 - p)``.

    The output stays on the simplex for every ``xi`` in [0, 1]. ``xi = 1`` is the
    identity, ``xi = 1/C`` maps everything to the uniform distribution, and the
    argmax is preserved for ``xi > 1/C``.

    Raises:
        DegenerateDimensionError: If the class axis has fewer than two entries.
        ValueError: If ``xi`` is outside [0, 1].
    """
    probabilities = np.asarray(p, dtype=np.float64)
    num_classes = probabilities.shape[-1]
    if num_classes < 2:
        raise DegenerateDimensionError(
            f"Smoothing needs at least two classes, got C={num_classes}."
        )
    xi = _check_coefficient(xi, "xi")
    return xi * probabilities + (1.0 - xi) / (num_classes - 1) * (1.0 - probabilities)


def confidence_gate(p, gamma: float):
    """
    True where the largest probability strictly exceeds ``gamma``.

    Returns a Python bool for a single vector and a boolean array for a batch.
    """
    _check_coefficient(gamma, "gamma")
    gate = np.asarray(p, dtype=np.float64).max(axis=-1) > gamma
    if gate.ndim == 0:
        return bool(gate)
    return gate


def argmax_label(p):
    """Index of the largest entry; ties go to the lowest index."""
    labels = np.argmax(np.asarray(p), axis=-1)
    if labels.ndim == 0:
        return int(labels)
    return labels


def one_hot(labels, num_classes: int) -> np.ndarray:
    indices = np.asarray(labels, dtype=np.int64)
    if np.any(indices < 0) or np.any(indices >= num_classes):
        raise InvalidInputError(
            f"Labels must be in [0, {num_classes}), got range "
            f"[{indices.min()}, {indices.max()}]."
        )
    return np.eye(num_classes, dtype=np.float64)[indices]
