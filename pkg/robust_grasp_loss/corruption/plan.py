import logging
import math

from .models import CORRUPTION_KINDS, CorruptionKind, CorruptionPlan
from .random import sample_without_replacement


def affected_count(n: int, ratio: float) -> int:
    """``round(ratio * n)`` with halves rounded up."""
    return int(math.floor(ratio * n + 0.5))


def plan_corruption(
    n: int,
    kind: CorruptionKind,
    ratio: float,
    factor: float = 1.0,
    seed: int = 0,
) -> CorruptionPlan:
    """
    Draw a corruption plan affecting exactly ``round(ratio * n)`` of ``n`` rows.

    The selection uses only ``(n, ratio, seed)``, never feature or target
    values, so MCAR removal is independent of the data by construction.

    Args:
        n: Dataset size.
        kind: ``"mcar"``, ``"multiplicative"`` or ``"label_flip"``.
        ratio: Fraction of rows affected, in [0, 1].
        factor: Multiplier for the multiplicative protocol.
        seed: 64-bit unsigned seed.

    Returns:
        CorruptionPlan: The plan with sorted affected indices.

    Raises:
        ValueError: If ``ratio`` is outside [0, 1], ``n`` is negative or
            ``kind`` is unknown.
    """
    if kind not in CORRUPTION_KINDS:
        raise ValueError(f"Unsupported corruption kind '{kind}'.")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}.")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}.")
    count = affected_count(n, ratio)
    indices = sample_without_replacement(n, count, seed)
    logging.debug(f"Planned {kind} corruption of {count}/{n} rows (seed {seed}).")
    return CorruptionPlan(
        kind=kind,
        ratio=float(ratio),
        factor=float(factor),
        seed=int(seed),
        n=int(n),
        affected_indices=tuple(int(index) for index in indices),
    )
