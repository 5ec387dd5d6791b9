"""Shared helpers for the unit tests."""

import numpy as np
import pytest

from robust_grasp_loss.corruption import Dataset


def _random_logits(rng: np.random.Generator, n: int, c: int, scale: float = 2.0) -> np.ndarray:
    return scale * rng.normal(size=(n, c))


def _make_dataset(n: int = 12, num_classes: int = 3, seed: int = 0, values: bool = False) -> Dataset:
    """Small random data set; optional continuous values in two columns."""
    rng = np.random.default_rng(seed)
    return Dataset(
        features=rng.normal(size=(n, 2)),
        labels=np.arange(n) % num_classes,
        num_classes=num_classes,
        values=rng.uniform(0.1, 1.0, size=(n, 2)) if values else None,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
