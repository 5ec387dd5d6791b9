"""Seeded Gaussian-blob classification data."""

import math
from dataclasses import dataclass

import numpy as np

from robust_grasp_loss.corruption.models import Dataset


@dataclass(frozen=True)
class DataSplit:
    train: Dataset
    test: Dataset


@dataclass(frozen=True)
class BlobParams:
    """
    Attributes:
        n_train: Training samples.
        n_test: Test samples.
        classes: Number of clusters, one per class.
        dimension: Feature dimension.
        cluster_spread: Standard deviation of every cluster.
        center_radius: Distance of the cluster means from the origin.
    """

    n_train: int = 600
    n_test: int = 600
    classes: int = 3
    dimension: int = 2
    cluster_spread: float = 1.0
    center_radius: float = 2.0

    def __post_init__(self):
        if self.classes < 2:
            raise ValueError(f"classes must be >= 2, got {self.classes}.")
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}.")
        if self.n_train < 0 or self.n_test < 0:
            raise ValueError("n_train and n_test must be >= 0.")
        if self.cluster_spread < 0.0:
            raise ValueError(f"cluster_spread must be >= 0, got {self.cluster_spread}.")
        if not self.center_radius > 0.0:
            raise ValueError(f"center_radius must be > 0, got {self.center_radius}.")


def cluster_means(params: BlobParams, rng: np.random.Generator) -> np.ndarray:
    """
    Seeded cluster means, one row per class.

    The first two coordinates place the means evenly on a circle of radius
    ``center_radius`` under a random rotation; further coordinates get a small
    seeded offset. In one dimension the means are evenly spaced on a line.
    """
    if params.dimension == 1:
        return np.linspace(-params.center_radius, params.center_radius, params.classes)[
            :, None
        ]
    phase = rng.uniform(0.0, 2.0 * math.pi)
    angles = phase + 2.0 * math.pi * np.arange(params.classes) / params.classes
    means = np.zeros((params.classes, params.dimension))
    means[:, 0] = params.center_radius * np.cos(angles)
    means[:, 1] = params.center_radius * np.sin(angles)
    if params.dimension > 2:
        means[:, 2:] = rng.normal(
            0.0, 0.1 * params.center_radius, size=(params.classes, params.dimension - 2)
        )
    return means


def _balanced_labels(n: int, classes: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.arange(n) % classes)


def _draw(
    n: int, means: np.ndarray, params: BlobParams, rng: np.random.Generator
) -> Dataset:
    labels = _balanced_labels(n, params.classes, rng)
    noise = rng.normal(0.0, 1.0, size=(n, params.dimension)) * params.cluster_spread
    return Dataset(features=means[labels] + noise, labels=labels, num_classes=params.classes)


def gen_blobs(params: BlobParams, seed: int) -> DataSplit:
    """
    Balanced Gaussian clusters, split into train and test sets sharing one set of means.

    With ``n`` divisible by ``classes`` every class has exactly ``n / classes``
    samples.
    """
    rng = np.random.default_rng(seed)
    means = cluster_means(params, rng)
    train = _draw(params.n_train, means, params, rng)
    test = _draw(params.n_test, means, params, rng)
    return DataSplit(train=train, test=test)
