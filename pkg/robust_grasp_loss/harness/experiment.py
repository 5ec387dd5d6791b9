import itertools
import logging
import time
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from robust_grasp_loss.corruption.apply import corrupt_dataset
from robust_grasp_loss.corruption.plan import plan_corruption
from robust_grasp_loss.generation.blobs import BlobParams, DataSplit, gen_blobs
from robust_grasp_loss.generation.grasp_synthetic import (
    GraspSyntheticParams,
    gen_grasp_dataset,
    relabel_rotations,
)
from robust_grasp_loss.model.training import evaluate, train

from .config import ExperimentConfig, apply_axis


class CellError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResultRow:
    """
    Paired accuracies of one sweep cell.

    ``params`` maps sweep axis names to this cell's values; the accuracy
    tuples are ordered like the config's replicate seeds.
    """

    params: Mapping[str, float]
    acc_baseline: tuple[float, ...]
    acc_robust: tuple[float, ...]
    seconds: float = 0.0

    @staticmethod
    def _std(values: tuple[float, ...]) -> float:
        return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0

    @property
    def mean_acc_baseline(self) -> float:
        return float(np.mean(self.acc_baseline))

    @property
    def mean_acc_robust(self) -> float:
        return float(np.mean(self.acc_robust))

    @property
    def std_baseline(self) -> float:
        return self._std(self.acc_baseline)

    @property
    def std_robust(self) -> float:
        return self._std(self.acc_robust)


def generate_data(config: ExperimentConfig, seed: int) -> DataSplit:
    data = config.data
    if config.task == "grasp_synthetic":
        params = GraspSyntheticParams(
            n_train=data.n_train,
            n_test=data.n_test,
            rotation_classes=data.classes,
            feature_noise=data.cluster_spread,
        )
        return gen_grasp_dataset(params, seed)
    params = BlobParams(
        n_train=data.n_train,
        n_test=data.n_test,
        classes=data.classes,
        dimension=data.dimension,
        cluster_spread=data.cluster_spread,
        center_radius=data.center_radius,
    )
    return gen_blobs(params, seed)


def sweep_cells(config: ExperimentConfig) -> list[dict[str, float]]:
    """Full factorial over the sweep axes, sorted by axis name; one empty cell without axes."""
    names = [name for name, _ in config.sweep]
    value_lists = [values for _, values in config.sweep]
    return [dict(zip(names, combination)) for combination in itertools.product(*value_lists)]


def cell_config(config: ExperimentConfig, cell: Mapping[str, float]) -> ExperimentConfig:
    for name, value in cell.items():
        config = apply_axis(config, name, value)
    return config


def run_replicate(config: ExperimentConfig, seed: int) -> tuple[float, float]:
    """
    Train and evaluate the baseline and robust losses on one replicate.

    Both methods see the same data (seed ``seed``), the same corruption plan
    (seed ``corruption.seed + seed``) and the same initialisation (seed ``seed``).
    """
    split = generate_data(config, seed)
    spec = config.corruption
    plan = plan_corruption(
        split.train.size, spec.kind, spec.ratio, spec.factor, spec.seed + seed
    )
    corrupted = corrupt_dataset(
        split.train,
        plan,
        relabel=lambda values: relabel_rotations(values, split.train.num_classes),
    )
    accuracies = []
    for loss_mode in (config.baseline_loss, config.robust_loss):
        train_config = replace(config.train, loss_mode=loss_mode, seed=seed)
        params, _ = train(corrupted, None, train_config)
        accuracies.append(evaluate(params, split.test))
    return accuracies[0], accuracies[1]


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """
    Run every sweep cell for every replicate seed, sequentially.

    Rows are ordered by cell coordinates (axes sorted by name, values in
    config order).

    Raises:
        CellError: If any replicate fails; the message names the cell and seed.
    """
    rows = []
    for cell in sweep_cells(config):
        configured = cell_config(config, cell)
        baseline, robust = [], []
        started = time.perf_counter()
        for seed in config.seeds:
            logging.info(f"Running cell {cell or '{}'} seed {seed}")
            try:
                acc_baseline, acc_robust = run_replicate(configured, seed)
            except Exception as exc:
                raise CellError(f"Cell {cell} with seed {seed} failed: {exc}") from exc
            baseline.append(acc_baseline)
            robust.append(acc_robust)
        seconds = time.perf_counter() - started if config.record_timing else 0.0
        rows.append(
            ResultRow(
                params=dict(cell),
                acc_baseline=tuple(baseline),
                acc_robust=tuple(robust),
                seconds=seconds,
            )
        )
    return rows
