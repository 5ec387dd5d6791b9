import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from robust_grasp_loss.corruption import Dataset, corrupt_dataset, plan_corruption
from robust_grasp_loss.generation import BlobParams, gen_blobs
from robust_grasp_loss.harness import (
    CorruptionSpec,
    DataParams,
    ExperimentConfig,
    emit_report,
    experiment_to_dict,
    load_experiment_config,
    run_experiment,
)
from robust_grasp_loss.model import TrainConfig
from robust_grasp_loss.utils import load_dataset, save_dataset


def _small_sweep() -> ExperimentConfig:
    return ExperimentConfig(
        data=DataParams(n_train=120, n_test=120),
        corruption=CorruptionSpec(kind="label_flip", ratio=0.2, seed=3),
        train=TrainConfig(epochs=5, warmup_epochs=0),
        sweep=(("flip_ratio", (0.1, 0.3)), ("delta", (0.6, 0.8))),
        seeds=(0, 1, 2),
    )


@pytest.mark.validation_category("determinism")
@pytest.mark.validation_criterion("byte-identical sweep reports")
def test_sweep_report_is_byte_identical(tmp_path):
    """Running the same sweep config twice yields byte-identical CSV and JSON reports."""
    config_path = tmp_path / "sweep.json"
    config_path.write_text(json.dumps(experiment_to_dict(_small_sweep())), encoding="utf-8")

    first = run_experiment(load_experiment_config(config_path))
    second = run_experiment(load_experiment_config(config_path))
    for format in ("csv", "json"):
        assert emit_report(first, format).encode("utf-8") == emit_report(second, format).encode(
            "utf-8"
        )


@pytest.mark.validation_category("determinism")
@pytest.mark.validation_criterion("plan replay in a second process")
@pytest.mark.parametrize("kind", ["mcar", "label_flip"])
def test_saved_plan_reproduces_corruption_in_another_process(tmp_path, kind):
    """
    A plan saved to JSON and applied by a separate ``robust-grasp-loss corrupt``
    process reproduces the in-process corrupted data set exactly.
    """
    data = gen_blobs(BlobParams(n_train=300, n_test=10), seed=4).train
    data_path = tmp_path / "train.csv"
    save_dataset(data, data_path)

    plan = plan_corruption(data.size, kind, 0.4, seed=12345)
    plan_path = plan.save(tmp_path / "plan.json")
    expected = corrupt_dataset(data, plan)
    expected_path = tmp_path / "expected.csv"
    save_dataset(expected, expected_path)

    replayed_path = tmp_path / "replayed.csv"
    completed = subprocess.run(
        [
            sys.executable,
            "-m",
            "robust_grasp_loss.cli",
            "corrupt",
            "--data",
            str(data_path),
            "--kind",
            kind,
            "--plan",
            str(plan_path),
            "--out",
            str(replayed_path),
        ],
        check=False,
        capture_output=True,
        text=True,
    )
    assert completed.returncode == 0, completed.stderr
    assert replayed_path.read_bytes() == expected_path.read_bytes()

    replayed = load_dataset(replayed_path)
    if isinstance(replayed, Dataset):
        np.testing.assert_array_equal(replayed.labels, expected.labels)
    else:
        pd.testing.assert_frame_equal(replayed.to_frame(), expected.to_frame())
