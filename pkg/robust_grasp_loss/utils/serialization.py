"""Dataset files.

Datasets are CSV tables with feature columns ``x0..x{D-1}``, a ``label``
column and, for grasp data, continuous ``value0..`` columns. A removed label is
an empty cell. Floats are written in shortest round-trip form, so reading a
file back reproduces the arrays bit for bit.
"""

import json
from pathlib import Path

import numpy as np
import pandas as pd

from robust_grasp_loss.corruption.models import Dataset, MaskedDataset

META_SUFFIX = ".meta.json"


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + META_SUFFIX)


def save_dataset(data: Dataset | MaskedDataset, path: str | Path) -> Path:
    """Write ``data`` to ``path`` and its class count to ``<path>.meta.json``."""
    path = Path(path)
    data.to_frame().to_csv(path, index=False, lineterminator="\n")
    _meta_path(path).write_text(
        json.dumps({"num_classes": data.num_classes}) + "\n", encoding="utf-8"
    )
    return path


def load_dataset(path: str | Path) -> Dataset | MaskedDataset:
    """
    Read a dataset written by :func:`save_dataset`.

    Returns a MaskedDataset when any label cell is empty.

    Raises:
        FileNotFoundError: If the CSV or its metadata file is missing.
        ValueError: If the table has no ``label`` column.
    """
    path = Path(path)
    meta = json.loads(_meta_path(path).read_text(encoding="utf-8"))
    frame = pd.read_csv(path, float_precision="round_trip", dtype={"label": "Int64"})
    if "label" not in frame.columns:
        raise ValueError(f"Dataset '{path}' has no 'label' column.")
    feature_columns = [column for column in frame.columns if column.startswith("x")]
    value_columns = [column for column in frame.columns if column.startswith("value")]
    features = frame[feature_columns].to_numpy(dtype=np.float64)
    present = frame["label"].notna().to_numpy()
    labels = frame["label"].fillna(0).to_numpy(dtype=np.int64)
    num_classes = int(meta["num_classes"])

    if not present.all():
        return MaskedDataset(
            features=features,
            labels=np.ma.MaskedArray(np.where(present, labels, 0), mask=~present),
            mask=present,
            num_classes=num_classes,
        )
    values = frame[value_columns].to_numpy(dtype=np.float64) if value_columns else None
    return Dataset(features=features, labels=labels, num_classes=num_classes, values=values)
