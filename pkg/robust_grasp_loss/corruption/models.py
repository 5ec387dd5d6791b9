import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

CorruptionKind = Literal["mcar", "multiplicative", "label_flip"]
CORRUPTION_KINDS = ("mcar", "multiplicative", "label_flip")
PLAN_FIELDS = ("kind", "ratio", "factor", "seed", "n", "affected_indices")


class PlanMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """
    Feature rows with integer class labels.

    ``values`` optionally holds the continuous targets the labels were derived
    from (for grasp data: in-plane rotation and width), shape ``(N, T)``.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    values: np.ndarray | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise ValueError(f"features must have shape (N, D), got {features.shape}.")
        if labels.shape != (features.shape[0],):
            raise ValueError(
                f"labels must have shape ({features.shape[0]},), got {labels.shape}."
            )
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}.")
        if np.any((labels < 0) | (labels >= self.num_classes)):
            raise ValueError(f"labels must be in [0, {self.num_classes}).")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if self.values is not None:
            values = np.asarray(self.values, dtype=np.float64)
            if values.ndim != 2 or values.shape[0] != features.shape[0]:
                raise ValueError(f"values must have shape (N, T), got {values.shape}.")
            object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            self.features, columns=[f"x{i}" for i in range(self.dimension)]
        )
        frame["label"] = self.labels
        if self.values is not None:
            for i in range(self.values.shape[1]):
                frame[f"value{i}"] = self.values[:, i]
        return frame


@dataclass(frozen=True)
class MaskedDataset:
    """
    A dataset whose targets were removed at some rows.

    ``mask`` is True where the target is present. ``labels`` is a masked array
    whose hidden entries are zeroed, so no removed label can leak through
    ``labels.data``.
    """

    features: np.ndarray
    labels: np.ma.MaskedArray
    mask: np.ndarray
    num_classes: int

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def labeled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def unlabeled_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.mask)

    def to_frame(self) -> pd.DataFrame:
        """Features and labels; removed labels are empty (``<NA>``) cells."""
        frame = pd.DataFrame(
            self.features, columns=[f"x{i}" for i in range(self.features.shape[1])]
        )
        frame["label"] = pd.array(
            np.where(self.mask, self.labels.data, 0), dtype="Int64"
        )
        frame.loc[~self.mask, "label"] = pd.NA
        return frame


@dataclass(frozen=True)
class CorruptionPlan:
    """
    A reproducible selection of rows to corrupt.

    Attributes:
        kind: Corruption protocol.
        ratio: Fraction of rows affected (kappa1 for MCAR, kappa2 otherwise).
        factor: Multiplier epsilon; only used by the multiplicative protocol.
        seed: 64-bit unsigned seed the plan was drawn from.
        n: Dataset size the plan was drawn for.
        affected_indices: Sorted, unique row indices of exactly
            ``round(ratio * n)`` affected rows.
    """

    kind: CorruptionKind
    ratio: float
    factor: float
    seed: int
    n: int
    affected_indices: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise ValueError(f"Unsupported corruption kind '{self.kind}'.")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio must be in [0, 1], got {self.ratio}.")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}.")
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}.")
        indices = tuple(int(index) for index in self.affected_indices)
        if list(indices) != sorted(set(indices)):
            raise ValueError("affected_indices must be sorted and unique.")
        if indices and (indices[0] < 0 or indices[-1] >= self.n):
            raise ValueError(f"affected_indices must be in [0, {self.n}).")
        object.__setattr__(self, "affected_indices", indices)

    @property
    def affected_mask(self) -> np.ndarray:
        """True at affected rows, shape ``(n,)``."""
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.affected_indices)] = True
        return mask

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ratio": self.ratio,
            "factor": self.factor,
            "seed": self.seed,
            "n": self.n,
            "affected_indices": list(self.affected_indices),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, document: str) -> "CorruptionPlan":
        record = json.loads(document)
        missing = [name for name in PLAN_FIELDS if name not in record]
        if missing:
            raise ValueError(f"Corruption plan is missing fields: {missing}")
        return cls(
            kind=record["kind"],
            ratio=float(record["ratio"]),
            factor=float(record["factor"]),
            seed=int(record["seed"]),
            n=int(record["n"]),
            affected_indices=tuple(record["affected_indices"]),
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "CorruptionPlan":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
