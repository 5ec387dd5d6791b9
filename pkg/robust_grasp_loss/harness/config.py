"""Experiment configuration files.

An experiment config is a single JSON document (or a TOML document with the
same structure, chosen by the ``.toml`` suffix)::

    {
      "task": "blobs_classification",
      "data": {"n_train": 600, "n_test": 600, "classes": 3, "dimension": 2,
               "cluster_spread": 1.0, "center_radius": 2.0},
      "corruption": {"kind": "label_flip", "ratio": 0.4, "factor": 1.0, "seed": 0},
      "train": {"epochs": 100, "batch_size": 32, "learning_rate": 0.1,
                "warmup_epochs": 10, "hidden_width": 0,
                "missing": {"gamma": 0.95, "xi": 0.9},
                "noisy": {"delta": 0.8}},
      "baseline_loss": "ce",
      "robust_loss": "smoothed_noisy",
      "sweep": {"flip_ratio": [0.2, 0.4]},
      "seeds": [0, 1, 2, 3, 4],
      "record_timing": false
    }

Every section and key is optional; unknown keys are rejected.
"""

import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Literal

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from robust_grasp_loss.corruption.models import CORRUPTION_KINDS, CorruptionKind
from robust_grasp_loss.losses.models import MissingLossConfig, NoisyLossConfig
from robust_grasp_loss.model.training import LOSS_MODES, ConfigError, LossMode, TrainConfig

Task = Literal["blobs_classification", "grasp_synthetic"]
TASKS = ("blobs_classification", "grasp_synthetic")

DEFAULT_ROBUST_LOSS = {
    "mcar": "smoothed_missing",
    "label_flip": "smoothed_noisy",
    "multiplicative": "smoothed_noisy",
}


@dataclass(frozen=True)
class DataParams:
    """
    Data set size and shape.

    For ``grasp_synthetic`` ``classes`` is the number of in-plane rotation
    classes, ``cluster_spread`` the feature noise, and ``dimension`` and
    ``center_radius`` are unused.
    """

    n_train: int = 600
    n_test: int = 600
    classes: int = 3
    dimension: int = 2
    cluster_spread: float = 1.0
    center_radius: float = 2.0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ConfigError("n_train and n_test must be >= 1.")
        if self.classes < 2:
            raise ConfigError(f"classes must be >= 2, got {self.classes}.")
        if self.dimension < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.dimension}.")
        if self.cluster_spread < 0.0:
            raise ConfigError(f"cluster_spread must be >= 0, got {self.cluster_spread}.")
        if not self.center_radius > 0.0:
            raise ConfigError(f"center_radius must be > 0, got {self.center_radius}.")


@dataclass(frozen=True)
class CorruptionSpec:
    kind: CorruptionKind = "label_flip"
    ratio: float = 0.0
    factor: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise ConfigError(
                f"Unsupported corruption kind '{self.kind}'. Choose one of {CORRUPTION_KINDS}."
            )
        if not 0.0 <= self.ratio <= 1.0:
            raise ConfigError(f"corruption ratio must be in [0, 1], got {self.ratio}.")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"corruption seed must be a 64-bit unsigned integer, got {self.seed}.")


@dataclass(frozen=True)
class ExperimentConfig:
    task: Task = "blobs_classification"
    data: DataParams = field(default_factory=DataParams)
    corruption: CorruptionSpec = field(default_factory=CorruptionSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    baseline_loss: LossMode = "ce"
    robust_loss: LossMode | None = None
    sweep: tuple[tuple[str, tuple[float, ...]], ...] = ()
    seeds: tuple[int, ...] = (0,)
    record_timing: bool = False

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"Unsupported task '{self.task}'. Choose one of {TASKS}.")
        if self.robust_loss is None:
            object.__setattr__(self, "robust_loss", DEFAULT_ROBUST_LOSS[self.corruption.kind])
        for name in ("baseline_loss", "robust_loss"):
            if getattr(self, name) not in LOSS_MODES:
                raise ConfigError(f"Unsupported {name} '{getattr(self, name)}'.")
        if len(self.seeds) < 1:
            raise ConfigError("At least one replicate seed is required.")
        if self.task == "blobs_classification" and self.corruption.kind == "multiplicative":
            raise ConfigError(
                "Multiplicative noise needs continuous targets; use task 'grasp_synthetic'."
            )
        axes = tuple((name, tuple(values)) for name, values in self.sweep)
        for name, values in axes:
            if name not in SWEEP_AXES:
                raise ConfigError(
                    f"Unknown sweep axis '{name}'. Known axes: {sorted(SWEEP_AXES)}."
                )
            if not values:
                raise ConfigError(f"Sweep axis '{name}' has no values.")
        if len({name for name, _ in axes}) != len(axes):
            raise ConfigError("Sweep axes must be unique.")
        object.__setattr__(self, "sweep", tuple(sorted(axes)))
        object.__setattr__(self, "seeds", tuple(int(seed) for seed in self.seeds))


def _corruption_ratio(kind: str) -> Callable[[ExperimentConfig, float], ExperimentConfig]:
    def apply(config: ExperimentConfig, value: float) -> ExperimentConfig:
        if config.corruption.kind != kind:
            raise ConfigError(
                f"Sweep axis for '{kind}' corruption used with kind '{config.corruption.kind}'."
            )
        return replace(config, corruption=replace(config.corruption, ratio=float(value)))

    return apply


def _epsilon(config: ExperimentConfig, value: float) -> ExperimentConfig:
    if config.corruption.kind != "multiplicative":
        raise ConfigError("Sweep axis 'epsilon' needs multiplicative corruption.")
    return replace(config, corruption=replace(config.corruption, factor=float(value)))


def _train_field(name: str, cast=float):
    def apply(config: ExperimentConfig, value: float) -> ExperimentConfig:
        return replace(config, train=replace(config.train, **{name: cast(value)}))

    return apply


def _loss_field(section: str, name: str):
    def apply(config: ExperimentConfig, value: float) -> ExperimentConfig:
        inner = replace(getattr(config.train, section), **{name: float(value)})
        return replace(config, train=replace(config.train, **{section: inner}))

    return apply


def _cluster_spread(config: ExperimentConfig, value: float) -> ExperimentConfig:
    return replace(config, data=replace(config.data, cluster_spread=float(value)))


SWEEP_AXES: dict[str, Callable[[ExperimentConfig, float], ExperimentConfig]] = {
    "kappa1": _corruption_ratio("mcar"),
    "kappa2": _corruption_ratio("multiplicative"),
    "flip_ratio": _corruption_ratio("label_flip"),
    "epsilon": _epsilon,
    "gamma": _loss_field("missing", "gamma"),
    "xi": _loss_field("missing", "xi"),
    "lambda1": _loss_field("missing", "lambda1"),
    "lambda2": _loss_field("missing", "lambda2"),
    "delta": _loss_field("noisy", "delta"),
    "alpha1": _loss_field("noisy", "alpha1"),
    "alpha2": _loss_field("noisy", "alpha2"),
    "learning_rate": _train_field("learning_rate"),
    "epochs": _train_field("epochs", int),
    "warmup_epochs": _train_field("warmup_epochs", int),
    "hidden_width": _train_field("hidden_width", int),
    "cluster_spread": _cluster_spread,
}


def apply_axis(config: ExperimentConfig, name: str, value: float) -> ExperimentConfig:
    """Set one sweep parameter, turning invalid values into :class:`ConfigError`."""
    if name not in SWEEP_AXES:
        raise ConfigError(f"Unknown parameter '{name}'. Known: {sorted(SWEEP_AXES)}.")
    try:
        return SWEEP_AXES[name](config, value)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"Invalid value {value} for '{name}': {exc}") from exc


def _build(cls, record, section: str):
    if record is None:
        return cls()
    if not isinstance(record, dict):
        raise ConfigError(f"Section '{section}' must be a table/object.")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(record) - known)
    if unknown:
        raise ConfigError(f"Unknown keys in '{section}': {unknown}")
    try:
        return cls(**record)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid '{section}' section: {exc}") from exc


def experiment_from_dict(record: dict) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a parsed document.

    Raises:
        ConfigError: On unknown keys or invalid values.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(record) - known)
    if unknown:
        raise ConfigError(f"Unknown top-level keys: {unknown}")

    train_record = dict(record.get("train") or {})
    missing = _build(MissingLossConfig, train_record.pop("missing", None), "train.missing")
    noisy = _build(NoisyLossConfig, train_record.pop("noisy", None), "train.noisy")
    train = _build(TrainConfig, {**train_record, "missing": missing, "noisy": noisy}, "train")

    sweep = record.get("sweep") or {}
    if not isinstance(sweep, dict):
        raise ConfigError("'sweep' must map axis names to value lists.")
    top = {
        key: record[key]
        for key in ("task", "baseline_loss", "robust_loss", "seeds", "record_timing")
        if key in record
    }
    if "seeds" in top:
        top["seeds"] = tuple(top["seeds"])
    try:
        return ExperimentConfig(
            data=_build(DataParams, record.get("data"), "data"),
            corruption=_build(CorruptionSpec, record.get("corruption"), "corruption"),
            train=train,
            sweep=tuple((name, tuple(values)) for name, values in sweep.items()),
            **top,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid experiment config: {exc}") from exc


def experiment_to_dict(config: ExperimentConfig) -> dict:
    record = asdict(config)
    record["sweep"] = {name: list(values) for name, values in config.sweep}
    record["seeds"] = list(config.seeds)
    return record


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """
    Load an experiment config from a JSON or TOML file.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        ConfigError: If the document is malformed or fails validation.
    """
    path = Path(path)
    if path.suffix == ".toml":
        try:
            with path.open("rb") as f:
                record = tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"Malformed experiment TOML at '{path}': {exc}") from exc
    else:
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Malformed experiment JSON at '{path}': {exc}") from exc
    if not isinstance(record, dict):
        raise ConfigError(f"Experiment config '{path}' must be an object.")
    return experiment_from_dict(record)
