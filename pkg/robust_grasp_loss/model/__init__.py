# __init__.py

from .predictor import (
    PredictorParams,
    backward,
    forward,
    init_params,
    load_params,
    predict,
    predict_proba,
    save_params,
)
from .training import ConfigError, TrainConfig, batch_objective, evaluate, train

__all__ = [
    "ConfigError",
    "PredictorParams",
    "TrainConfig",
    "backward",
    "batch_objective",
    "evaluate",
    "forward",
    "init_params",
    "load_params",
    "predict",
    "predict_proba",
    "save_params",
    "train",
]
