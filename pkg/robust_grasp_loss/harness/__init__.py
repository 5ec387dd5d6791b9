# __init__.py

from .config import (
    SWEEP_AXES,
    CorruptionSpec,
    DataParams,
    ExperimentConfig,
    experiment_from_dict,
    experiment_to_dict,
    load_experiment_config,
)
from .experiment import CellError, ResultRow, run_experiment, run_replicate, sweep_cells
from .report import EmptyReportError, convert_report, emit_report, read_report

__all__ = [
    "SWEEP_AXES",
    "CellError",
    "CorruptionSpec",
    "DataParams",
    "EmptyReportError",
    "ExperimentConfig",
    "ResultRow",
    "convert_report",
    "emit_report",
    "experiment_from_dict",
    "experiment_to_dict",
    "load_experiment_config",
    "read_report",
    "run_experiment",
    "run_replicate",
    "sweep_cells",
]
