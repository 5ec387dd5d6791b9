"""
Pytest plugin for the robust grasp loss acceptance suite.

Loaded by the packaged validation suite and by ``robust-grasp-loss validate``
so that the suite's options and fixtures are available only for validation
runs.

Responsibilities
----------------
* Register CLI options (``--replicates``, ``--instances``).
* Expose the paired replicate seeds via the ``replicate_seeds`` session
  fixture and the number of random instances per gradient check via
  ``gradient_instances``.
* Add validation metadata to the pytest report header.

Presentation hooks for the built-in suite (e.g. ``pytest_html_report_title``)
live in ``robust_grasp_loss/validation/conftest.py``.
"""

import datetime
import pathlib

import numpy as np
import pytest

from robust_grasp_loss import __version__ as robust_grasp_loss_version

DEFAULT_REPLICATES = 10
DEFAULT_INSTANCES = 100


def pytest_addoption(parser):
    group = parser.getgroup("Robust Grasp Loss Validation")
    group.addoption(
        "--replicates",
        action="store",
        type=int,
        default=DEFAULT_REPLICATES,
        metavar="N",
        help="Paired seeds per directional experiment",
    )
    group.addoption(
        "--instances",
        action="store",
        type=int,
        default=DEFAULT_INSTANCES,
        metavar="N",
        help="Seeded random instances per gradient and identity check",
    )


def pytest_configure(config):
    config._rgl_validation_run_start_time = datetime.datetime.now().astimezone()
    replicates = config.getoption("--replicates")
    if replicates is not None and replicates < 1:
        raise pytest.UsageError(f"--replicates must be >= 1, got {replicates}.")
    instances = config.getoption("--instances")
    if instances is not None and instances < 1:
        raise pytest.UsageError(f"--instances must be >= 1, got {instances}.")

    metadata_key = _get_pytest_metadata_key()
    if metadata_key is not None:
        metadata = config.stash[metadata_key]
        for key, value in _validation_metadata(config).items():
            metadata[key] = value


def _get_pytest_metadata_key():
    try:
        from pytest_metadata.plugin import metadata_key
    except ImportError:
        return None
    return metadata_key


def _validation_metadata(config):
    run_start_time = getattr(
        config,
        "_rgl_validation_run_start_time",
        datetime.datetime.now().astimezone(),
    )
    return {
        "Validation Suite": f"Robust Grasp Loss {robust_grasp_loss_version}",
        "Validation Suite Path": str(pathlib.Path(__file__).parent / "validation"),
        "Replicates": config.getoption("--replicates"),
        "Gradient Instances": config.getoption("--instances"),
        "numpy": np.__version__,
        "Validation Run Start Time": run_start_time.isoformat(),
    }


def pytest_report_header(config):
    metadata = _validation_metadata(config)
    return [f"{key}: {value}" for key, value in metadata.items()]


@pytest.fixture(scope="session")
def replicate_seeds(request) -> list[int]:
    """Seeds shared by the baseline and the robust method of every experiment."""
    return list(range(request.config.getoption("--replicates")))


@pytest.fixture(scope="session")
def gradient_instances(request) -> int:
    return request.config.getoption("--instances")
