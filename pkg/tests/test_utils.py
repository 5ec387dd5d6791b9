"""Tests for project utility functions."""

import json

import numpy as np
import pytest

from robust_grasp_loss.corruption import Dataset, MaskedDataset, apply_mcar, plan_corruption
from robust_grasp_loss.utils import (
    check_gradient,
    gradient_error,
    load_dataset,
    numerical_gradient,
    save_dataset,
)
from robust_grasp_loss.utils.serialization import META_SUFFIX
from tests.conftest import _make_dataset


def test_save_and_load_dataset_is_bitwise(tmp_path):
    data = _make_dataset(n=15, values=True)
    path = save_dataset(data, tmp_path / "train.csv")
    loaded = load_dataset(path)
    assert isinstance(loaded, Dataset)
    assert loaded.num_classes == 3
    np.testing.assert_array_equal(loaded.features, data.features)
    np.testing.assert_array_equal(loaded.labels, data.labels)
    np.testing.assert_array_equal(loaded.values, data.values)


def test_save_dataset_writes_header_and_meta(tmp_path):
    path = save_dataset(_make_dataset(n=4), tmp_path / "data.csv")
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "x0,x1,label"
    meta = json.loads((tmp_path / f"data.csv{META_SUFFIX}").read_text(encoding="utf-8"))
    assert meta == {"num_classes": 3}


def test_masked_dataset_loads_as_masked(tmp_path):
    data = _make_dataset(n=10)
    masked = apply_mcar(data, plan_corruption(10, "mcar", 0.3, seed=9))
    path = save_dataset(masked, tmp_path / "masked.csv")
    loaded = load_dataset(path)
    assert isinstance(loaded, MaskedDataset)
    np.testing.assert_array_equal(loaded.mask, masked.mask)
    np.testing.assert_array_equal(loaded.labels.data[loaded.mask], data.labels[masked.mask])
    assert np.all(loaded.labels.data[~loaded.mask] == 0)
    np.testing.assert_array_equal(loaded.features, data.features)


def test_load_dataset_without_meta_fails(tmp_path):
    path = tmp_path / "orphan.csv"
    path.write_text("x0,label\n0.5,1\n", encoding="utf-8")
    with pytest.raises(FileNotFoundError):
        load_dataset(path)


def test_load_dataset_without_label_column_fails(tmp_path):
    path = tmp_path / "nolabel.csv"
    path.write_text("x0,x1\n0.5,1.0\n", encoding="utf-8")
    (tmp_path / f"nolabel.csv{META_SUFFIX}").write_text('{"num_classes": 2}\n', encoding="utf-8")
    with pytest.raises(ValueError, match="no 'label' column"):
        load_dataset(path)


# ---------------------------------------------------------------------------
# Finite-difference helpers
# ---------------------------------------------------------------------------


def test_numerical_gradient_of_quadratic():
    x = np.array([[1.0, -2.0], [0.5, 3.0]])
    grad = numerical_gradient(lambda point: float(np.sum(point**2)), x)
    np.testing.assert_allclose(grad, 2.0 * x, rtol=1e-9, atol=1e-9)


def test_numerical_gradient_leaves_input_untouched():
    x = np.array([1.0, 2.0, 3.0])
    numerical_gradient(lambda point: float(np.prod(point)), x)
    np.testing.assert_array_equal(x, [1.0, 2.0, 3.0])


def test_gradient_error_is_relative():
    assert gradient_error([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert gradient_error([1.1], [1.0]) == pytest.approx(0.1, rel=1e-6)
    assert gradient_error(np.zeros(0), np.zeros(0)) == 0.0
    with pytest.raises(ValueError, match="Gradient shapes differ"):
        gradient_error(np.zeros(2), np.zeros(3))


def test_check_gradient_flags_wrong_gradient():
    x = np.array([0.3, -0.7])
    check_gradient(lambda point: float(np.sum(np.sin(point))), x, np.cos(x))
    with pytest.raises(AssertionError):
        check_gradient(lambda point: float(np.sum(np.sin(point))), x, np.sin(x))
