import math

import numpy as np
import pytest

from robust_grasp_loss.losses.prob_core import (
    DegenerateDimensionError,
    InvalidInputError,
    argmax_label,
    confidence_gate,
    log_softmax,
    one_hot,
    smooth_distribution,
    softmax,
)


# ---------------------------------------------------------------------------
# softmax / log_softmax
# ---------------------------------------------------------------------------


def test_softmax_of_equal_logits_is_uniform():
    np.testing.assert_allclose(softmax([0.0, 0.0, 0.0]), [1 / 3, 1 / 3, 1 / 3])


def test_softmax_reference_values():
    np.testing.assert_allclose(
        softmax([1.0, 2.0, 3.0]), [0.09003, 0.24473, 0.66524], atol=5e-6
    )


def test_softmax_is_stable_for_extreme_logits():
    p = softmax([1000.0, 0.0])
    assert p[0] == pytest.approx(1.0)
    assert p[1] == pytest.approx(0.0, abs=1e-300)
    assert np.all(np.isfinite(p))


def test_softmax_rows_sum_to_one_for_wide_logits(rng):
    logits = rng.uniform(-500.0, 500.0, size=(1000, 6))
    np.testing.assert_allclose(softmax(logits).sum(axis=1), 1.0, rtol=0, atol=1e-9)


@pytest.mark.parametrize("bad", [[np.nan, 0.0], [np.inf, 1.0], [-np.inf, 0.0]])
def test_softmax_rejects_non_finite_logits(bad):
    with pytest.raises(InvalidInputError, match="finite"):
        softmax(bad)
    with pytest.raises(InvalidInputError, match="finite"):
        log_softmax(bad)


def test_log_softmax_reference_values():
    np.testing.assert_allclose(log_softmax([0.0, 0.0]), [-math.log(2.0)] * 2)
    np.testing.assert_allclose(
        log_softmax([1.0, 2.0, 3.0]), np.log(softmax([1.0, 2.0, 3.0])), rtol=0, atol=1e-12
    )


def test_log_softmax_never_returns_minus_infinity():
    values = log_softmax([1000.0, 0.0])
    assert values[0] == pytest.approx(0.0)
    assert values[1] == pytest.approx(-1000.0)
    assert np.all(np.isfinite(values))


def test_log_softmax_differences_equal_logit_differences(rng):
    x = rng.normal(size=7) * 10.0
    values = log_softmax(x)
    assert values[2] - values[5] == pytest.approx(x[2] - x[5], abs=1e-12)


# ---------------------------------------------------------------------------
# smooth_distribution
# ---------------------------------------------------------------------------


def test_smooth_distribution_identity_at_one():
    np.testing.assert_allclose(smooth_distribution([0.7, 0.2, 0.1], 1.0), [0.7, 0.2, 0.1])


def test_smooth_distribution_reference_value():
    np.testing.assert_allclose(
        smooth_distribution([0.7, 0.2, 0.1], 0.6), [0.48, 0.28, 0.24], rtol=0, atol=1e-12
    )


@pytest.mark.parametrize("xi", [0.0, 0.3, 0.9])
def test_smooth_distribution_fixed_point_of_two_class_uniform(xi):
    np.testing.assert_allclose(smooth_distribution([0.5, 0.5], xi), [0.5, 0.5])


def test_smooth_distribution_at_inverse_class_count_is_uniform(rng):
    p = softmax(rng.normal(size=(5, 4)))
    np.testing.assert_allclose(smooth_distribution(p, 0.25), 0.25, rtol=0, atol=1e-12)


def test_smooth_distribution_is_strictly_positive_below_one(rng):
    p = one_hot([0, 2, 1], 3)
    assert np.all(smooth_distribution(p, 0.99) > 0.0)


def test_smooth_distribution_rejects_single_class():
    with pytest.raises(DegenerateDimensionError, match="two classes"):
        smooth_distribution([1.0], 0.9)


@pytest.mark.parametrize("xi", [-0.1, 1.5])
def test_smooth_distribution_rejects_out_of_range_coefficient(xi):
    with pytest.raises(ValueError, match="xi must be in"):
        smooth_distribution([0.5, 0.5], xi)


# ---------------------------------------------------------------------------
# confidence_gate / argmax_label / one_hot
# ---------------------------------------------------------------------------


def test_confidence_gate_examples():
    assert confidence_gate([0.98, 0.01, 0.01], 0.95) is True
    assert confidence_gate([0.95, 0.05], 0.95) is False
    assert confidence_gate([1 / 3, 1 / 3, 1 / 3], 0.5) is False


def test_confidence_gate_on_batches():
    np.testing.assert_array_equal(
        confidence_gate(np.array([[0.98, 0.02], [0.6, 0.4]]), 0.7), [True, False]
    )


def test_argmax_label_breaks_ties_towards_lowest_index():
    assert argmax_label([0.1, 0.8, 0.1]) == 1
    assert argmax_label([0.5, 0.5]) == 0
    assert argmax_label(softmax([1.0, 2.0, 3.0])) == 2


def test_one_hot_rejects_out_of_range_labels():
    np.testing.assert_array_equal(one_hot([1, 0], 2), [[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(InvalidInputError, match=r"Labels must be in \[0, 3\)"):
        one_hot([0, 3], 3)
