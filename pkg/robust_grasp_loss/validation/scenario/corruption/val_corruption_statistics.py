import math

import numpy as np
import pytest

from robust_grasp_loss.corruption import (
    Dataset,
    affected_count,
    apply_label_flip,
    apply_mcar,
    apply_multiplicative_noise,
    plan_corruption,
)

STATISTICS_SIZE = 10000
STATISTICS_SEEDS = 100


@pytest.mark.validation_category("corruption")
@pytest.mark.validation_criterion("exact affected count")
@pytest.mark.parametrize("n", [0, 1, 7, 600, 10001])
@pytest.mark.parametrize("ratio", [0.0, 0.25, 0.5, 0.6, 0.7, 1.0])
def test_mcar_removes_exactly_rounded_count(n, ratio):
    """MCAR removes exactly round(ratio * N) labels, halves rounded up."""
    expected = math.floor(ratio * n + 0.5)
    assert affected_count(n, ratio) == expected

    rng = np.random.default_rng(n)
    dataset = Dataset(
        features=rng.normal(size=(n, 2)),
        labels=rng.integers(0, 3, size=n),
        num_classes=3,
    )
    masked = apply_mcar(dataset, plan_corruption(n, "mcar", ratio, seed=n))
    assert int((~masked.mask).sum()) == expected
    assert len(masked.unlabeled_indices) == expected
    np.testing.assert_array_equal(masked.features, dataset.features)


@pytest.mark.validation_category("corruption")
@pytest.mark.validation_criterion("selection frequency")
def test_selection_frequency_is_binomial(request):
    """
    Over 100 seeds at N = 10000 and ratio 0.5 each index is selected with a
    frequency close to Binomial(100, 0.5). About 0.27% of indices are expected
    beyond 3 sigma by chance, so at most 1% may be, and none beyond 5 sigma.
    """
    counts = np.zeros(STATISTICS_SIZE, dtype=np.int64)
    for seed in range(STATISTICS_SEEDS):
        plan = plan_corruption(STATISTICS_SIZE, "mcar", 0.5, seed=seed)
        counts += plan.affected_mask
    mean = STATISTICS_SEEDS * 0.5
    sigma = math.sqrt(STATISTICS_SEEDS * 0.25)
    deviation = np.abs(counts - mean) / sigma
    beyond_three = float(np.mean(deviation > 3.0))
    request.node.validation_summary = (
        f"max deviation {deviation.max():.2f} sigma, "
        f"{100.0 * beyond_three:.2f}% of indices beyond 3 sigma"
    )
    assert beyond_three <= 0.01
    assert deviation.max() <= 5.0
    assert counts.sum() == STATISTICS_SEEDS * affected_count(STATISTICS_SIZE, 0.5)


@pytest.mark.validation_category("corruption")
@pytest.mark.validation_criterion("multiplicative noise locality")
@pytest.mark.parametrize("factor", [0.0, 0.5, 1.7, -1.0])
def test_multiplicative_noise_leaves_unaffected_rows_bitwise(factor):
    """Unaffected target rows keep their exact bit patterns; affected rows are scaled."""
    rng = np.random.default_rng(7)
    targets = rng.normal(size=(500, 2)) * 1e3
    plan = plan_corruption(500, "multiplicative", 0.4, factor=factor, seed=11)
    noisy = apply_multiplicative_noise(targets, plan)
    affected = plan.affected_mask
    np.testing.assert_array_equal(
        noisy[~affected].view(np.uint64), targets[~affected].view(np.uint64)
    )
    np.testing.assert_array_equal(noisy[affected], targets[affected] * factor)


@pytest.mark.validation_category("corruption")
@pytest.mark.validation_criterion("label flip")
def test_label_flip_changes_exactly_the_affected_labels():
    """Every affected label moves to a different class; the others are untouched."""
    rng = np.random.default_rng(3)
    labels = rng.integers(0, 3, size=600)
    plan = plan_corruption(600, "label_flip", 0.4, seed=5)
    flipped = apply_label_flip(labels, plan, 3)
    changed = flipped != labels
    np.testing.assert_array_equal(changed, plan.affected_mask)
    assert int(changed.sum()) == 240
