import numpy as np
import pytest

from robust_grasp_loss.harness import CorruptionSpec, DataParams, ExperimentConfig, run_experiment
from robust_grasp_loss.losses import MissingLossConfig
from robust_grasp_loss.model import TrainConfig

KAPPA1_VALUES = (0.0, 0.5, 0.6, 0.7)
MIN_STRICT_WIN_FRACTION = 0.7
DEGRADATION_TOLERANCE = 0.005


@pytest.fixture(scope="module")
def missing_rows(replicate_seeds):
    """Baseline and smoothed-missing accuracies per removal ratio, keyed by kappa1."""
    config = ExperimentConfig(
        task="blobs_classification",
        data=DataParams(n_train=600, n_test=600, classes=3, dimension=2),
        corruption=CorruptionSpec(kind="mcar"),
        train=TrainConfig(
            epochs=100, warmup_epochs=10, missing=MissingLossConfig(gamma=0.95, xi=0.9)
        ),
        baseline_loss="ce",
        robust_loss="smoothed_missing",
        sweep=(("kappa1", KAPPA1_VALUES),),
        seeds=tuple(replicate_seeds),
    )
    return {row.params["kappa1"]: row for row in run_experiment(config)}


@pytest.mark.validation_category("experiments")
@pytest.mark.validation_criterion("missing-label directional")
def test_smoothed_missing_loss_not_worse_than_supervised_only(request, missing_rows):
    """
    Same blobs task with 50% and 70% of the training labels removed at random.
    The combined loss (gamma 0.95, xi 0.9, 10 warm-up epochs) must reach at
    least the mean accuracy of supervised-only training on the remaining
    labels, and be strictly better at 70% removal on at least 7 of 10 seeds.
    """
    summaries = []
    for kappa1 in (0.5, 0.7):
        row = missing_rows[kappa1]
        summaries.append(
            f"kappa1={kappa1}: supervised {row.mean_acc_baseline:.4f}, "
            f"combined {row.mean_acc_robust:.4f}"
        )
        assert row.mean_acc_robust >= row.mean_acc_baseline

    row = missing_rows[0.7]
    strict_wins = int(np.sum(np.array(row.acc_robust) > np.array(row.acc_baseline)))
    summaries.append(f"strict wins at 0.7: {strict_wins}/{len(row.acc_robust)}")
    request.node.validation_summary = "; ".join(summaries)
    assert strict_wins >= MIN_STRICT_WIN_FRACTION * len(row.acc_robust)


def _violations(means: list[float]) -> list[float]:
    """Sizes of the increases between adjacent removal ratios."""
    return [later - earlier for earlier, later in zip(means, means[1:]) if later > earlier]


@pytest.mark.validation_category("experiments")
@pytest.mark.validation_criterion("monotonic degradation")
@pytest.mark.parametrize("method", ["baseline", "robust"])
def test_accuracy_does_not_increase_with_removal_ratio(request, missing_rows, method):
    """
    Mean accuracy of both methods is non-increasing over kappa1 in
    {0, 0.5, 0.6, 0.7}; one adjacent increase of at most 0.5 points is allowed.
    """
    means = [getattr(missing_rows[kappa1], f"mean_acc_{method}") for kappa1 in KAPPA1_VALUES]
    violations = _violations(means)
    request.node.validation_summary = ", ".join(f"{mean:.4f}" for mean in means)
    assert len(violations) <= 1
    assert all(size <= DEGRADATION_TOLERANCE for size in violations)
