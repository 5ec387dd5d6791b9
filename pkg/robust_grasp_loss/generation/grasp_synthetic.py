"""
Synthetic grasp data.

Two products are generated from seeded ground-truth grasps:

* a corpus of approach-head and operation-head batches whose predictions are
  the truth plus controlled perturbations, used to exercise the composite
  losses, and
* a classification data set where the label is the in-plane rotation class
  of a grasp, used by the training experiments.
"""

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from robust_grasp_loss.corruption.models import Dataset
from robust_grasp_loss.grasp.representation import (
    DecoupledGrasp,
    compose_rotation,
    decouple_rotation,
)
from robust_grasp_loss.losses.composite import (
    GraspCandidateBatch,
    OperationBatch,
    ValueBins,
    rotation_bins,
)

from .blobs import DataSplit

PEAK_MARGIN = 30.0
GATE_OUT_ANGLE_DEG = 20.0


@dataclass(frozen=True)
class GraspSyntheticParams:
    """
    Attributes:
        num_candidates: Candidates N per batch.
        num_views: Views V per candidate in the approach head (>= 2).
        num_distance_bins: Distance bins D in the operation head.
        rotation_classes: In-plane rotation classes over [-pi, pi).
        value_bins: Bins of the score and width heads.
        max_width: Upper end of the width bins in meters.
        logit_noise: Standard deviation of the noise added to peaked logits.
        approach_noise_deg: Angle between predicted and true approach vectors
            of the unforced views.
        n_train: Samples in the rotation classification training set.
        n_test: Samples in the rotation classification test set.
        feature_noise: Standard deviation of the noise on classification features.
    """

    num_candidates: int = 8
    num_views: int = 4
    num_distance_bins: int = 3
    rotation_classes: int = 12
    value_bins: int = 12
    max_width: float = 0.1
    logit_noise: float = 0.0
    approach_noise_deg: float = 0.0
    n_train: int = 600
    n_test: int = 600
    feature_noise: float = 0.1

    def __post_init__(self):
        if self.num_candidates < 1:
            raise ValueError(f"num_candidates must be >= 1, got {self.num_candidates}.")
        if self.num_views < 2:
            raise ValueError(f"num_views must be >= 2, got {self.num_views}.")
        if self.num_distance_bins < 1:
            raise ValueError(f"num_distance_bins must be >= 1, got {self.num_distance_bins}.")
        if self.rotation_classes < 2 or self.value_bins < 2:
            raise ValueError("rotation_classes and value_bins must be >= 2.")
        if not self.max_width > 0.0:
            raise ValueError(f"max_width must be > 0, got {self.max_width}.")
        if self.logit_noise < 0.0 or self.feature_noise < 0.0:
            raise ValueError("logit_noise and feature_noise must be >= 0.")
        if not 0.0 <= self.approach_noise_deg < GATE_OUT_ANGLE_DEG:
            raise ValueError(
                f"approach_noise_deg must be in [0, {GATE_OUT_ANGLE_DEG}), "
                f"got {self.approach_noise_deg}."
            )
        if self.n_train < 0 or self.n_test < 0:
            raise ValueError("n_train and n_test must be >= 0.")

    @property
    def score_bins(self) -> ValueBins:
        return ValueBins(0.0, 1.0, self.value_bins)

    @property
    def width_bins(self) -> ValueBins:
        return ValueBins(0.0, self.max_width, self.value_bins)


@dataclass(frozen=True)
class GraspCorpus:
    candidates: GraspCandidateBatch
    operations: OperationBatch
    grasps: tuple[DecoupledGrasp, ...]

    def to_dict(self) -> dict:
        c, o = self.candidates, self.operations
        return {
            "shape": {
                "candidates": c.size,
                "views": c.num_views,
                "distance_bins": o.num_distance_bins,
                "rotation_classes": o.rotation_logits.shape[2],
            },
            "candidates": {
                "graspable_logits": c.graspable_logits.tolist(),
                "graspable_truth": c.graspable_truth.tolist(),
                "view_score_logits": c.view_score_logits.tolist(),
                "view_score_truth": c.view_score_truth.tolist(),
                "view_score_mask": c.view_score_mask.tolist(),
                "pred_approach": c.pred_approach.tolist(),
                "true_approach": c.true_approach.tolist(),
                "score_bins": c.score_bins.to_dict(),
            },
            "operations": {
                "rotation_logits": o.rotation_logits.tolist(),
                "score_logits": o.score_logits.tolist(),
                "width_logits": o.width_logits.tolist(),
                "rotation_truth": o.rotation_truth.tolist(),
                "score_truth": o.score_truth.tolist(),
                "width_truth": o.width_truth.tolist(),
                "truth_mask": o.truth_mask.tolist(),
                "score_bins": o.score_bins.to_dict(),
                "width_bins": o.width_bins.to_dict(),
            },
            "grasps": [grasp.to_dict() for grasp in self.grasps],
        }

    @classmethod
    def from_dict(cls, record: dict) -> "GraspCorpus":
        c, o = record["candidates"], record["operations"]
        candidates = GraspCandidateBatch(
            graspable_logits=np.asarray(c["graspable_logits"]),
            graspable_truth=np.asarray(c["graspable_truth"]),
            view_score_logits=np.asarray(c["view_score_logits"]),
            view_score_truth=np.asarray(c["view_score_truth"]),
            view_score_mask=np.asarray(c["view_score_mask"], dtype=bool),
            pred_approach=np.asarray(c["pred_approach"]),
            true_approach=np.asarray(c["true_approach"]),
            score_bins=ValueBins(**c["score_bins"]),
        )
        operations = OperationBatch(
            rotation_logits=np.asarray(o["rotation_logits"]),
            score_logits=np.asarray(o["score_logits"]),
            width_logits=np.asarray(o["width_logits"]),
            rotation_truth=np.asarray(o["rotation_truth"]),
            score_truth=np.asarray(o["score_truth"]),
            width_truth=np.asarray(o["width_truth"]),
            truth_mask=np.asarray(o["truth_mask"], dtype=bool),
            score_bins=ValueBins(**o["score_bins"]),
            width_bins=ValueBins(**o["width_bins"]),
        )
        grasps = tuple(DecoupledGrasp.from_dict(grasp) for grasp in record["grasps"])
        return cls(candidates=candidates, operations=operations, grasps=grasps)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "GraspCorpus":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def random_unit_vectors(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    vectors = rng.normal(size=shape + (3,))
    return vectors / np.linalg.norm(vectors, axis=-1, keepdims=True)


def tilt(vectors: np.ndarray, angle_deg: float, rng: np.random.Generator) -> np.ndarray:
    """Rotate each unit vector by ``angle_deg`` towards a random perpendicular direction."""
    helpers = random_unit_vectors(rng, vectors.shape[:-1])
    perpendicular = helpers - np.sum(helpers * vectors, axis=-1, keepdims=True) * vectors
    perpendicular /= np.linalg.norm(perpendicular, axis=-1, keepdims=True)
    angle = math.radians(angle_deg)
    tilted = math.cos(angle) * vectors + math.sin(angle) * perpendicular
    return tilted / np.linalg.norm(tilted, axis=-1, keepdims=True)


def peaked_logits(
    classes: np.ndarray, count: int, noise: float, rng: np.random.Generator
) -> np.ndarray:
    """
    Logits of ``+PEAK_MARGIN / 2`` at each class and ``-PEAK_MARGIN / 2`` elsewhere, plus noise.

    Both the softmax and the per-class sigmoid of these logits are close to one-hot.
    """
    logits = np.full(classes.shape + (count,), -0.5 * PEAK_MARGIN)
    np.put_along_axis(logits, classes[..., None], 0.5 * PEAK_MARGIN, axis=-1)
    return logits + noise * rng.normal(size=logits.shape)


def _truth_grasp(
    approach: np.ndarray, rng: np.random.Generator, params: GraspSyntheticParams
) -> DecoupledGrasp:
    in_plane = rng.uniform(-math.pi, math.pi)
    # the stored angle is the one recovered from the coupled rotation
    _, recovered = decouple_rotation(compose_rotation(approach, in_plane))
    return DecoupledGrasp(
        approach=approach,
        depth=float(rng.uniform(0.0, 0.04)),
        in_plane_rotation=recovered,
        translation=rng.uniform(-0.5, 0.5, size=3),
        width=float(rng.uniform(0.0, params.max_width)),
    )


def gen_grasp_synthetic(params: GraspSyntheticParams, seed: int) -> GraspCorpus:
    """
    Seeded grasp-head batches with predictions derived from ground truth.

    Every truth sits at a bin centre and every prediction peaks at its truth
    bin, so with zero noise the supervised composite losses are close to 0.
    Candidate 0 is always graspable; its view 0 passes the approach-angle gate
    with a flat score distribution and its view 1 is tilted by 20 degrees, so
    the approach-angle gate rejects it. Every score truth is present in the
    corpus; the confidence gate only sees view 0 once :func:`mask_view_scores`
    removes its truth, and then rejects it.
    """
    rng = np.random.default_rng(seed)
    n, v, d = params.num_candidates, params.num_views, params.num_distance_bins
    score_bins, width_bins = params.score_bins, params.width_bins
    rot_bins = rotation_bins(params.rotation_classes)

    graspable_truth = rng.integers(0, 2, size=n)
    graspable_truth[0] = 1
    graspable_logits = peaked_logits(graspable_truth, 2, params.logit_noise, rng)

    true_approach = random_unit_vectors(rng, (n, v))
    pred_approach = tilt(true_approach, params.approach_noise_deg, rng)
    pred_approach[0, 0] = true_approach[0, 0]
    pred_approach[0, 1] = tilt(true_approach[0:1, 1], GATE_OUT_ANGLE_DEG, rng)[0]

    view_classes = rng.integers(0, params.value_bins, size=(n, v))
    view_score_truth = score_bins.centers[view_classes]
    view_score_logits = peaked_logits(view_classes, params.value_bins, params.logit_noise, rng)
    view_score_logits[0, 0] = 0.0
    view_score_truth[0, 0] = 0.5 * (score_bins.low + score_bins.high)

    candidates = GraspCandidateBatch(
        graspable_logits=graspable_logits,
        graspable_truth=graspable_truth,
        view_score_logits=view_score_logits,
        view_score_truth=view_score_truth,
        view_score_mask=np.ones((n, v), dtype=bool),
        pred_approach=pred_approach,
        true_approach=true_approach,
        score_bins=score_bins,
    )

    grasps = tuple(
        _truth_grasp(true_approach[i, 0], rng, params) for i in range(n) for _ in range(d)
    )
    in_plane = np.array([grasp.in_plane_rotation for grasp in grasps]).reshape(n, d)
    rotation_truth = rot_bins.index(in_plane)
    width_classes = width_bins.index(np.array([grasp.width for grasp in grasps]).reshape(n, d))
    score_classes = rng.integers(0, params.value_bins, size=(n, d))
    score_logits = peaked_logits(score_classes, params.value_bins, params.logit_noise, rng)
    score_truth = score_bins.centers[score_classes]
    score_logits[0, 0] = 0.0
    score_truth[0, 0] = 0.5 * (score_bins.low + score_bins.high)

    operations = OperationBatch(
        rotation_logits=peaked_logits(
            rotation_truth, params.rotation_classes, params.logit_noise, rng
        ),
        score_logits=score_logits,
        width_logits=peaked_logits(width_classes, params.value_bins, params.logit_noise, rng),
        rotation_truth=rotation_truth,
        score_truth=score_truth,
        width_truth=width_bins.centers[width_classes],
        truth_mask=np.ones((n, d), dtype=bool),
        score_bins=score_bins,
        width_bins=width_bins,
    )
    return GraspCorpus(candidates=candidates, operations=operations, grasps=grasps)


def mask_view_scores(batch: GraspCandidateBatch, present) -> GraspCandidateBatch:
    """Copy of ``batch`` whose view score truths are present only where ``present`` is True."""
    return replace(batch, view_score_mask=np.asarray(present, dtype=bool) & batch.view_score_mask)


def mask_operations(batch: OperationBatch, present) -> OperationBatch:
    """Copy of ``batch`` whose truth records are present only where ``present`` is True."""
    return replace(batch, truth_mask=np.asarray(present, dtype=bool) & batch.truth_mask)


def rotation_features(
    in_plane: np.ndarray, approach: np.ndarray, noise: float, rng: np.random.Generator
) -> np.ndarray:
    """``[cos r, sin r, v_x, v_y, v_z]`` plus Gaussian noise."""
    features = np.column_stack([np.cos(in_plane), np.sin(in_plane), approach])
    return features + noise * rng.normal(size=features.shape)


def relabel_rotations(values: np.ndarray, rotation_classes: int) -> np.ndarray:
    """Rotation class of the in-plane angle in column 0 of ``values``."""
    return rotation_bins(rotation_classes).index(np.asarray(values)[:, 0])


def _rotation_dataset(
    n: int, params: GraspSyntheticParams, rng: np.random.Generator
) -> Dataset:
    approach = random_unit_vectors(rng, (n,))
    in_plane = rng.uniform(-math.pi, math.pi, size=n)
    width = rng.uniform(0.0, params.max_width, size=n)
    values = np.column_stack([in_plane, width])
    return Dataset(
        features=rotation_features(in_plane, approach, params.feature_noise, rng),
        labels=relabel_rotations(values, params.rotation_classes),
        num_classes=params.rotation_classes,
        values=values,
    )


def gen_grasp_dataset(params: GraspSyntheticParams, seed: int) -> DataSplit:
    """
    In-plane rotation classification data.

    Features are derived from the clean grasp; ``values`` keeps the
    continuous rotation and width so noise can be injected before binning.
    """
    rng = np.random.default_rng(seed)
    train = _rotation_dataset(params.n_train, params, rng)
    test = _rotation_dataset(params.n_test, params, rng)
    return DataSplit(train=train, test=test)
