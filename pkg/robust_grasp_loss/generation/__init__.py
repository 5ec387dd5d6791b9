# __init__.py

from .blobs import BlobParams, DataSplit, gen_blobs
from .grasp_synthetic import (
    GraspCorpus,
    GraspSyntheticParams,
    gen_grasp_dataset,
    gen_grasp_synthetic,
    mask_operations,
    mask_view_scores,
    relabel_rotations,
)

__all__ = [
    "BlobParams",
    "DataSplit",
    "GraspCorpus",
    "GraspSyntheticParams",
    "gen_blobs",
    "gen_grasp_dataset",
    "gen_grasp_synthetic",
    "mask_operations",
    "mask_view_scores",
    "relabel_rotations",
]
