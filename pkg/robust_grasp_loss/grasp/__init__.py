# __init__.py

from .representation import (
    DecoupledGrasp,
    Grasp,
    approach_angle_deg,
    compose_rotation,
    couple_grasp,
    decouple_grasp,
    decouple_rotation,
    validate_rotation,
)

__all__ = [
    "DecoupledGrasp",
    "Grasp",
    "approach_angle_deg",
    "compose_rotation",
    "couple_grasp",
    "decouple_grasp",
    "decouple_rotation",
    "validate_rotation",
]
