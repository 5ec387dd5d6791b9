"""
Grasp pose representation.

A grasp is either the coupled form ``[R t w]`` (rotation matrix, translation,
width) or the decoupled form ``[v d r t w]`` (approach vector, depth, in-plane
rotation, translation, width).

Frame convention: the gripper approaches along its local x axis, so column 0
of ``R`` is the approach vector ``v``. ``compose_rotation(v, r)`` is
``align(v) @ rot_x(r)``, where ``align(v)`` is the shortest-arc rotation taking
``e_x`` to ``v``. For ``v = -e_x`` the shortest arc is not unique and
``align(v)`` is the half turn about ``e_z``, ``diag(-1, -1, 1)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from robust_grasp_loss.losses.prob_core import InvalidInputError

APPROACH_AXIS = np.array([1.0, 0.0, 0.0])
ANTIPODAL_ALIGNMENT = np.diag([-1.0, -1.0, 1.0])
ROTATION_TOLERANCE = 1e-9
UNIT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Grasp:
    rotation: np.ndarray
    translation: np.ndarray
    width: float

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=np.float64)
        if rotation.shape != (3, 3) or not validate_rotation(rotation):
            raise InvalidInputError("Grasp rotation must be a proper 3x3 rotation.")
        if self.width < 0.0:
            raise InvalidInputError(f"Grasp width must be >= 0, got {self.width}.")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(
            self, "translation", np.asarray(self.translation, dtype=np.float64)
        )

    def to_dict(self) -> dict:
        return {
            "rotation": [float(value) for value in self.rotation.ravel()],
            "translation": [float(value) for value in self.translation],
            "width": float(self.width),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "Grasp":
        return cls(
            rotation=np.asarray(record["rotation"], dtype=np.float64).reshape(3, 3),
            translation=np.asarray(record["translation"], dtype=np.float64),
            width=float(record["width"]),
        )


@dataclass(frozen=True)
class DecoupledGrasp:
    """
    Decoupled grasp ``[v d r t w]``.

    ``depth`` is a signed distance between the grasp centre and the gripper
    centre along ``approach``; it is carried through conversions unchanged.
    ``in_plane_rotation`` is in radians within [-pi, pi).
    """

    approach: np.ndarray
    depth: float
    in_plane_rotation: float
    translation: np.ndarray
    width: float

    def __post_init__(self):
        approach = _require_unit(self.approach, "approach")
        if not -math.pi <= self.in_plane_rotation < math.pi:
            raise InvalidInputError(
                f"in_plane_rotation must be in [-pi, pi), got {self.in_plane_rotation}."
            )
        if self.width < 0.0:
            raise InvalidInputError(f"Grasp width must be >= 0, got {self.width}.")
        object.__setattr__(self, "approach", approach / np.linalg.norm(approach))
        object.__setattr__(
            self, "translation", np.asarray(self.translation, dtype=np.float64)
        )

    def to_dict(self) -> dict:
        return {
            "approach": [float(value) for value in self.approach],
            "depth": float(self.depth),
            "in_plane_rotation": float(self.in_plane_rotation),
            "translation": [float(value) for value in self.translation],
            "width": float(self.width),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "DecoupledGrasp":
        return cls(
            approach=np.asarray(record["approach"], dtype=np.float64),
            depth=float(record["depth"]),
            in_plane_rotation=float(record["in_plane_rotation"]),
            translation=np.asarray(record["translation"], dtype=np.float64),
            width=float(record["width"]),
        )


def _require_unit(vector, name: str) -> np.ndarray:
    values = np.asarray(vector, dtype=np.float64)
    if values.shape[-1] != 3:
        raise InvalidInputError(f"{name} must have 3 components, got {values.shape}.")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError(f"{name} must be finite.")
    norms = np.linalg.norm(values, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOLERANCE):
        raise InvalidInputError(f"{name} must be a unit vector (norm off by > 1e-6).")
    return values


def validate_rotation(rotation) -> bool:
    """True iff ``det(R) = 1`` and ``R^T R = I`` within 1e-9."""
    matrix = np.asarray(rotation, dtype=np.float64)
    if matrix.shape != (3, 3) or not np.all(np.isfinite(matrix)):
        return False
    if abs(np.linalg.det(matrix) - 1.0) > ROTATION_TOLERANCE:
        return False
    return bool(np.all(np.abs(matrix.T @ matrix - np.eye(3)) <= ROTATION_TOLERANCE))


def _skew(vector: np.ndarray) -> np.ndarray:
    x, y, z = vector
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def _alignment(approach: np.ndarray) -> np.ndarray:
    """Shortest-arc rotation taking ``APPROACH_AXIS`` to ``approach``."""
    axis = np.cross(APPROACH_AXIS, approach)
    sin_squared = float(axis @ axis)
    cos_angle = float(APPROACH_AXIS @ approach)
    if sin_squared == 0.0:
        return np.eye(3) if cos_angle > 0.0 else ANTIPODAL_ALIGNMENT.copy()
    # 1 / (1 + cos) written as (1 - cos) / sin^2 when cos < 0 avoids cancellation
    if cos_angle >= 0.0:
        factor = 1.0 / (1.0 + cos_angle)
    else:
        factor = (1.0 - cos_angle) / sin_squared
    skew = _skew(axis)
    return np.eye(3) + skew + factor * (skew @ skew)


def _rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def compose_rotation(approach, in_plane: float) -> np.ndarray:
    """
    Rotation whose column 0 is ``approach``, rotated by ``in_plane`` about it.

    Raises:
        InvalidInputError: If ``approach`` is not a unit vector.
    """
    v = _require_unit(approach, "approach")
    v = v / np.linalg.norm(v)
    return _alignment(v) @ _rot_x(in_plane)


def _wrap_angle(angle: float) -> float:
    wrapped = math.atan2(math.sin(angle), math.cos(angle))
    return -math.pi if wrapped >= math.pi else wrapped


def decouple_rotation(rotation) -> tuple[np.ndarray, float]:
    """
    Split a rotation into its approach vector and in-plane rotation.

    Inverse of :func:`compose_rotation`; for ``approach = -e_x`` the in-plane
    angle is measured relative to the documented antipodal alignment.

    Raises:
        InvalidInputError: If ``rotation`` is not a proper rotation.
    """
    matrix = np.asarray(rotation, dtype=np.float64)
    if not validate_rotation(matrix):
        raise InvalidInputError("decouple_rotation needs a proper rotation matrix.")
    approach = matrix[:, 0] / np.linalg.norm(matrix[:, 0])
    residual = _alignment(approach).T @ matrix
    in_plane = _wrap_angle(math.atan2(residual[2, 1], residual[1, 1]))
    return approach, in_plane


def approach_angle_deg(v1, v2):
    """
    Angle between approach vectors in degrees, in [0, 180].

    Accepts single vectors or stacked arrays of shape ``(..., 3)``.
    """
    a = _require_unit(v1, "v1")
    b = _require_unit(v2, "v2")
    cosine = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    angles = np.degrees(np.arccos(cosine))
    if np.ndim(angles) == 0:
        return float(angles)
    return angles


def decouple_grasp(grasp: Grasp, depth: float = 0.0) -> DecoupledGrasp:
    approach, in_plane = decouple_rotation(grasp.rotation)
    return DecoupledGrasp(
        approach=approach,
        depth=depth,
        in_plane_rotation=in_plane,
        translation=grasp.translation.copy(),
        width=grasp.width,
    )


def couple_grasp(grasp: DecoupledGrasp) -> Grasp:
    return Grasp(
        rotation=compose_rotation(grasp.approach, grasp.in_plane_rotation),
        translation=grasp.translation.copy(),
        width=grasp.width,
    )
