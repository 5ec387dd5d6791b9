import math

import numpy as np
import pytest

from robust_grasp_loss.generation.grasp_synthetic import random_unit_vectors
from robust_grasp_loss.grasp import (
    approach_angle_deg,
    compose_rotation,
    decouple_rotation,
    validate_rotation,
)

ROUND_TRIPS = 1000


@pytest.mark.validation_category("geometry")
@pytest.mark.validation_criterion("compose/decouple round trip")
def test_compose_decouple_round_trip(request):
    """
    1000 seeded random (approach, in-plane rotation) pairs survive
    compose -> decouple -> compose with every rotation entry within 1e-9.
    Every composed matrix is a proper rotation at 1e-9.
    """
    rng = np.random.default_rng(2024)
    approaches = random_unit_vectors(rng, (ROUND_TRIPS,))
    angles = rng.uniform(-math.pi, math.pi, size=ROUND_TRIPS)

    worst = 0.0
    for approach, angle in zip(approaches, angles):
        rotation = compose_rotation(approach, angle)
        assert validate_rotation(rotation)
        assert abs(np.linalg.det(rotation) - 1.0) <= 1e-9
        np.testing.assert_allclose(rotation.T @ rotation, np.eye(3), rtol=0, atol=1e-9)
        np.testing.assert_allclose(rotation[:, 0], approach, rtol=0, atol=1e-12)

        recovered_approach, recovered_angle = decouple_rotation(rotation)
        assert -math.pi <= recovered_angle < math.pi
        again = compose_rotation(recovered_approach, recovered_angle)
        worst = max(worst, float(np.max(np.abs(again - rotation))))

    request.node.validation_summary = f"max rotation-entry error {worst:.3e}"
    assert worst < 1e-9


@pytest.mark.validation_category("geometry")
@pytest.mark.validation_criterion("round trip at the poles")
@pytest.mark.parametrize("approach", [(1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 0.0, 1.0)])
@pytest.mark.parametrize("angle", [-math.pi, -1.0, 0.0, 2.5])
def test_round_trip_for_axis_aligned_approaches(approach, angle):
    """Axis-aligned and antipodal approach vectors also recover the in-plane angle."""
    rotation = compose_rotation(approach, angle)
    recovered_approach, recovered_angle = decouple_rotation(rotation)
    np.testing.assert_allclose(recovered_approach, approach, rtol=0, atol=1e-12)
    assert abs(math.remainder(recovered_angle - angle, 2.0 * math.pi)) <= 1e-9


@pytest.mark.validation_category("geometry")
@pytest.mark.validation_criterion("approach-angle gate boundary")
def test_approach_angle_reproduces_gate_boundary():
    """approach_angle_deg of e_x and e_x tilted by 5 degrees is 5 within 1e-9."""
    tilted = (math.cos(math.radians(5.0)), math.sin(math.radians(5.0)), 0.0)
    assert abs(approach_angle_deg((1.0, 0.0, 0.0), tilted) - 5.0) <= 1e-9

    rng = np.random.default_rng(5)
    axes = random_unit_vectors(rng, (200,))
    helpers = random_unit_vectors(rng, (200,))
    perpendicular = np.cross(axes, helpers)
    perpendicular /= np.linalg.norm(perpendicular, axis=-1, keepdims=True)
    rotated = math.cos(math.radians(5.0)) * axes + math.sin(math.radians(5.0)) * perpendicular
    rotated /= np.linalg.norm(rotated, axis=-1, keepdims=True)
    np.testing.assert_allclose(approach_angle_deg(axes, rotated), 5.0, rtol=0, atol=1e-9)


@pytest.mark.validation_category("geometry")
@pytest.mark.validation_criterion("approach angle is a metric")
def test_approach_angle_is_symmetric_and_obeys_triangle_inequality(request):
    """
    On 100 seeded random triples of unit vectors the approach angle is
    symmetric in its arguments and satisfies the triangle inequality.
    """
    rng = np.random.default_rng(11)
    a, b, c = (random_unit_vectors(rng, (100,)) for _ in range(3))

    np.testing.assert_array_equal(approach_angle_deg(a, b), approach_angle_deg(b, a))
    slack = approach_angle_deg(a, b) + approach_angle_deg(b, c) - approach_angle_deg(a, c)
    request.node.validation_summary = f"min triangle slack {float(np.min(slack)):.3e} deg"
    assert np.all(slack >= -1e-9)
