"""Central finite-difference gradients for checking analytic backpropagation."""

from typing import Callable

import numpy as np

DEFAULT_STEP = 1e-5


def numerical_gradient(
    fn: Callable[[np.ndarray], float], x, step: float = DEFAULT_STEP
) -> np.ndarray:
    """
    Central differences ``(f(x + h e_i) - f(x - h e_i)) / 2h`` for every entry of ``x``.

    ``fn`` receives an array of the shape of ``x`` and must not keep a reference to it.
    """
    point = np.array(x, dtype=np.float64)
    grad = np.zeros_like(point)
    flat_point = point.reshape(-1)
    flat_grad = grad.reshape(-1)
    for i in range(flat_point.size):
        original = flat_point[i]
        flat_point[i] = original + step
        upper = fn(point.copy())
        flat_point[i] = original - step
        lower = fn(point.copy())
        flat_point[i] = original
        flat_grad[i] = (upper - lower) / (2.0 * step)
    return grad


def gradient_error(analytic, numeric, atol: float = 1e-8) -> float:
    """Largest ``|a - n| / (atol + |n|)`` over all entries."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.shape != n.shape:
        raise ValueError(f"Gradient shapes differ: {a.shape} vs {n.shape}.")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - n) / (atol + np.abs(n))))


def check_gradient(
    fn: Callable[[np.ndarray], float],
    x,
    analytic,
    rtol: float = 1e-5,
    atol: float = 1e-8,
    step: float = DEFAULT_STEP,
) -> None:
    """
    Assert that ``analytic`` matches the central-difference gradient of ``fn`` at ``x``.

    Raises:
        AssertionError: If any entry differs by more than ``atol + rtol * |numeric|``.
    """
    numeric = numerical_gradient(fn, x, step)
    np.testing.assert_allclose(analytic, numeric, rtol=rtol, atol=atol)
