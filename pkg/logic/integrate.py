"""Fixed-step RK4 for batches of autonomous ODE trajectories."""

from typing import Callable, Tuple

import numpy as np
from loguru import logger

DEFAULT_OVERFLOW_GUARD = 1e12

VectorField = Callable[[np.ndarray], np.ndarray]


def rk4_step(field: VectorField, states: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step for every row of ``states``."""
    k1 = field(states)
    k2 = field(states + 0.5 * h * k1)
    k3 = field(states + 0.5 * h * k2)
    k4 = field(states + h * k3)
    return states + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4(
    field: VectorField,
    initial: np.ndarray,
    h: float,
    steps: int,
    overflow_guard: float = DEFAULT_OVERFLOW_GUARD,
) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate rows of ``initial`` with RK4.

    Args:
        field: Vectorized right-hand side mapping (N, d) to (N, d)
        initial: Initial states, shape (N, d)
        h: Step size
        steps: Number of steps
        overflow_guard: Trajectories with a component beyond this magnitude stop

    Returns:
        Tuple of the trajectory array, shape (N, steps + 1, d), and a boolean
        array flagging truncated rows. Truncated rows hold NaN after the
        last accepted step.
    """
    if h <= 0:
        raise ValueError("Step size must be positive")
    if steps < 1:
        raise ValueError("At least one step is required")
    initial = np.atleast_2d(np.asarray(initial, dtype=float))
    rows, dimension = initial.shape
    nodes = np.full((rows, steps + 1, dimension), np.nan)
    nodes[:, 0] = initial
    active = np.all(np.isfinite(initial), axis=1) & np.all(np.abs(initial) <= overflow_guard, axis=1)
    truncated = ~active

    for step in range(steps):
        if not np.any(active):
            break
        # Inactive rows are not advanced; they keep NaN
        with np.errstate(over="ignore", invalid="ignore"):
            advanced = rk4_step(field, nodes[active, step], h)
        healthy = np.all(np.isfinite(advanced), axis=1) & np.all(np.abs(advanced) <= overflow_guard, axis=1)
        indices = np.flatnonzero(active)
        nodes[indices[healthy], step + 1] = advanced[healthy]
        if not np.all(healthy):
            lost = indices[~healthy]
            logger.warning("{} trajectories exceeded the overflow guard at step {}", len(lost), step + 1)
            truncated[lost] = True
            active[lost] = False
    return nodes, truncated
