"""Shared builders for the test suite.

Random states are always drawn inside the validity region so that
property tests exercise the contracts, not the guards.
"""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from novlab import builtin_datum, make_grid, pair_datum
from novlab.initial import TransformedState, transform_with_map

settings.register_profile(
    "numerics",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("numerics")


def bumps(rng: np.random.Generator, nodes: np.ndarray, count: int,
          amp: float) -> np.ndarray:
    """Random sum of gaussians, vanishing toward the grid ends."""
    out = np.zeros_like(nodes)
    span = nodes[-1] - nodes[0]
    for _ in range(count):
        c = rng.uniform(nodes[0] + 0.25 * span, nodes[-1] - 0.25 * span)
        w = rng.uniform(0.3, 1.5)
        a = rng.uniform(-amp, amp)
        out += a * np.exp(-(((nodes - c) / w) ** 2))
    return out


def random_state(rng: np.random.Generator, grid) -> TransformedState:
    """State with angles well inside (-3pi/2, 3pi/2) and q near 1."""
    nodes = grid.nodes
    return TransformedState(
        t=0.0,
        U=bumps(rng, nodes, 3, 0.8),
        V=bumps(rng, nodes, 3, 0.8),
        W=bumps(rng, nodes, 3, 1.2),
        Z=bumps(rng, nodes, 3, 1.2),
        q=1.0 + 0.3 * bumps(rng, nodes, 2, 1.0),
        grid=grid,
    )


def two_bump_pair():
    u = builtin_datum("gaussian_bump", {"a": 0.25, "center": -1.0, "width": 1.4})
    v = builtin_datum("gaussian_bump", {"a": 0.2, "center": 1.0, "width": 1.6})
    return pair_datum(u, v)


@pytest.fixture(scope="session")
def smooth_grid():
    return make_grid(-16.0, 16.0, 1024)


@pytest.fixture(scope="session")
def smooth_pair_state(smooth_grid):
    return transform_with_map(two_bump_pair(), smooth_grid)
