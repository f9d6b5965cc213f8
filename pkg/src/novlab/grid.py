"""Uniform grids, trapezoid quadrature, prefix integrals, finite differences.

Every field in this package lives on a uniform grid over a truncated
line.  Quadrature is the trapezoid rule, which is consistent with the
piecewise linear reading of sampled fields and is spectrally accurate
for smooth integrands that decay at the window ends.  Derivatives are
centred finite differences of fourth order in the interior; near the
boundary the same-width stencil slides one-sided, which keeps every row
exact on polynomials up to the stencil degree.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, ContractError

__all__ = [
    "Grid",
    "make_grid",
    "integrate",
    "prefix_integral",
    "fd_derivative",
    "fd_truncation_orders",
]


@dataclass(frozen=True)
class Grid:
    xi_min: float
    xi_max: float
    n: int
    dx: float

    @property
    def nodes(self) -> np.ndarray:
        return self.xi_min + self.dx * np.arange(self.n)


def make_grid(xi_min: float, xi_max: float, n: int) -> Grid:
    if not (np.isfinite(xi_min) and np.isfinite(xi_max)):
        raise ConfigError("grid endpoints must be finite")
    if not xi_max > xi_min:
        raise ConfigError(f"need xi_max > xi_min, got [{xi_min}, {xi_max}]")
    n = int(n)
    if n < 3:
        raise ConfigError(f"need at least 3 nodes, got {n}")
    dx = (xi_max - xi_min) / (n - 1)
    return Grid(float(xi_min), float(xi_max), n, dx)


def _as_samples(samples, grid: Grid) -> np.ndarray:
    arr = np.asarray(samples, dtype=float)
    if arr.shape != (grid.n,):
        raise ContractError(f"expected {grid.n} samples, got shape {arr.shape}")
    return arr


def prefix_integral(samples, grid: Grid) -> np.ndarray:
    """Running trapezoid integral from xi_min; entry 0 is exactly 0."""
    arr = _as_samples(samples, grid)
    out = np.empty(grid.n)
    out[0] = 0.0
    cells = (0.5 * grid.dx) * (arr[:-1] + arr[1:])
    np.cumsum(cells, out=out[1:])
    return out


def integrate(samples, grid: Grid) -> float:
    # Defined as the last prefix entry so the two routes agree exactly,
    # same summation order and all.
    return float(prefix_integral(samples, grid)[-1])


@lru_cache(maxsize=None)
def _fornberg_weights(offsets: tuple[int, ...], order: int) -> np.ndarray:
    """Weights for the order-th derivative at offset 0, in units dx**-order.

    Classic recursion over incrementally added nodes; exact for
    polynomials of degree < len(offsets).
    """
    x = np.asarray(offsets, dtype=float)
    m = order
    npts = x.size
    c = np.zeros((npts, m + 1))
    c1 = 1.0
    c4 = x[0]
    c[0, 0] = 1.0
    for i in range(1, npts):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m].copy()


# Stencil half widths: 5 points for orders 1 and 2, 7 points for 3 and 4.
_HALF_WIDTH = {1: 2, 2: 2, 3: 3, 4: 3}


def fd_derivative(samples, grid: Grid, order: int) -> np.ndarray:
    if order not in _HALF_WIDTH:
        raise ContractError(f"derivative order must be 1..4, got {order}")
    w = _HALF_WIDTH[order]
    npts = 2 * w + 1
    if grid.n < 2 * order + 5 or grid.n < npts:
        raise ContractError(
            f"grid too small for order-{order} derivative: n={grid.n}")
    arr = _as_samples(samples, grid)
    out = np.empty(grid.n)
    centre = _fornberg_weights(tuple(range(-w, w + 1)), order)
    # correlate(arr, centre) at full stencils covers nodes w .. n-1-w
    out[w:grid.n - w] = np.correlate(arr, centre, mode="valid")
    for i in range(w):
        left = _fornberg_weights(tuple(range(-i, npts - i)), order)
        out[i] = left @ arr[:npts]
        right = _fornberg_weights(tuple(range(-(npts - 1 - i), i + 1)), order)
        out[grid.n - 1 - i] = right @ arr[grid.n - npts:]
    out /= grid.dx ** order
    return out


def fd_truncation_orders(grid: Grid, order: int) -> np.ndarray:
    """Formal accuracy order of each entry of fd_derivative's output.

    Centred stencils gain one order from symmetry when npts - order is
    odd; shifted boundary stencils do not.
    """
    if order not in _HALF_WIDTH:
        raise ContractError(f"derivative order must be 1..4, got {order}")
    w = _HALF_WIDTH[order]
    npts = 2 * w + 1
    side = npts - order
    centre = side if side % 2 == 0 else side + 1
    acc = np.full(grid.n, centre, dtype=int)
    acc[:w] = side
    acc[grid.n - w:] = side
    return acc
