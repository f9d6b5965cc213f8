"""Initial data families and the direct transform to characteristic variables.

An EulerDatum is a pair of closed-form profiles (u0, v0) with exact
derivatives.  The transform solves, for every grid node xi, the scalar
equation F(y0) = xi where F is the cumulative integral of the density
D0(x) = (1 + u0'(x)^2)(1 + v0'(x)^2), then evaluates the angle and
stretch variables along y0.  With an absolutely continuous initial
energy measure the density never vanishes, so F is strictly increasing
and the inversion is globally well posed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericalAbort
from .grid import Grid

__all__ = [
    "EulerDatum",
    "TransformedState",
    "builtin_datum",
    "pair_datum",
    "invert_y0",
    "direct_transform",
    "transform_with_map",
]

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 60


@dataclass(frozen=True)
class EulerDatum:
    """Closed-form initial profiles with exact first derivatives.

    kinks lists the x-locations where a profile is continuous but not
    differentiable (the peakon crest); quadrature cells are split there.
    """

    u0: Callable[[np.ndarray], np.ndarray]
    v0: Callable[[np.ndarray], np.ndarray]
    du0: Callable[[np.ndarray], np.ndarray]
    dv0: Callable[[np.ndarray], np.ndarray]
    kinks: tuple[float, ...] = ()


@dataclass(frozen=True)
class TransformedState:
    """State of the characteristic-coordinate system at one time.

    W and Z are kept unwrapped (no modular reduction); reconstruction
    formulas are periodic-safe so only level crossings of +-pi carry
    meaning, and those must stay visible.
    """

    t: float
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    Z: np.ndarray
    q: np.ndarray
    grid: Grid

    def with_fields(self, **kw) -> "TransformedState":
        return replace(self, **kw)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _gaussian(a: float, center: float, width: float) -> EulerDatum:
    def f(x):
        x = np.asarray(x, dtype=float)
        return a * np.exp(-(((x - center) / width) ** 2))

    def df(x):
        x = np.asarray(x, dtype=float)
        return f(x) * (-2.0 * (x - center) / width**2)

    return EulerDatum(u0=f, v0=f, du0=df, dv0=df)


def _sech(a: float, center: float, width: float) -> EulerDatum:
    def f(x):
        x = np.asarray(x, dtype=float)
        return a / np.cosh((x - center) / width)

    def df(x):
        x = np.asarray(x, dtype=float)
        s = (x - center) / width
        return -(a / width) * np.tanh(s) / np.cosh(s)

    return EulerDatum(u0=f, v0=f, du0=df, dv0=df)


def _peakon(c: float, center: float) -> EulerDatum:
    amp = np.sqrt(c)

    def f(x):
        x = np.asarray(x, dtype=float)
        return amp * np.exp(-np.abs(x - center))

    def df(x):
        x = np.asarray(x, dtype=float)
        return -np.sign(x - center) * f(x)

    return EulerDatum(u0=f, v0=f, du0=df, dv0=df, kinks=(center,))


def _steep_front(a: float, center: float, width: float) -> EulerDatum:
    # Odd-shaped profile with a strong negative slope at the center;
    # drives the gradient toward blow-up quickly.
    def f(x):
        x = np.asarray(x, dtype=float)
        s = x - center
        return -a * s * np.exp(-((s / width) ** 2))

    def df(x):
        x = np.asarray(x, dtype=float)
        s = x - center
        return -a * (1.0 - 2.0 * s**2 / width**2) * np.exp(-((s / width) ** 2))

    return EulerDatum(u0=f, v0=f, du0=df, dv0=df)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def builtin_datum(family: str, params: dict | None = None) -> EulerDatum:
    """Construct a named closed-form datum.  Unknown keys are rejected.

    Families produce u0 = v0; use pair_datum or mirrored_of for
    asymmetric pairs.
    """
    params = dict(params or {})

    def pop_float(key, default):
        val = params.pop(key, default)
        try:
            val = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{family}: parameter {key!r} must be a real number")
        if not np.isfinite(val):
            raise ConfigError(f"{family}: parameter {key!r} must be finite")
        return val

    if family == "gaussian_bump":
        a = pop_float("a", 1.0)
        center = pop_float("center", 0.0)
        width = pop_float("width", 1.0)
        _require(width > 0, f"gaussian_bump: width must be > 0, got {width}")
        datum = _gaussian(a, center, width)
    elif family == "sech_bump":
        a = pop_float("a", 1.0)
        center = pop_float("center", 0.0)
        width = pop_float("width", 1.0)
        _require(width > 0, f"sech_bump: width must be > 0, got {width}")
        datum = _sech(a, center, width)
    elif family == "peakon":
        c = pop_float("c", 1.0)
        center = pop_float("center", 0.0)
        _require(c > 0, f"peakon: speed c must be > 0, got {c}")
        datum = _peakon(c, center)
    elif family == "steep_front":
        a = pop_float("a", 2.0)
        center = pop_float("center", 0.0)
        width = pop_float("width", 1.0)
        _require(width > 0, f"steep_front: width must be > 0, got {width}")
        datum = _steep_front(a, center, width)
    elif family == "mirrored_of":
        base_family = params.pop("base", None)
        _require(base_family is not None, "mirrored_of: missing base family")
        _require(base_family != "mirrored_of", "mirrored_of: cannot nest")
        base = builtin_datum(base_family, params)
        params = {}
        datum = EulerDatum(
            u0=base.u0,
            v0=lambda x: base.u0(-np.asarray(x, dtype=float)),
            du0=base.du0,
            dv0=lambda x: -base.du0(-np.asarray(x, dtype=float)),
            kinks=tuple(sorted(set(base.kinks) | {-k for k in base.kinks})),
        )
    else:
        raise ConfigError(f"unknown datum family {family!r}")

    if params:
        raise ConfigError(f"{family}: unknown parameters {sorted(params)}")
    return datum


def pair_datum(u_datum: EulerDatum, v_datum: EulerDatum) -> EulerDatum:
    """Combine the u-profile of one datum with the v-profile of another."""
    return EulerDatum(
        u0=u_datum.u0,
        v0=v_datum.v0,
        du0=u_datum.du0,
        dv0=v_datum.dv0,
        kinks=tuple(sorted(set(u_datum.kinks) | set(v_datum.kinks))),
    )


def zero_datum() -> EulerDatum:
    return EulerDatum(u0=_zero, v0=_zero, du0=_zero, dv0=_zero)


# 10-point Gauss-Legendre on [-1, 1]; exact for polynomials to degree 19,
# which makes per-cell errors negligible against NEWTON_TOL for smooth D0.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


class _CumulativeDensity:
    """F(x) = integral of D0 from 0 to x, tabulated on a refined grid.

    The table cells are split at datum kinks so every Gauss panel sees a
    smooth integrand.  Point evaluations add a partial-cell panel to the
    tabulated prefix.
    """

    def __init__(self, datum: EulerDatum, lo: float, hi: float, h: float):
        lo = min(lo, 0.0)
        hi = max(hi, 0.0)
        n_cells = max(int(np.ceil((hi - lo) / h)), 8)
        cuts = np.linspace(lo, hi, n_cells + 1)
        interior = [k for k in datum.kinks if lo < k < hi]
        self.x = np.unique(np.concatenate([cuts, [0.0], interior]))
        self.datum = datum
        cell_ints = self._panel(self.x[:-1], self.x[1:])
        cum = np.concatenate([[0.0], np.cumsum(cell_ints)])
        i0 = int(np.searchsorted(self.x, 0.0))
        self.cum = cum - cum[i0]

    def density(self, x):
        du = self.datum.du0(x)
        dv = self.datum.dv0(x)
        return (1.0 + du * du) * (1.0 + dv * dv)

    def _panel(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        mid = 0.5 * (a + b)[..., None]
        half = 0.5 * (b - a)[..., None]
        vals = self.density(mid + half * _GL_NODES)
        return (vals @ _GL_WEIGHTS) * half[..., 0]

    def value(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.x, x, side="right") - 1, 0, self.x.size - 2)
        base = self.x[idx]
        return self.cum[idx] + self._panel(base, x)


def _density_table(datum: EulerDatum, grid: Grid) -> _CumulativeDensity:
    return _CumulativeDensity(datum, grid.xi_min, grid.xi_max, 0.25 * grid.dx)


def invert_y0(datum: EulerDatum, grid: Grid) -> np.ndarray:
    """Solve F(y0) = xi at every grid node.

    Newton iteration with exact derivative D0, warm bracketing, and
    bisection whenever a Newton step leaves the bracket.  Since D0 >= 1,
    every root lies inside the grid window, which provides the initial
    bracket.
    """
    table = _density_table(datum, grid)
    xi = grid.nodes
    lo = np.full(grid.n, table.x[0])
    hi = np.full(grid.n, table.x[-1])
    x = np.clip(xi, lo, hi)
    resid = table.value(x) - xi
    dxold = hi - lo
    for _ in range(NEWTON_MAX_ITER):
        active = np.abs(resid) >= NEWTON_TOL
        if not active.any():
            break
        hi = np.where(active & (resid > 0), np.minimum(hi, x), hi)
        lo = np.where(active & (resid < 0), np.maximum(lo, x), lo)
        dens = table.density(x)
        newton = x - resid / dens
        # Accept Newton only while it stays bracketed and keeps at least
        # halving the step; otherwise bisect.  Plain in-bracket tests let
        # Newton ping-pong between the flanks of a density spike forever.
        ok = ((newton > lo) & (newton < hi)
              & (np.abs(2.0 * resid) <= np.abs(dxold * dens)))
        trial = np.where(ok, newton, 0.5 * (lo + hi))
        dxold = np.where(active, np.abs(trial - x), dxold)
        x = np.where(active, trial, x)
        resid = np.where(active, table.value(x) - xi, resid)
    worst = float(np.max(np.abs(resid)))
    if worst >= NEWTON_TOL:
        k = int(np.argmax(np.abs(resid)))
        raise NumericalAbort(
            f"invert_y0 did not converge: residual {worst:.3e} at node {k}",
            {"worst_residual": worst, "node": k, "xi": float(xi[k])},
        )
    if not np.all(np.diff(x) > 0):
        k = int(np.argmin(np.diff(x)))
        raise NumericalAbort(
            f"invert_y0 produced a non-increasing map near node {k}",
            {"node": k},
        )
    return x


def transform_with_map(datum: EulerDatum, grid: Grid) -> tuple[TransformedState, np.ndarray]:
    """Initial transformed state plus the characteristic map it sits on."""
    y0 = invert_y0(datum, grid)
    state = TransformedState(
        t=0.0,
        U=np.asarray(datum.u0(y0), dtype=float),
        V=np.asarray(datum.v0(y0), dtype=float),
        W=2.0 * np.arctan(np.asarray(datum.du0(y0), dtype=float)),
        Z=2.0 * np.arctan(np.asarray(datum.dv0(y0), dtype=float)),
        q=np.ones(grid.n),
        grid=grid,
    )
    return state, y0


def direct_transform(datum: EulerDatum, grid: Grid) -> TransformedState:
    state, _ = transform_with_map(datum, grid)
    return state
