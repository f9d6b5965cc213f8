"""One-shot property suite behind the validate subcommand.

Each check is a small self-contained experiment: oracle equivalences,
exact identities, round trips, and determinism.  Checks are pure
functions of (config, rng) so the suite is reproducible from the seed;
the broken-scan injection hook exists so the harness itself can be
shown to fail loudly.
"""

from __future__ import annotations

import io
import zlib
from dataclasses import dataclass

import numpy as np

from . import cliio
from .config import ScenarioConfig
from .errors import NovlabError
from .evolution import conserved, evolve, rhs
from .grid import Grid, fd_derivative, integrate, make_grid, prefix_integral
from .initial import builtin_datum, transform_with_map, TransformedState
from .metric import (TangentVector, distance_upper, tangent_norm,
                     tangent_norm_info, zero_tangent)
from .reconstruct import conserved_euler, euler_fields, measure_interval
from .sources import (assemble_sources, exp_convolve, exp_convolve_bruteforce,
                      kernel_accumulator)

__all__ = ["CheckResult", "run_suite"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _bumps(rng: np.random.Generator, grid: Grid, count: int, amp: float):
    xi = grid.nodes
    span = grid.xi_max - grid.xi_min
    out = np.zeros(grid.n)
    for _ in range(count):
        a = rng.uniform(-amp, amp)
        c = rng.uniform(grid.xi_min + 0.3 * span, grid.xi_max - 0.3 * span)
        w = rng.uniform(0.5, 2.0)
        out += a * np.exp(-(((xi - c) / w) ** 2))
    return out


def random_omega_state(rng: np.random.Generator, grid: Grid) -> TransformedState:
    """Smooth random state inside the validity region, decaying at the ends."""
    return TransformedState(
        t=0.0,
        U=_bumps(rng, grid, 3, 0.8),
        V=_bumps(rng, grid, 3, 0.8),
        W=_bumps(rng, grid, 3, 1.2),
        Z=_bumps(rng, grid, 3, 1.2),
        q=1.0 + _bumps(rng, grid, 2, 0.3),
        grid=grid,
    )


def _datum_from_cfg(cfg: ScenarioConfig):
    return cliio.datum_from_config(cfg)


def check_prefix_vs_integrate(cfg, rng, quick):
    grid = make_grid(-5.0, 5.0, 64 if quick else 512)
    worst = 0.0
    for _ in range(5):
        samples = rng.normal(size=grid.n)
        gap = abs(prefix_integral(samples, grid)[-1] - integrate(samples, grid))
        worst = max(worst, gap)
    return worst == 0.0, f"max |prefix[-1] - integrate| = {worst:.3g}"


def check_fd_polynomial(cfg, rng, quick):
    grid = make_grid(-2.0, 2.0, 64 if quick else 256)
    xi = grid.nodes
    eps = np.finfo(float).eps
    worst_ratio = 0.0
    for order, exact in ((1, 3 * xi**2), (2, 6 * xi), (3, np.full(grid.n, 6.0)),
                         (4, np.zeros(grid.n))):
        err = float(np.max(np.abs(fd_derivative(xi**3, grid, order) - exact)))
        # Cubics carry no truncation error, only roundoff amplified by
        # the stencil's dx**-order scaling.
        floor = eps * float(np.max(np.abs(xi**3))) / grid.dx**order
        worst_ratio = max(worst_ratio, err / floor)
    ok = worst_ratio < 1000.0
    return ok, f"worst cubic-poly FD error = {worst_ratio:.3g}x roundoff floor"


def _maybe_broken(even, odd, inject: bool):
    if inject:
        return even, odd + 1e-9
    return even, odd


def check_scan_vs_bruteforce(cfg, rng, quick, inject=False):
    n = 128 if quick else 512
    trials = 5 if quick else 20
    grid = make_grid(-10.0, 10.0, n)
    worst = 0.0
    for _ in range(trials):
        state = random_omega_state(rng, grid)
        acc = kernel_accumulator(state)
        p = _bumps(rng, grid, 3, 1.0)
        even, odd = _maybe_broken(*exp_convolve(p, acc, grid), inject)
        even_b, odd_b = exp_convolve_bruteforce(p, acc, grid)
        worst = max(worst, float(np.max(np.abs(even - even_b))),
                    float(np.max(np.abs(odd - odd_b))))
    ok = worst < 1e-12
    return ok, f"max scan-vs-bruteforce diff = {worst:.3g} over {trials} states"


def check_kernel_properties(cfg, rng, quick):
    grid = make_grid(-8.0, 8.0, 64 if quick else 256)
    state = random_omega_state(rng, grid)
    acc = kernel_accumulator(state)
    G = acc.G
    nondecreasing = bool(np.all(np.diff(G) >= 0.0))
    kernel = np.exp(-np.abs(G[:, None] - G[None, :]))
    diag_one = bool(np.all(np.diag(kernel) == 1.0))
    symmetric = bool(np.array_equal(kernel, kernel.T))
    in_range = bool(np.all((kernel > 0.0) & (kernel <= 1.0)))
    ok = nondecreasing and diag_one and symmetric and in_range
    return ok, (f"G nondecreasing={nondecreasing}, diag=1 {diag_one}, "
                f"symmetric={symmetric}, range={in_range}")


def check_swap_symmetry(cfg, rng, quick):
    grid = make_grid(-8.0, 8.0, 64 if quick else 256)
    state = random_omega_state(rng, grid)
    swapped = state.with_fields(U=state.V, V=state.U, W=state.Z, Z=state.W)
    src = assemble_sources(state)
    src_sw = assemble_sources(swapped)
    pairs = [(src.P1, src_sw.S1), (src.dxP1, src_sw.dxS1),
             (src.P2, src_sw.S2), (src.dxP2, src_sw.dxS2),
             (src.S1, src_sw.P1), (src.dxS1, src_sw.dxP1)]
    ok = all(np.array_equal(a, b) for a, b in pairs)
    return ok, "P<->S exchange under the variable swap is bitwise" if ok \
        else "swap symmetry broken"


def check_zero_state_rhs(cfg, rng, quick):
    grid = make_grid(-8.0, 8.0, 64 if quick else 256)
    zero = TransformedState(t=0.0, U=np.zeros(grid.n), V=np.zeros(grid.n),
                            W=np.zeros(grid.n), Z=np.zeros(grid.n),
                            q=np.ones(grid.n), grid=grid)
    d = rhs(zero)
    worst = max(float(np.max(np.abs(getattr(d, f)))) for f in "UVWZqy")
    return worst == 0.0, f"max |rhs(zero)| = {worst:.3g}"


def check_y0_round_trip(cfg, rng, quick):
    n = 64 if quick else 1024
    grid = make_grid(cfg.xi_min, cfg.xi_max, n)
    datum = _datum_from_cfg(cfg)
    from .initial import invert_y0, _density_table
    y0 = invert_y0(datum, grid)
    table = _density_table(datum, grid)
    resid = np.abs(table.value(y0) - grid.nodes)
    worst = float(np.max(resid))
    ok = worst < 1e-12 and bool(np.all(np.diff(y0) > 0))
    return ok, f"max |F(y0)-xi| = {worst:.3g} over {n} nodes, y0 increasing"


def check_transform_identity(cfg, rng, quick):
    n = 129 if quick else 1025
    grid = make_grid(cfg.xi_min, cfg.xi_max, n)
    datum = _datum_from_cfg(cfg)
    state, y0 = transform_with_map(datum, grid)
    cw = np.cos(0.5 * state.W) ** 2
    cz = np.cos(0.5 * state.Z) ** 2
    err = np.max(np.abs(fd_derivative(y0, grid, 1) - state.q * (cw * cz)))
    tol = 5.0 * grid.dx**2
    return float(err) < tol, f"max |fd(y0) - q cos2 cos2| = {float(err):.3g} vs {tol:.3g}"


def check_symmetric_evolution(cfg, rng, quick):
    grid = make_grid(-10.0, 10.0, 128 if quick else 512)
    datum = builtin_datum("gaussian_bump", {"a": 0.5, "width": 1.5})
    state, y0 = transform_with_map(datum, grid)
    traj = evolve(state, y0, 0.1, 0.01, record_every=5)
    worst_u = max(float(np.max(np.abs(s.U - s.V))) for s in traj.states)
    worst_w = max(float(np.max(np.abs(s.W - s.Z))) for s in traj.states)
    ok = worst_u == 0.0 and worst_w == 0.0
    return ok, f"max|U-V| = {worst_u:.3g}, max|W-Z| = {worst_w:.3g} (bitwise)"


def check_euler_round_trip(cfg, rng, quick):
    n = 129 if quick else 1025
    grid = make_grid(cfg.xi_min, cfg.xi_max, n)
    datum = _datum_from_cfg(cfg)
    state, y0 = transform_with_map(datum, grid)
    fld = euler_fields(state, y0)
    err = float(np.max(np.abs(fld.u - datum.u0(fld.x))))
    tol = 10.0 * grid.dx**2 + 1e-12
    return err < tol, f"max |u(graph) - u0| = {err:.3g} vs {tol:.3g}"


def check_measure_vs_eulerian(cfg, rng, quick):
    n = 513 if quick else 8193
    grid = make_grid(-12.0, 12.0, n)
    datum = builtin_datum("gaussian_bump", {"a": 0.3, "width": 1.5})
    state, y0 = transform_with_map(datum, grid)
    fld = euler_fields(state, y0)
    whole = measure_interval(state, y0, float(y0[0]), float(y0[-1]))
    f = fld.ux**2 + fld.vx**2 + fld.ux**2 * fld.vx**2
    eulerian = float(np.sum(0.5 * (f[:-1] + f[1:]) * np.diff(fld.x)))
    rel = abs(whole - eulerian) / abs(eulerian)
    tol = 1e-4 if quick else 1e-6
    return rel < tol, f"relative gap = {rel:.3g} vs {tol:.3g}"


def check_conservation_short(cfg, rng, quick):
    grid = make_grid(-12.0, 12.0, 257 if quick else 1025)
    datum = builtin_datum("gaussian_bump", {"a": 0.4, "width": 1.5})
    state, y0 = transform_with_map(datum, grid)
    traj = evolve(state, y0, 0.2, 0.005, record_every=10)
    c0 = traj.conserved_log[0]
    worst = 0.0
    for c in traj.conserved_log[1:]:
        for name in ("E_u", "E_v", "G", "H"):
            ref = max(abs(getattr(c0, name)), 1e-12)
            worst = max(worst, abs(getattr(c, name) - getattr(c0, name)) / ref)
    tol = 1e-5
    return worst < tol, f"max relative drift = {worst:.3g} vs {tol:.3g}"


def check_norm_axioms(cfg, rng, quick):
    grid = make_grid(-8.0, 8.0, 64 if quick else 256)
    state = random_omega_state(rng, grid)
    y = grid.nodes.copy()
    t1 = TangentVector(R=_bumps(rng, grid, 2, 0.5), S=_bumps(rng, grid, 2, 0.5),
                       A=_bumps(rng, grid, 2, 0.5), B=_bumps(rng, grid, 2, 0.5),
                       Q=_bumps(rng, grid, 2, 0.5))
    t2 = TangentVector(R=_bumps(rng, grid, 2, 0.5), S=_bumps(rng, grid, 2, 0.5),
                       A=_bumps(rng, grid, 2, 0.5), B=_bumps(rng, grid, 2, 0.5),
                       Q=_bumps(rng, grid, 2, 0.5))
    n1 = tangent_norm(state, y, t1)
    n2 = tangent_norm(state, y, t2)
    n_zero = tangent_norm(state, y, zero_tangent(grid))
    homog = abs(tangent_norm(state, y, t1.scaled(-2.5)) - 2.5 * n1)
    subadd = tangent_norm(state, y, t1.plus(t2)) - (n1 + n2)
    info = tangent_norm_info(state, y, t1, search="coarse_descent",
                             iters=40 if quick else 120)
    descent_ok = info.value <= info.eta_zero_value
    ok = (n_zero == 0.0 and homog < 1e-12 * max(n1, 1.0)
          and subadd < 1e-12 and descent_ok)
    return ok, (f"zero={n_zero:.3g}, homogeneity gap={homog:.3g}, "
                f"subadditivity slack={subadd:.3g}, "
                f"descent {info.value:.6g} <= eta0 {info.eta_zero_value:.6g}")


def check_determinism(cfg, rng, quick):
    grid = make_grid(-10.0, 10.0, 128 if quick else 512)
    datum = builtin_datum("gaussian_bump", {"a": 0.5, "width": 1.5})

    def run_once() -> str:
        state, y0 = transform_with_map(datum, grid)
        traj = evolve(state, y0, 0.1, 0.01, record_every=5)
        buf = io.StringIO()
        cliio.write_conserved_csv(buf, traj)
        return buf.getvalue()

    a, b = run_once(), run_once()
    return a == b, f"two runs produced {'identical' if a == b else 'DIFFERENT'} bytes"


def check_distance_identity(cfg, rng, quick):
    grid = make_grid(-8.0, 8.0, 64 if quick else 256)
    datum = builtin_datum("gaussian_bump", {"a": 0.4, "width": 1.5})
    state, y0 = transform_with_map(datum, grid)
    d_self = distance_upper(state, y0, state, y0, m_theta=5)
    return d_self == 0.0, f"d(U,U) = {d_self:.3g}"


_CHECKS = [
    ("prefix_vs_integrate", check_prefix_vs_integrate),
    ("fd_polynomial_exactness", check_fd_polynomial),
    ("scan_vs_bruteforce", check_scan_vs_bruteforce),
    ("kernel_properties", check_kernel_properties),
    ("swap_symmetry_bitwise", check_swap_symmetry),
    ("zero_state_fixed_point", check_zero_state_rhs),
    ("y0_round_trip", check_y0_round_trip),
    ("transform_identity_yxi", check_transform_identity),
    ("symmetric_evolution_bitwise", check_symmetric_evolution),
    ("euler_round_trip", check_euler_round_trip),
    ("measure_vs_eulerian", check_measure_vs_eulerian),
    ("conservation_short_run", check_conservation_short),
    ("norm_axioms", check_norm_axioms),
    ("distance_self_zero", check_distance_identity),
    ("determinism_rerun", check_determinism),
]


def run_suite(cfg: ScenarioConfig, quick: bool = False) -> list[CheckResult]:
    results = []
    for name, fn in _CHECKS:
        rng = np.random.default_rng(cfg.seed + zlib.crc32(name.encode()) % 100003)
        inject = cfg.inject == "broken_scan" and name == "scan_vs_bruteforce"
        try:
            if name == "scan_vs_bruteforce":
                passed, detail = fn(cfg, rng, quick, inject=inject)
            else:
                passed, detail = fn(cfg, rng, quick)
        except NovlabError as err:
            passed, detail = False, f"raised {type(err).__name__}: {err}"
        results.append(CheckResult(name=name, passed=passed, detail=detail))
    return results
