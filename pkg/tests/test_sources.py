"""Nonlocal source assembly and the exponential-kernel convolution."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from novlab import (assemble_sources, exp_convolve,
                    exp_convolve_bruteforce, kernel_accumulator, make_grid)
from novlab.initial import TransformedState

from conftest import bumps, random_state


def test_scan_matches_bruteforce_on_random_states():
    # Dual-route oracle: the blocked linear-time scan must reproduce the
    # quadratic-time trapezoid sum to near machine precision.
    rng = np.random.default_rng(42)
    g = make_grid(-12.0, 12.0, 512)
    worst = 0.0
    for _ in range(20):
        state = random_state(rng, g)
        acc = kernel_accumulator(state)
        p = bumps(rng, g.nodes, 3, 1.0)
        fe, fo = exp_convolve(p, acc, g)
        se, so = exp_convolve_bruteforce(p, acc, g)
        worst = max(worst, float(np.max(np.abs(fe - se))),
                    float(np.max(np.abs(fo - so))))
    assert worst < 1e-12


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=15)
def test_scan_matches_bruteforce_property(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(-8.0, 8.0, 128)
    state = random_state(rng, g)
    acc = kernel_accumulator(state)
    p = bumps(rng, g.nodes, 2, 1.0)
    fe, fo = exp_convolve(p, acc, g)
    se, so = exp_convolve_bruteforce(p, acc, g)
    assert np.max(np.abs(fe - se)) < 1e-12
    assert np.max(np.abs(fo - so)) < 1e-12


def test_kernel_flat_state_has_closed_form():
    # With W = Z = 0 and q = 1 the kernel weight is |xi - eta| itself, so
    # convolving the constant 1 against e^{-|xi-eta|} has the closed form
    # 2 - e^{-(xi-a)} - e^{-(b-xi)} on [a, b], up to O(dx^2) quadrature.
    g = make_grid(-10.0, 10.0, 4001)
    z = np.zeros(g.n)
    state = TransformedState(t=0.0, U=z, V=z, W=z, Z=z,
                             q=np.ones(g.n), grid=g)
    acc = kernel_accumulator(state)
    even, odd = exp_convolve(np.ones(g.n), acc, g)
    xi = g.nodes
    expected = 2.0 - np.exp(-(xi - g.xi_min)) - np.exp(-(g.xi_max - xi))
    assert np.max(np.abs(even - expected)) < 5.0 * g.dx**2
    # The signed variant integrates sign(eta - xi) e^{-|xi-eta|}.
    expected_odd = np.exp(-(xi - g.xi_min)) - np.exp(-(g.xi_max - xi))
    assert np.max(np.abs(odd - expected_odd)) < 5.0 * g.dx**2


def test_accumulator_profile_properties():
    rng = np.random.default_rng(3)
    g = make_grid(-6.0, 6.0, 256)
    state = random_state(rng, g)
    acc = kernel_accumulator(state)
    # Nondecreasing potential: the integrand q cos^2 cos^2 is >= 0.
    assert np.all(np.diff(acc.G) >= 0)


def test_accumulator_rejects_negative_density():
    # Negative q means the state left its validity region at runtime.
    from novlab import NumericalAbort
    g = make_grid(-1.0, 1.0, 16)
    z = np.zeros(g.n)
    state = TransformedState(t=0.0, U=z, V=z, W=z, Z=z,
                             q=-np.ones(g.n), grid=g)
    with pytest.raises(NumericalAbort):
        kernel_accumulator(state)


def test_wide_domain_does_not_overflow():
    # The kernel weights are assembled from differences of the potential
    # so a wide domain must not produce inf/nan even though e^{span}
    # would overflow.
    g = make_grid(-400.0, 400.0, 2048)
    z = np.zeros(g.n)
    state = TransformedState(t=0.0, U=z, V=z, W=z, Z=z,
                             q=np.ones(g.n), grid=g)
    acc = kernel_accumulator(state)
    even, odd = exp_convolve(np.ones(g.n), acc, g)
    assert np.all(np.isfinite(even)) and np.all(np.isfinite(odd))
    be, bo = exp_convolve_bruteforce(np.ones(g.n), acc, g)
    assert np.max(np.abs(even - be)) < 1e-12
    assert np.max(np.abs(odd - bo)) < 1e-12


def test_sources_swap_symmetry_is_bitwise():
    # Swapping (U, W) with (V, Z) must swap P-fields with S-fields with
    # no floating-point residue at all.
    rng = np.random.default_rng(11)
    g = make_grid(-10.0, 10.0, 384)
    state = random_state(rng, g)
    swapped = state.with_fields(U=state.V, V=state.U, W=state.Z, Z=state.W)
    a = assemble_sources(state)
    b = assemble_sources(swapped)
    assert np.array_equal(a.P1, b.S1)
    assert np.array_equal(a.P2, b.S2)
    assert np.array_equal(a.dxP1, b.dxS1)
    assert np.array_equal(a.dxP2, b.dxS2)
    assert np.array_equal(a.S1, b.P1)


def test_symmetric_state_sources_collapse():
    rng = np.random.default_rng(12)
    g = make_grid(-10.0, 10.0, 256)
    base = random_state(rng, g)
    state = base.with_fields(V=base.U, Z=base.W)
    src = assemble_sources(state)
    assert np.array_equal(src.P1, src.S1)
    assert np.array_equal(src.dxP2, src.dxS2)


def test_sources_finite_and_shaped(smooth_pair_state):
    state, _ = smooth_pair_state
    src = assemble_sources(state)
    for name in ("P1", "dxP1", "P2", "dxP2", "S1", "dxS1", "S2", "dxS2"):
        arr = getattr(src, name)
        assert arr.shape == (state.grid.n,)
        assert np.all(np.isfinite(arr))
    assert src.tail_bounds["p1"] >= 0.0


def test_zero_state_sources_vanish():
    g = make_grid(-5.0, 5.0, 64)
    z = np.zeros(g.n)
    state = TransformedState(t=0.0, U=z, V=z, W=z, Z=z,
                             q=np.ones(g.n), grid=g)
    src = assemble_sources(state)
    assert np.max(np.abs(src.P1)) == 0.0
    assert np.max(np.abs(src.S2)) == 0.0
