"""Grid, quadrature, and finite-difference contracts."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from novlab import (ConfigError, ContractError, fd_derivative,
                    fd_truncation_orders, integrate, make_grid,
                    prefix_integral)


def test_make_grid_basic():
    g = make_grid(-2.0, 2.0, 5)
    assert g.n == 5
    assert g.dx == pytest.approx(1.0)
    assert np.allclose(g.nodes, [-2, -1, 0, 1, 2])


def test_make_grid_rejects_bad_inputs():
    with pytest.raises(ConfigError):
        make_grid(1.0, -1.0, 8)
    with pytest.raises(ConfigError):
        make_grid(0.0, 1.0, 2)
    with pytest.raises(ConfigError):
        make_grid(0.0, np.inf, 8)


def test_prefix_integral_matches_manual_trapezoid():
    # Independent O(n^2) oracle: each prefix is its own trapezoid sum.
    g = make_grid(0.0, 3.0, 7)
    rng = np.random.default_rng(0)
    f = rng.normal(size=g.n)
    pref = prefix_integral(f, g)
    assert pref[0] == 0.0
    for k in range(1, g.n):
        manual = float(np.trapezoid(f[: k + 1], dx=g.dx))
        assert pref[k] == pytest.approx(manual, abs=1e-14)


def test_integrate_is_last_prefix_entry():
    g = make_grid(-1.0, 4.0, 33)
    rng = np.random.default_rng(1)
    f = rng.normal(size=g.n)
    assert integrate(f, g) == prefix_integral(f, g)[-1]


def test_integrate_shape_contract():
    g = make_grid(0.0, 1.0, 9)
    with pytest.raises(ContractError):
        integrate(np.zeros(8), g)


@given(st.integers(min_value=0, max_value=3))
def test_fd_first_derivative_exact_on_low_polynomials(degree):
    # The first-derivative stencil uses 5 points, so cubics are exact.
    g = make_grid(-2.0, 2.0, 41)
    x = g.nodes
    f = x**degree
    expected = degree * x ** (degree - 1) if degree > 0 else np.zeros_like(x)
    err = np.max(np.abs(fd_derivative(f, g, 1) - expected))
    assert err < 1e-10


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_fd_polynomial_exactness_per_order(order):
    # Each stencil order must reproduce derivatives of x^k exactly for
    # k up to its point count minus one, interior and boundary alike.
    g = make_grid(-1.5, 2.5, 37)
    x = g.nodes
    width = {1: 2, 2: 2, 3: 3, 4: 3}[order]
    max_deg = 2 * width
    for deg in range(max_deg + 1):
        f = x**deg
        coef = 1.0
        for j in range(order):
            coef *= deg - j
        if deg >= order:
            expected = coef * x ** (deg - order)
        else:
            expected = np.zeros_like(x)
        scale = max(1.0, float(np.max(np.abs(expected))))
        err = np.max(np.abs(fd_derivative(f, g, order) - expected))
        assert err < 1e-8 * scale, (order, deg, err)


def test_fd_converges_at_advertised_rate():
    # Richardson oracle on sin(x): doubling n shrinks the interior error
    # by about 2**acc where acc comes from fd_truncation_orders.
    for order in (1, 2):
        errs = []
        for n in (201, 401):
            g = make_grid(-3.0, 3.0, n)
            x = g.nodes
            f = np.sin(x)
            d = fd_derivative(f, g, order)
            exact = np.sin(x + 0.5 * np.pi * order)
            interior = slice(8, -8)
            errs.append(np.max(np.abs((d - exact)[interior])))
        acc = int(fd_truncation_orders(make_grid(-3, 3, 201), order)[100])
        rate = errs[0] / errs[1]
        assert rate > 0.6 * 2**acc


def test_fd_truncation_orders_layout():
    g = make_grid(0.0, 1.0, 64)
    # Order 2 on 5 points: the centred row gains the symmetry bonus,
    # boundary rows do not.
    acc = fd_truncation_orders(g, 2)
    assert acc.shape == (g.n,)
    assert acc[0] < acc[g.n // 2]
    # Order 1 on 5 points has an even point excess, so no bonus anywhere.
    acc1 = fd_truncation_orders(g, 1)
    assert acc1[0] == acc1[g.n // 2]


def test_fd_rejects_unsupported_order():
    g = make_grid(0.0, 1.0, 16)
    with pytest.raises(ContractError):
        fd_derivative(np.zeros(g.n), g, 5)
