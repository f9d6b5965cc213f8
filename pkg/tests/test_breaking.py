"""Level-crossing detection, case classification, and exponent fits."""
import json

import numpy as np
import pytest

from novlab import (AnalysisError, classify, find_crossings, fit_exponent,
                    make_grid, max_accessible_y_derivative,
                    min_two_point_exponent, synthetic_case_state,
                    verify_cancellations)
from novlab.breaking import export_points_jsonl
from novlab.reconstruct import EulerField


GRID = make_grid(-10.0, 10.0, 1601)


def designed_point(case):
    state = synthetic_case_state(case, GRID)
    pts = find_crossings(state, np.zeros(GRID.n))
    assert pts, f"case {case}: no crossing detected"
    best = min(pts, key=lambda p: abs(p.xi_star))
    assert abs(best.xi_star) < 2 * GRID.dx
    return state, best


@pytest.mark.parametrize("case", range(1, 9))
def test_classification_recovers_designed_case(case):
    state, pt = designed_point(case)
    labeled = classify(pt, state)
    assert labeled.case_label == case
    assert not labeled.degenerate


@pytest.mark.parametrize("case", range(1, 9))
def test_cancellation_checks_within_tolerance(case):
    # Every check the FD ceiling allows must hold: claimed-zero entries
    # vanish relative to their local scale and leading coefficients
    # match the predicted products of W, Z derivatives.
    state, pt = designed_point(case)
    rep = verify_cancellations(classify(pt, state), state)
    assert rep.case_label == case
    assert rep.checks
    for c in rep.checks:
        tol = 1e-5 if c.kind == "vanish" else 1e-2
        assert c.rel_err < tol, (case, c.name, c.rel_err)


@pytest.mark.parametrize("case", [1, 2, 3, 4, 5])
def test_low_order_cases_report_complete(case):
    state, pt = designed_point(case)
    rep = verify_cancellations(classify(pt, state), state)
    assert rep.complete


@pytest.mark.parametrize("case,partner", [(1, 2), (4, 5), (6, 7), (3, 3), (8, 8)])
def test_case_labels_swap_with_components(case, partner):
    # Exchanging the two components maps each case to its mirror.
    state, _ = designed_point(case)
    swapped = state.with_fields(U=state.V, V=state.U, W=state.Z, Z=state.W)
    pts = find_crossings(swapped, np.zeros(GRID.n))
    best = min(pts, key=lambda p: abs(p.xi_star))
    assert classify(best, swapped).case_label == partner


@pytest.mark.parametrize("case", [1, 2, 3, 4, 5])
def test_some_low_derivative_of_y_survives(case):
    # At every detected point some xi-derivative of y of order <= 5
    # stays at order one relative to its neighborhood.
    state, pt = designed_point(case)
    order, ratio = max_accessible_y_derivative(pt, state)
    assert 2 <= order <= 5
    assert ratio > 0.05, (case, order, ratio)


def synthetic_power_field(power, n=4001, span=2.0):
    x = np.linspace(-span, span, n)
    u = 1.0 - np.abs(x) ** power
    ones = np.ones_like(x)
    tv = np.ones_like(x, dtype=bool)
    return EulerField(x=x, u=u, v=u, ux=ones, vx=ones,
                      ux_valid=tv, vx_valid=tv, Ddensity=ones)


def test_fit_exponent_power_law_oracles():
    # Known pure power laws must come back within a few percent.
    for power in (2.0 / 3.0, 1.0, 0.8):
        fld = synthetic_power_field(power)
        alpha, r2 = fit_exponent(fld, 0.0, side_window=0.5, min_gap=1e-3)
        assert alpha == pytest.approx(power, abs=0.02), power
        assert r2 > 0.999


def test_fit_exponent_requires_enough_samples():
    fld = synthetic_power_field(1.0, n=41)
    with pytest.raises(AnalysisError):
        fit_exponent(fld, 0.0, side_window=0.2, min_gap=0.15)


def test_fit_exponent_component_selects_field():
    fld64 = synthetic_power_field(0.5)
    v = 1.0 - np.abs(fld64.x) ** 0.9
    fld = EulerField(x=fld64.x, u=fld64.u, v=v, ux=fld64.ux, vx=fld64.vx,
                     ux_valid=fld64.ux_valid, vx_valid=fld64.vx_valid,
                     Ddensity=fld64.Ddensity)
    au, _ = fit_exponent(fld, 0.0, 0.5, 1e-3, component="u")
    av, _ = fit_exponent(fld, 0.0, 0.5, 1e-3, component="v")
    assert au == pytest.approx(0.5, abs=0.02)
    assert av == pytest.approx(0.9, abs=0.02)


def test_min_two_point_exponent_smooth_field_near_one():
    # A smooth field has local exponent 1 wherever the slope is nonzero;
    # sampled pairs must never report a sub-Lipschitz modulus.
    x = np.linspace(-2.0, 2.0, 2001)
    u = np.exp(-(x**2))
    ones = np.ones_like(x)
    tv = np.ones_like(x, dtype=bool)
    fld = EulerField(x=x, u=u, v=u, ux=ones, vx=ones,
                     ux_valid=tv, vx_valid=tv, Ddensity=ones)
    expo = min_two_point_exponent(fld, "u")
    assert expo > 0.9


def test_min_two_point_exponent_detects_cusp():
    fld = synthetic_power_field(0.6)
    expo = min_two_point_exponent(fld, "u")
    assert expo == pytest.approx(0.6, abs=0.05)


def test_export_points_jsonl_round_trip(tmp_path):
    state, pt = designed_point(1)
    labeled = classify(pt, state)
    path = tmp_path / "points.jsonl"
    export_points_jsonl([labeled], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1
    rec = json.loads(lines[0])
    assert rec["case_label"] == 1
    assert rec["curve"] in ("W", "Z", "both")
    assert rec["fitted_exponent_u"] is None
    assert isinstance(rec["margins"], dict)


def test_find_crossings_clean_state_has_none(smooth_pair_state):
    state, y0 = smooth_pair_state
    assert find_crossings(state, np.asarray(y0, float)) == []
