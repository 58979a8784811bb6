import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tonguecusp import (ConvergenceError, Param, attracting_cycle, boundary_pair,
                        contact_exponent, find_tip, locate_tip, scan_grid, trace_boundary)
from tonguecusp.tongues import _correct_boundary, fit_power_law, tip_residual, tongue_sections


def period_one_boundary(b, k=1):
    """Closed-form period-1 boundary: cos(2 pi x) = -1/(2b), a = k - x - (b/pi) sin(2 pi x)."""
    x = math.acos(-1 / (2 * b)) / (2 * math.pi)
    pts = []
    for xx in (x, 1 - x):
        pts.append((xx, k - xx - (b / math.pi) * math.sin(2 * math.pi * xx)))
    return pts


def record_at(recs, a, b):
    return next(r for r in recs if abs(r.a - a) < 1e-12 and abs(r.b - b) < 1e-12)


# scan ------------------------------------------------------------------

def test_scan_closed_form_cells():
    recs = scan_grid((0.0, 1.0), (0.75, 1.0), na=4, nb=2)
    assert len(recs) == 8
    r = record_at(recs, 0.5, 0.75)
    assert r.period == 1 and math.isclose(r.multiplier, 0.5, abs_tol=1e-9)

    recs = scan_grid((0.0, 1.0), (0.51, 0.9), na=4, nb=2)
    r = record_at(recs, 0.5, 0.51)
    assert r.period == 1 and math.isclose(r.multiplier, 0.98, abs_tol=1e-9)


def test_scan_expanding_region_is_empty():
    recs = scan_grid((0.0, 1.0), (0.05, 0.49), na=20, nb=6)
    assert all(r.period == 0 and r.multiplier is None for r in recs)


def test_scan_record_invariants():
    recs = scan_grid((0.0, 1.0), (0.5, 1.0), na=30, nb=12, max_period=5)
    assert [(r.b, r.a) for r in recs] == sorted((r.b, r.a) for r in recs)
    for r in recs:
        assert 0 <= r.period <= 5
        if r.period:
            assert abs(r.multiplier) < 1


def test_scan_is_deterministic():
    kw = dict(a_range=(0.0, 1.0), b_range=(0.8, 1.0), na=16, nb=4)
    assert scan_grid(**kw) == scan_grid(**kw)


def test_scan_symmetric_about_half():
    na, nb = 60, 30
    recs = scan_grid((0.0, 1.0), (0.5, 1.0), na=na, nb=nb)
    per = np.array([r.period for r in recs]).reshape(nb, na)
    mirror = per[:, (-np.arange(na)) % na]
    bad = np.argwhere((per == 1) != (mirror == 1))
    # disagreement only on cells touching the tongue edge
    for j, i in bad:
        row = per[j] == 1
        assert row[(i - 1) % na] != row[i] or row[(i + 1) % na] != row[i]
    assert len(bad) <= 2 * nb // 10


def test_scan_rejects_bad_input():
    with pytest.raises(ValueError):
        scan_grid(na=1)
    with pytest.raises(ValueError):
        scan_grid(b_range=(0.5, 1.2), na=4, nb=4)


# boundary --------------------------------------------------------------

def test_closed_form_boundary_at_three_quarters():
    b = 0.75
    for x, a in period_one_boundary(b):
        xs, as_, r, _ = _correct_boundary(x + 1e-4, a - 1e-4, b, 1, 1)
        assert abs(xs - x) < 1e-12 and abs(as_ - a) < 1e-12
    (x1, a1), (x2, a2) = period_one_boundary(b)
    assert math.isclose(a1 + a2, 1.0, abs_tol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.52, 0.99))
def test_boundary_corrector_recovers_closed_form(b):
    for x, a in period_one_boundary(b):
        xs, as_, r, _ = _correct_boundary(x + 1e-5, a, b, 1, 1)
        assert abs(xs - x) < 1e-11 and abs(as_ - a) < 1e-11


@pytest.mark.parametrize("branch", [0, 1])
def test_trace_matches_closed_form_and_ends_at_tip(branch):
    x, a = period_one_boundary(0.75)[branch]
    down = trace_boundary((x, a), 1, 1, 0.75, 0.5)
    up = trace_boundary((x, a), 1, 1, 0.75, 0.95)
    assert up.stop_reason == "reached b_end"
    for curve in (down, up):
        bs = [s.b for s in curve.samples]
        d = np.diff(bs)
        assert np.all(d > 0) or np.all(d < 0)
        for s in curve.samples:
            assert s.residual_value <= 1e-10 and s.residual_multiplier <= 1e-10
            xr, ar = period_one_boundary(s.b)[branch]
            assert abs(s.x - xr) < 1e-9 and abs(s.a - ar) < 1e-9
    last = down.samples[-1]
    assert abs(last.a - 0.5) < 1e-3 and abs(last.b - 0.5) < 1e-3
    assert {down.side, up.side} == {down.side}


def test_trace_branch_sides_differ():
    sides = {trace_boundary(s, 1, 1, 0.75, 0.8).side for s in period_one_boundary(0.75)}
    assert sides == {"left", "right"}


def test_trace_rejects_off_boundary_seed():
    with pytest.raises(ConvergenceError):
        trace_boundary((0.5, 0.5), 1, 1, 0.75, 0.9)


# tips ------------------------------------------------------------------

def test_period_one_tip(tip1):
    assert abs(tip1.x_star - 0.5) < 1e-9
    assert abs(tip1.a_star - 0.5) < 1e-9
    assert abs(tip1.b_star - 0.5) < 1e-9
    assert tip1.residual_norm <= 1e-11
    assert math.isclose(tip1.third_deriv, 4 * math.pi ** 2, rel_tol=1e-8)
    assert tip1.jacobian_det != 0


@pytest.mark.parametrize("p", [1, 2, 3])
def test_tip_invariants(tips, p):
    t = tips[p]
    r, J, third = tip_residual(t.x_star, t.a_star, t.b_star, t.p, t.k)
    assert np.max(np.abs(r)) <= 1e-10
    assert third > 0
    scale = np.prod(np.linalg.norm(J, axis=1))
    assert abs(np.linalg.det(J)) > 1e-6 * scale
    assert 0 < t.b_star < 1


def test_find_tip_far_seed_fails():
    with pytest.raises(ConvergenceError):
        find_tip((0.0, 0.0, 0.95), 1, 1, max_iter=3)


def test_locate_tip_period_two(tips):
    secs = [s for s in tongue_sections(2, 0.9, na=1000) if s[0] < 0.2 and s[1] > 0.0]
    assert secs
    lo, hi = secs[0]
    t = locate_tip(2, 0.5 * (lo + hi), 0.9)
    ref = tips[2]
    assert abs(t.a_star - ref.a_star) < 1e-9 and abs(t.b_star - ref.b_star) < 1e-9


# contact law -----------------------------------------------------------

def test_period_one_widths_match_closed_form(tip1):
    for db in (1e-4, 1e-3, 1e-2):
        left, right = boundary_pair(tip1, 0.5 + db)
        (_, a1), (_, a2) = period_one_boundary(0.5 + db)
        assert abs(left.a - min(a1, a2)) < 1e-11
        assert abs(right.a - max(a1, a2)) < 1e-11
        assert left.a < tip1.a_star < right.a


def test_period_one_contact_exponent(tip1):
    fit = contact_exponent(tip1, np.logspace(-4, -2, 8))
    assert 1.45 <= fit.exponent <= 1.55
    assert not fit.failures


@pytest.mark.parametrize("p", [2, 3])
def test_higher_period_contact_exponent(tips, p):
    fit = contact_exponent(tips[p], np.logspace(-4, -2, 8))
    assert 1.45 <= fit.exponent <= 1.55


def test_fit_harness_synthetic_linear():
    db = np.logspace(-5, -2, 10)
    slope, pref, rms = fit_power_law(db, db)
    assert abs(slope - 1.0) < 0.01 and abs(pref - 1.0) < 1e-9 and rms < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_fit_exponent_invariant_under_width_scaling(e, c, scale):
    db = np.logspace(-5, -2, 7)
    w = c * db ** e
    s1, _, _ = fit_power_law(db, w)
    s2, _, _ = fit_power_law(db, scale * w)
    assert abs(s1 - e) < 1e-9 and abs(s2 - s1) < 1e-9


def test_contact_doubling_invariance(tip1):
    fit = contact_exponent(tip1, np.logspace(-4, -2, 6))
    slope, _, _ = fit_power_law(fit.offsets, 2 * fit.widths)
    assert abs(slope - fit.exponent) < 1e-12


def test_contact_offsets_validated(tip1):
    with pytest.raises(ValueError):
        contact_exponent(tip1, np.logspace(-4, -2, 5))
    with pytest.raises(ValueError):
        contact_exponent(tip1, np.logspace(-6, -2, 8))


@pytest.mark.parametrize("p", [1, 2, 3])
def test_midpoint_between_branches_is_attracting(tips, p):
    t = tips[p]
    left, right = boundary_pair(t, t.b_star + 5e-3)
    c = attracting_cycle(Param(0.5 * (left.a + right.a), t.b_star + 5e-3))
    assert c is not None and c.period == p and abs(c.multiplier) < 1
