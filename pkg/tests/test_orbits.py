import math
import warnings

import numpy as np
import pytest

from tonguecusp import (Cycle, ParabolicInputError, Param, attracting_cycle,
                        find_real_periodic_points, polish_cycle)
from tonguecusp.core import ConvergenceError, iterate_lift
from tonguecusp.orbits import (NearMultipleRootWarning, _attracting_batch, _distinct_cycles,
                               attracting_cycles, cycle_from_point, make_cycle, minimal_period)


def brute_force_roots(p, n, m=400_000):
    """Dense-grid crossings of integer levels by G^n(x) - x on [0, 1)."""
    xs = (np.arange(m) + 0.5) / m
    s, _ = iterate_lift(xs, p.a, p.b, n)
    s = s - xs
    fl = np.floor(s)
    return xs[:-1][fl[1:] != fl[:-1]]


def test_single_fixed_point_example():
    pts = find_real_periodic_points(Param(0.0, 0.3), 1)
    assert len(pts) == 1
    assert abs(pts[0].x) < 1e-15 and pts[0].winding == 0
    assert math.isclose(pts[0].multiplier, 2.6, rel_tol=1e-14)


@pytest.mark.parametrize("b", [0.1, 0.3, 0.45])
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_census_matches_brute_force(n, b):
    p = Param(0.1 * (n % 7), b)
    with warnings.catch_warnings():
        warnings.simplefilter("error", NearMultipleRootWarning)
        pts = find_real_periodic_points(p, n)
    assert len(pts) == 2 ** n - 1
    assert all(q.multiplier > 1 for q in pts)
    ref = brute_force_roots(p, n)
    assert len(ref) == len(pts)
    got = np.array(sorted(q.x for q in pts))
    assert np.all(np.abs(got - np.sort(ref)) < 2.0 / 400_000)
    for q in pts:
        y, _ = iterate_lift(q.x, p.a, p.b, n)
        assert abs(float(y) - q.x - q.winding) < 1e-11


def test_census_rejects_bad_n():
    with pytest.raises(ValueError):
        find_real_periodic_points(Param(0, 0.3), 13)


def test_near_multiple_root_is_reported():
    # period-1 boundary at b = 0.75 in closed form; one side of a_edge keeps a
    # bare tangency of G(x) - x - 1, the other a root pair 3e-6 apart
    b = 0.75
    x = math.acos(-2 / 3) / (2 * math.pi)
    a_edge = 1 - x - (b / math.pi) * math.sin(2 * math.pi * x)
    counts = {}
    for da in (-1e-11, 1e-11):
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            pts = find_real_periodic_points(Param(a_edge + da, b), 1)
        counts[da] = (len(pts), any(issubclass(w.category, NearMultipleRootWarning) for w in rec))
    assert sorted(counts.values()) == [(1, True), (3, False)]


def test_attracting_cycle_examples():
    c = attracting_cycle(Param(0.5, 0.75))
    assert c.period == 1 and abs(c.points[0] - 0.5) < 1e-12
    assert math.isclose(c.multiplier, 0.5, abs_tol=1e-9)
    assert c.kind == "attracting"
    assert attracting_cycle(Param(0.5, 0.3)) is None
    c0 = attracting_cycle(Param(0.0, 0.75))
    assert c0 is None or c0.multiplier < 1


def test_attracting_cycle_period_two():
    c = attracting_cycle(Param(0.105, 0.95))
    assert c.period == 2 and 0 < c.multiplier < 1
    assert c.closure_residual(Param(0.105, 0.95)) < 1e-10
    assert abs(c.points[0] - c.points[1]) > 1e-9


def test_cycle_winding_matches_first_point():
    p = Param(0.105, 0.95)
    c = attracting_cycle(p)
    y, _ = iterate_lift(c.points[0], p.a, p.b, c.period)
    assert round(float(y) - c.points[0]) == c.winding
    # rotating the base point changes the winding integer
    other = make_cycle(p, c.points[1], 2, 0)
    assert other.points == c.points and other.winding == c.winding


def test_at_most_one_attracting_cycle_on_grid():
    a = np.repeat(np.linspace(0, 1, 50, endpoint=False), 50)
    b = np.tile(np.linspace(0.51, 0.99, 50), 50)
    det = _attracting_batch(a, b, 8, 2000, 1e-6, 64)
    for i in range(a.size):
        cyc = _distinct_cycles(Param(a[i], b[i]), det.period[i], det.x[i], det.winding[i])
        assert len(cyc) <= 1, (a[i], b[i], cyc)
        for c in cyc:
            assert 0 < c.multiplier < 1


def test_polish_examples():
    p = Param(0.0, 0.3)
    exact = Cycle(1, 0, (0.0,), 2.6)
    assert abs(polish_cycle(p, exact).points[0]) < 1e-15
    near = Cycle(1, 0, (1e-4,), 2.6)
    out = polish_cycle(p, near, max_steps=5)
    assert min(out.points[0], 1 - out.points[0]) < 1e-15
    with pytest.raises(ConvergenceError):
        polish_cycle(p, Cycle(1, 0, (0.3,), 2.6))


def test_polish_flags_parabolic_input():
    tip = Param(0.5, 0.5)
    with pytest.raises(ParabolicInputError):
        polish_cycle(tip, Cycle(1, 1, (0.5,), 1.0))


def test_minimal_period_and_duplicates():
    p = Param(0.5, 0.75)
    assert minimal_period(p, 0.5, 6) == 1
    c = cycle_from_point(p, 0.5, 4)
    assert c.period == 1
    cs = attracting_cycles(p)
    assert len(cs) == 1 and cs[0].period == 1
