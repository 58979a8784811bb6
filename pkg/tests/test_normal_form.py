import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from tonguecusp import (ConvergenceError, Jet, Param, alpha_beta_jacobian, boundary_pair,
                        cubic_discriminant, cusp_coordinates, find_real_periodic_points,
                        iterate_relation_check, split_roots)
from tonguecusp.normal_form import chart_from_jet


def jet(*c):
    return Jet(np.array(c + (0.0,) * (6 - len(c)), dtype=float))


def sympy_defect(g_coeffs, s):
    u = sp.symbols("u")
    g = sum(sp.Rational(c) * u ** i for i, c in enumerate(g_coeffs))
    z = lambda t: sum(sp.Rational(c) * t ** (i + 1) for i, c in enumerate(s))
    d = sp.expand(z(g) - z(u) - z(u) ** 3)
    return [d.coeff(u, n) for n in range(1, 5)]


# chart -----------------------------------------------------------------

def test_chart_identity_jet():
    c = chart_from_jet(jet(0, 1, 0, 1))
    assert c.s == (1.0, 0.0, 0.0, 0.0)
    assert np.all(c.conjugacy_defect() == 0)


def test_chart_hand_solved_jet():
    c = chart_from_jet(jet(0, 1, 0, 4, 8))
    assert c.s == (2.0, 4.0, 0.0, 0.0)
    assert sympy_defect([0, 1, 0, 4, 8], [2, 4, 0, 0]) == [0, 0, 0, 0]
    assert np.max(np.abs(c.conjugacy_defect())) < 1e-12


def test_chart_rejects_nonpositive_cubic():
    with pytest.raises(ValueError):
        chart_from_jet(jet(0, 1, 0, -1))
    with pytest.raises(ValueError):
        chart_from_jet(jet(0, 1, 0, 0, 1))


def test_chart_rejects_non_parabolic_jet():
    with pytest.raises(ConvergenceError):
        chart_from_jet(jet(0, 1 + 1e-6, 0, 1))
    with pytest.raises(ConvergenceError):
        chart_from_jet(jet(0, 1, 1e-6, 1))


def test_period_one_chart(chart1):
    assert math.isclose(chart1.s[0], math.pi * math.sqrt(2 / 3), rel_tol=1e-9)
    assert abs(chart1.s[1]) < 1e-12


@pytest.mark.parametrize("p", [1, 2, 3])
def test_chart_conjugacy(charts, p):
    c = charts[p]
    s1, s2 = c.s[0], c.s[1]
    assert s1 > 0 and all(isinstance(x, float) for x in c.s)
    assert np.max(np.abs(c.conjugated_defect())) <= 1e-12
    # in u the quartic terms reach 3 s1^2 |s2|; below that scale roundoff dominates
    bound = 1e-9 if p <= 2 else 1e-15 * 3 * s1 ** 2 * abs(s2)
    assert np.max(np.abs(c.conjugacy_defect())) <= bound


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_iterate_relation(tips, charts, p, m):
    r = iterate_relation_check(tips[p], charts[p], m)
    assert r.defect <= 1e-8
    assert abs(r.coeffs[2] - m) <= 1e-8 and abs(r.coeffs[1]) <= 1e-8


def test_iterate_relation_rejects_m(tip1, chart1):
    with pytest.raises(ValueError):
        iterate_relation_check(tip1, chart1, 4)


# splitting -------------------------------------------------------------

@pytest.mark.parametrize("p", [1, 2, 3])
def test_split_at_tip_is_zero(tips, charts, p):
    s = split_roots(tips[p].param, tips[p], charts[p])
    assert max(abs(s.A), abs(s.B), abs(s.C)) <= 1e-12
    assert abs(s.alpha) <= 1e-12 and abs(s.beta) <= 1e-12 and abs(s.disc) <= 1e-24


def regimes(tip, db):
    left, right = boundary_pair(tip, tip.b_star + db)
    w = right.a - left.a
    b = tip.b_star + db
    return left, right, {"inside": Param(0.5 * (left.a + right.a), b),
                         "outside": Param(right.a + 0.5 * w, b)}


def check_cubic(s):
    for z in s.roots:
        assert abs(s.A + s.B * z + s.C * z ** 2 + z ** 3) <= 1e-10
    assert s.imag_max < 1e-9
    conj = sorted(np.conj(s.roots), key=lambda z: (z.real, z.imag))
    assert np.allclose(sorted(s.roots, key=lambda z: (z.real, z.imag)), conj, atol=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_split_regimes(tips, charts, p):
    tip, chart = tips[p], charts[p]
    left, right, pts = regimes(tip, 5e-3)
    s_in = split_roots(pts["inside"], tip, chart)
    s_out = split_roots(pts["outside"], tip, chart)
    assert s_in.real_root_count == 3 and s_in.disc > 0
    assert s_out.real_root_count == 1 and s_out.disc < 0
    for edge in (left, right):
        s = split_roots(Param(edge.a, edge.b), tip, chart)
        assert s.relative_cusp_defect <= 1e-8
    for s in (s_in, s_out):
        check_cubic(s)
        assert math.isclose(s.disc, 108 * (s.beta ** 3 - s.alpha ** 2),
                            rel_tol=1e-9, abs_tol=1e-12 * (abs(s.beta) ** 3 + s.alpha ** 2))


@pytest.mark.parametrize("p", [1, 2, 3])
def test_real_roots_are_periodic_points(tips, charts, p):
    tip = tips[p]
    _, _, pts = regimes(tip, 5e-3)
    mu = pts["inside"]
    s = split_roots(mu, tip, charts[p])
    census = np.array([q.x for q in find_real_periodic_points(mu, p)])
    for u in s.roots_u:
        x = (tip.x_star + u.real) % 1.0
        d = np.abs((census - x + 0.5) % 1.0 - 0.5)
        assert d.min() <= 1e-8


@pytest.mark.parametrize("p", [1, 2])
def test_double_root_locus_is_chart_independent(tips, charts, p):
    tip, chart = tips[p], charts[p]
    _, right, pts = regimes(tip, 5e-3)
    b, a_in, a_out = right.b, pts["inside"].a, pts["outside"].a
    f = lambda a: split_roots(Param(a, b), tip, chart).disc
    g = lambda a: split_roots(Param(a, b), tip, chart).disc_u
    az = brentq(f, a_in, a_out, xtol=1e-14)
    au = brentq(g, a_in, a_out, xtol=1e-14)
    assert abs(az - au) <= 1e-8
    assert abs(az - right.a) <= 1e-8


def test_split_rejects_far_parameter(tip1, chart1):
    with pytest.raises(ValueError):
        split_roots(Param(0.6, 0.5), tip1, chart1)
    # cluster radius ~ (da / c3)^(1/3) leaves the 0.15 window
    with pytest.raises(ConvergenceError):
        split_roots(Param(0.54, 0.5), tip1, chart1)


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.01, 0.01), st.floats(1e-4, 0.01))
def test_discriminant_sign_rule_near_period_one_tip(tip1, chart1, da, db):
    s = split_roots(Param(0.5 + da, 0.5 + db), tip1, chart1)
    check_cubic(s)
    scale = abs(s.beta) ** 3 + s.alpha ** 2
    if abs(s.disc) > 1e-6 * 108 * scale:
        assert (s.real_root_count == 3) == (s.disc > 0)


@settings(max_examples=200, deadline=None)
@given(*(st.floats(-1, 1) for _ in range(3)))
def test_discriminant_identity(A, B, C):
    alpha, beta = cusp_coordinates(A, B, C)
    d = cubic_discriminant(A, B, C)
    assert abs(d - 108 * (beta ** 3 - alpha ** 2)) <= 1e-12 * max(1.0, abs(d))


def test_discriminant_oracle():
    z, A, B, C = sp.symbols("z A B C")
    ref = sp.discriminant(z ** 3 + C * z ** 2 + B * z + A, z)
    for vals in [(0.3, -0.2, 0.7), (1, 0, 0), (-0.5, 0.25, -1)]:
        sub = dict(zip((A, B, C), map(sp.Rational, vals)))
        assert math.isclose(float(ref.subs(sub)), cubic_discriminant(*vals), abs_tol=1e-14)


# cusp coordinates ------------------------------------------------------

@pytest.mark.parametrize("p", [1, 2, 3])
def test_alpha_beta_jacobian(tips, charts, p):
    J = alpha_beta_jacobian(tips[p], charts[p], 1e-5)
    assert abs(J.det) >= 1e-4 * np.prod(np.linalg.norm(J.jac, axis=1))
    assert J.alpha_vs_A <= 1e-4 and J.beta_vs_B <= 1e-4


def test_period_one_jacobian_values(tip1, chart1):
    J = alpha_beta_jacobian(tip1, chart1, 1e-5)
    s1 = math.pi * math.sqrt(2 / 3)
    # dA/da = s1 and dB/db = -2 in this chart; the off-diagonal terms vanish by symmetry
    assert np.allclose(J.jac, [[s1 / 2, 0], [0, 2 / 3]], atol=1e-7)


def test_jacobian_richardson(tips, charts):
    tip, chart = tips[3], charts[3]
    J = [alpha_beta_jacobian(tip, chart, h).jac for h in (4e-4, 2e-4, 1e-4)]
    d1, d2 = np.abs(J[0] - J[1]).max(), np.abs(J[1] - J[2]).max()
    assert 3.0 <= d1 / d2 <= 5.0


def test_jacobian_rejects_step(tip1, chart1):
    with pytest.raises(ValueError):
        alpha_beta_jacobian(tip1, chart1, 1e-2)
