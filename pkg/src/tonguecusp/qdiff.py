"""Rational vector fields and quadratic differentials in the global chart ``w``.

Objects of the form ``R(w) (dw)^m`` are stored as a numerator polynomial and
an explicit list of poles.  The weight ``m`` is ``-1`` for vector fields,
``1`` for 1-forms and ``2`` for quadratic differentials; products add
weights, so a quadratic differential times a vector field is a 1-form whose
residues can be taken.  Local comparisons in the cylinder coordinate ``z``
use ``dw = 2 pi i w dz``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .core import Param, _iterate_jet, critical_points, lift, lift_prime
from .jet import Jet
from .normal_form import NormalFormChart, alpha_beta_jacobian
from .tongues import TipRecord

TWO_PI_I = 2j * math.pi
SAME_POINT = 1e-12
CANCEL_TOL = 1e-10
MIN_RADIUS = 1e-8
RESIDUE_AGREEMENT = 1e-9


class ResidueMismatchError(ArithmeticError):
    """Contour quadrature and algebraic extraction disagree."""


class PoleClusterError(ArithmeticError):
    """Two poles are too close together to separate by a contour."""


def _same(u, v):
    return abs(u - v) <= SAME_POINT * max(1.0, abs(u))


def _trim(c):
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    scale = np.abs(c).max()
    n = c.size
    while n > 1 and abs(c[n - 1]) <= 1e-15 * scale:
        n -= 1
    return c[:n].copy()


def taylor_shift(c, w0):
    """Coefficients of ``N(w0 + t)`` in ``t`` (repeated synthetic division)."""
    c = np.array(c, dtype=complex)
    n = c.size
    out = np.zeros(n, dtype=complex)
    for j in range(n):
        # Horner pass: remainder is the next Taylor coefficient
        acc = np.zeros(n - j, dtype=complex)
        r = 0j
        for i in range(n - j - 1, -1, -1):
            r = r * w0 + c[i]
            acc[i] = r
        out[j] = acc[0]
        c = acc[1:]
    return out


def _series_div(num, den, n):
    """First ``n`` coefficients of ``num/den`` as power series, ``den[0] != 0``."""
    a = np.zeros(n, dtype=complex)
    a[: min(n, len(num))] = num[:n]
    d = np.zeros(n, dtype=complex)
    d[: min(n, len(den))] = den[:n]
    q = np.zeros(n, dtype=complex)
    for k in range(n):
        q[k] = (a[k] - np.dot(d[1 : k + 1], q[k - 1 :: -1][:k])) / d[0]
    return q


def _poly_from_factors(factors):
    """Expand ``prod (t - r)^m`` for ``(r, m)`` pairs."""
    out = np.ones(1, dtype=complex)
    for r, m in factors:
        for _ in range(m):
            out = P.polymul(out, [-r, 1.0])
    return out


class Rational:
    """``R(w) (dw)^weight`` with ``R = N / (lead * prod (w - r)^m)``."""

    weight = 0

    def __init__(self, numerator, poles=(), lead=1.0, weight=None, reduce=True):
        if weight is not None:
            self.weight = weight
        if lead == 0:
            raise ValueError("lead scalar must be nonzero")
        merged: list = []
        for r, m in poles:
            if m < 0:
                raise ValueError("pole multiplicities must be non-negative")
            for i, (s, k) in enumerate(merged):
                if _same(s, r):
                    merged[i] = (s, k + m)
                    break
            else:
                if m:
                    merged.append((complex(r), int(m)))
        self.num = _trim(numerator)
        self.poles = merged
        self.lead = complex(lead)
        if reduce:
            self._reduce()

    # construction ---------------------------------------------------------

    @classmethod
    def from_coeffs(cls, numerator, denominator, weight=None):
        """Build from ascending coefficient lists; denominator roots are clustered."""
        den = _trim(denominator)
        if np.all(den == 0):
            raise ZeroDivisionError("denominator is identically zero")
        roots = np.roots(den[::-1]) if den.size > 1 else np.array([])
        poles: list = []
        for r in roots:
            for i, (s, k) in enumerate(poles):
                if abs(s - r) <= 1e-7 * max(1.0, abs(r)):
                    poles[i] = (s, k + 1)
                    break
            else:
                poles.append((complex(r), 1))
        obj = cls(numerator, poles, den[-1], weight=weight)
        return obj

    def _reduce(self):
        kept = []
        for r, m in self.poles:
            while m > 0:
                scale = np.sum(np.abs(self.num) * max(1.0, abs(r)) ** np.arange(self.num.size))
                if self.num.size == 1 or abs(P.polyval(r, self.num)) > CANCEL_TOL * scale:
                    break
                q, _ = P.polydiv(self.num, [-r, 1.0])
                self.num = _trim(q)
                m -= 1
            if m:
                kept.append((r, m))
        self.poles = kept

    def _like(self, num, poles, lead, weight):
        cls = _CLASS_BY_WEIGHT.get(weight, Rational)
        obj = cls(num, poles, lead)
        obj.weight = weight
        return obj

    # views --------------------------------------------------------------

    @property
    def numerator(self):
        return self.num.copy()

    @property
    def denominator(self):
        return self.lead * _poly_from_factors(self.poles)

    @property
    def deg_num(self):
        return 0 if np.all(self.num == 0) else self.num.size - 1

    @property
    def deg_den(self):
        return sum(m for _, m in self.poles)

    def is_zero(self):
        return bool(np.all(self.num == 0))

    def pole_order(self, w0):
        for r, m in self.poles:
            if _same(r, w0):
                return m
        return 0

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        d = np.full(w.shape, self.lead, dtype=complex)
        for r, m in self.poles:
            d = d * (w - r) ** m
        return P.polyval(w, self.num) / d

    def value_z(self, z):
        """Coefficient in the ``z`` chart: ``R(w) (2 pi i w)^weight``."""
        w = np.exp(TWO_PI_I * np.asarray(z, dtype=complex))
        return self(w) * (TWO_PI_I * w) ** self.weight

    def __repr__(self):
        return (f"{type(self).__name__}(weight={self.weight}, deg_num={self.deg_num}, "
                f"poles={[(complex(r), m) for r, m in self.poles]})")

    # arithmetic ---------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, Rational):
            return self._like(P.polymul(self.num, other.num), self.poles + other.poles,
                              self.lead * other.lead, self.weight + other.weight)
        return self._like(self.num * other, self.poles, self.lead, self.weight)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __add__(self, other):
        if not isinstance(other, Rational):
            return NotImplemented
        if other.weight != self.weight:
            raise TypeError("cannot add objects of different weight")
        common: list = [(r, m) for r, m in self.poles]
        for r, m in other.poles:
            for i, (s, k) in enumerate(common):
                if _same(s, r):
                    common[i] = (s, max(k, m))
                    break
            else:
                common.append((r, m))

        def lifted(x):
            extra = [(r, m - x.pole_order(r)) for r, m in common]
            return P.polymul(x.num, _poly_from_factors(extra)) / x.lead

        num = P.polyadd(lifted(self), lifted(other))
        return self._like(num, common, 1.0, self.weight)

    def __sub__(self, other):
        return self + (-other)

    # local analysis -----------------------------------------------------

    def laurent(self, w0, n_terms):
        """``(m, s)`` with ``R(w0 + t) = t^-m sum_j s_j t^j`` to ``n_terms`` terms."""
        m = self.pole_order(w0)
        num = taylor_shift(self.num, w0)
        others = [(r - w0, k) for r, k in self.poles if not _same(r, w0)]
        den = self.lead * _poly_from_factors(others)
        return m, _series_div(num, den, n_terms)

    def residue(self, w0):
        """Algebraic residue of ``R(w) dw`` at ``w0``."""
        m = self.pole_order(w0)
        if m == 0:
            return 0j
        _, s = self.laurent(w0, m)
        return complex(s[m - 1])

    def residue_at_infinity(self):
        """Residue of ``R(w) dw`` at ``w = inf`` via ``w = 1/s``."""
        if self.is_zero():
            return 0j
        gap = self.deg_den - self.deg_num
        j = 1 - gap
        if j < 0:
            return 0j
        rev = self.num[: self.deg_num + 1][::-1]
        den = self.lead * np.ones(1, dtype=complex)
        for r, m in self.poles:
            for _ in range(m):
                den = P.polymul(den, [1.0, -r])
        return -complex(_series_div(rev, den, j + 1)[j])

    def order_at(self, w0):
        """Order of the object ``R (dw)^weight`` at ``w0`` (``None`` means ``inf``)."""
        if self.is_zero():
            return math.inf
        if w0 is None or (isinstance(w0, float) and math.isinf(w0)):
            return self.deg_den - self.deg_num - 2 * self.weight
        c = taylor_shift(self.num, w0)
        scale = np.abs(c).max()
        z = 0
        while z < c.size - 1 and abs(c[z]) <= 1e-11 * scale:
            z += 1
        return z - self.pole_order(w0)


class RationalVF(Rational):
    """``psi(w) d/dw``."""

    weight = -1


class OneForm(Rational):
    weight = 1


class RationalQD(Rational):
    """``phi(w) (dw)^2``."""

    weight = 2


_CLASS_BY_WEIGHT = {-1: RationalVF, 1: OneForm, 2: RationalQD}


# vector fields of the family -------------------------------------------------

def _crit_poles(p: Param):
    cp = critical_points(p)
    return [(complex(cp.w_plus), 1), (complex(cp.w_minus), 1)]


def theta_v(p: Param, v) -> RationalVF:
    """Variation field ``va * theta_a + vb * theta_b``."""
    va, vb = v
    num = np.array([0.0, -vb, TWO_PI_I * va, vb], dtype=complex)
    return RationalVF(num, _crit_poles(p), p.b)


def tau_defect(p: Param) -> RationalVF:
    """``tau - f^* tau`` for the radial field ``tau = w d/dw``."""
    return RationalVF([0.0, p.b, 1.0, p.b], _crit_poles(p), p.b)


def independence_det(b: float) -> float:
    """Determinant of the ``(w, w^2, w^3)`` coefficients of the three numerators."""
    m = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [b, 1.0, b]])
    return float(np.linalg.det(m))


def theta_z(p: Param, v, z):
    """``theta_v`` in the ``z`` chart, ``(va + vb sin(2 pi z)/pi) / G'(z)``."""
    va, vb = v
    z = np.asarray(z)
    return (va + vb * np.sin(2 * math.pi * z) / math.pi) / lift_prime(z, p.b)


def variation_sum(p: Param, v, n: int, z) -> complex:
    """``sum_{k<n} (f^k)^* theta_v`` at ``z``, in the ``z`` chart."""
    if n < 1:
        raise ValueError("n must be at least 1")
    th = theta_v(p, v)
    cp = critical_points(p)
    y = complex(z)
    d = 1.0 + 0j
    total = 0j
    for k in range(n):
        w = cmath.exp(TWO_PI_I * y)
        if min(abs(w - cp.w_plus), abs(w - cp.w_minus)) < 1e-6:
            raise ValueError(f"orbit point {k} is within 1e-6 of a critical point")
        total += complex(th.value_z(y)) / d
        d *= complex(lift_prime(y, p.b))
        y = complex(lift(y, p.a, p.b))
    return total


# residues -------------------------------------------------------------------

def _other_pole_distance(form: Rational, w0):
    dist = [abs(r - w0) for r, _ in form.poles if not _same(r, w0)]
    return min(dist) if dist else math.inf


def residue_contour(form: Rational, w0, radius=None, tol=1e-12, max_nodes=1 << 16):
    """Trapezoidal ``(1/2 pi i) closed integral of R dw`` around ``w0``."""
    dist = _other_pole_distance(form, w0)
    r = 0.5 * min(dist, max(1.0, abs(w0))) if radius is None else radius
    while r >= dist:
        r *= 0.5
    if r < MIN_RADIUS:
        raise PoleClusterError(f"no pole-free contour around {w0} of radius >= {MIN_RADIUS}")
    n = 16
    prev = None
    while True:
        e = np.exp(2j * math.pi * np.arange(n) / n)
        val = complex(np.mean(form(w0 + r * e) * r * e))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        if n >= max_nodes:
            raise ArithmeticError("contour quadrature did not settle")
        prev = val
        n *= 2


def residue_checked(form: Rational, w0):
    alg = form.residue(w0)
    quad = residue_contour(form, w0)
    if abs(alg - quad) > RESIDUE_AGREEMENT * max(1.0, abs(alg)):
        raise ResidueMismatchError(f"residue at {w0}: algebraic {alg} vs contour {quad}")
    return alg


def residue_pairing(q: RationalQD, theta: RationalVF, w0) -> complex:
    """Residue of the 1-form ``q (x) theta`` at ``w0``."""
    return residue_checked(q * theta, complex(w0))


def residue_z(form: Rational, z0, radius=0.05, n=256):
    """Residue of a 1-form computed on a circle in the ``z`` chart."""
    e = np.exp(2j * math.pi * np.arange(n) / n)
    z = z0 + radius * e
    return complex(np.mean(form.value_z(z) * radius * e))


def residue_sum_check(q: Rational, theta: Rational | None = None) -> complex:
    """Sum of all residues, finite poles plus ``inf``; zero for any rational 1-form."""
    form = q if theta is None else q * theta
    if form.weight != 1:
        raise TypeError("residues need a 1-form")
    locs = [r for r, _ in form.poles]
    for i, u in enumerate(locs):
        for v in locs[i + 1:]:
            if abs(u - v) < MIN_RADIUS:
                raise PoleClusterError("poles closer than 1e-8")
    return sum((residue_checked(form, r) for r in locs), 0j) + form.residue_at_infinity()


# polar data -----------------------------------------------------------------

@dataclass(frozen=True)
class PolarData:
    """``rho2 / u^2 + rho1 / u`` at ``location`` (a ``w`` value), ``u`` local in ``chart``."""

    location: complex
    rho2: complex
    rho1: complex
    chart: str = "z"

    def to_w(self) -> "PolarData":
        if self.chart == "w":
            return self
        kappa = TWO_PI_I * self.location
        return PolarData(self.location, self.rho2,
                         (self.rho1 - TWO_PI_I * self.rho2) / kappa, "w")

    def to_z(self) -> "PolarData":
        if self.chart == "z":
            return self
        kappa = TWO_PI_I * self.location
        return PolarData(self.location, self.rho2,
                         kappa * self.rho1 + TWO_PI_I * self.rho2, "z")

    def defect(self, other: "PolarData"):
        a, b = self.to_z(), other.to_z()
        return abs(a.rho2 - b.rho2), abs(a.rho1 - b.rho1)


def chart_polar_targets(c1, c2, location):
    """Polar data of ``(d zeta)^2/zeta`` and ``(d zeta)^2/zeta^2`` for ``zeta = c1 u + c2 u^2 + ...``."""
    if abs(c1) < 1e-10:
        raise ValueError("chart is degenerate: |c1| < 1e-10")
    return (PolarData(location, 0.0, c1), PolarData(location, 1.0, 2.0 * c2 / c1))


def polar_data_from_jet(eta: Jet, power: int, location) -> PolarData:
    """Polar data of ``(d eta)^2 / eta^power`` by series division (``power`` 1 or 2)."""
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    c = eta.coeffs
    h = Jet(np.append(c[1:], 0.0))          # eta = u h(u)
    d = Jet(np.append(np.arange(1, c.size) * c[1:], 0.0))
    s = (d * d) / h ** power
    if power == 1:
        return PolarData(location, 0.0, s[0])
    return PolarData(location, s[0], s[1])


def polar_data(q: RationalQD, w0) -> PolarData:
    """Algebraic ``w``-chart polar data of ``q`` at ``w0`` (at most a double pole)."""
    m, s = q.laurent(w0, 2)
    if m > 2:
        raise ValueError(f"pole of order {m} exceeds the double-pole data")
    coeffs = {m - j: s[j] for j in range(2)}
    return PolarData(complex(w0), coeffs.get(2, 0j), coeffs.get(1, 0j), "w")


def polar_data_contour(q: RationalQD, w0) -> PolarData:
    """Same data as :func:`polar_data`, by quadrature."""
    s1 = residue_contour(q * RationalVF([1.0]), w0)
    s2 = residue_contour(q * RationalVF([-w0, 1.0]), w0)
    return PolarData(complex(w0), s2, s1, "w")


# construction of q_A and q_B ----------------------------------------------

def basis_simple(w_k, w_plus) -> RationalQD:
    return RationalQD([1.0], [(w_k, 1), (w_plus, 1), (0.0, 1)])


def basis_double(w_k) -> RationalQD:
    return RationalQD([1.0], [(w_k, 2), (0.0, 1)])


def build_q(p: Param, cycle_w, targets) -> RationalQD:
    """Combination of the two basis families whose polar data match ``targets``.

    Per point the double-pole coefficient is solved first, then the simple-pole
    element absorbs the residual ``1/u`` term.
    """
    w_plus = complex(critical_points(p).w_plus)
    total = None
    for w_k, t in zip(cycle_w, targets):
        if min(abs(w_k - w_plus), abs(w_k)) < MIN_RADIUS:
            raise ArithmeticError("cycle point collides with c+ or w = 0")
        sw = t.to_w()
        beta = sw.rho2 * w_k
        alpha = (sw.rho1 + beta / w_k ** 2) * (w_k - w_plus) * w_k
        for coef, elem in ((beta, basis_double(w_k)), (alpha, basis_simple(w_k, w_plus))):
            if coef != 0:
                term = elem * coef
                total = term if total is None else total + term
    if total is None:
        total = RationalQD([0.0])
    w_minus = complex(critical_points(p).w_minus)
    if total.pole_order(w_minus):
        raise ArithmeticError("constructed differential has a pole at c-")
    return total


build_qA = build_q
build_qB = build_q


# cycle data at a tip -------------------------------------------------------

def tip_cycle(tip: TipRecord):
    """Cycle points ``x_1 .. x_p`` with ``x_p = x*`` (reduced to ``[0, 1)`` except ``x_p``)."""
    xs = []
    y = tip.x_star
    for _ in range(tip.p - 1):
        y = float(lift(y, tip.a_star, tip.b_star)) % 1.0
        xs.append(y)
    xs.append(tip.x_star)
    return xs


def zeta_k_jet(tip: TipRecord, chart: NormalFormChart, k: int, order=4) -> Jet:
    """Jet of ``zeta o f^(p-k)`` at ``x_k`` in the real (``z`` chart) variable."""
    if not 1 <= k <= tip.p:
        raise ValueError("k must lie in [1, p]")
    x_k = tip_cycle(tip)[k - 1]
    z = chart.zeta_jet(order)
    n = tip.p - k
    if n == 0:
        return z
    g = _iterate_jet(x_k, tip.a_star, tip.b_star, n, order, False)
    return z.compose(g - g[0])


def polar_targets(tip: TipRecord, chart: NormalFormChart, k: int):
    zk = zeta_k_jet(tip, chart, k)
    w_k = cmath.exp(TWO_PI_I * tip_cycle(tip)[k - 1])
    return chart_polar_targets(zk[1], zk[2], w_k)


def tip_differentials(tip: TipRecord, chart: NormalFormChart):
    """``(q_A, q_B, cycle_w)`` at a tip."""
    p = tip.param
    cyc = [cmath.exp(TWO_PI_I * x) for x in tip_cycle(tip)]
    tg = [polar_targets(tip, chart, k) for k in range(1, tip.p + 1)]
    qA = build_qA(p, cyc, [t[0] for t in tg])
    qB = build_qB(p, cyc, [t[1] for t in tg])
    return qA, qB, cyc


@dataclass(frozen=True)
class InvarianceDefect:
    k: int
    simple: tuple       # (|d rho2|, |d rho1|) for (d zeta)^2/zeta
    double: tuple       # same for (d zeta)^2/zeta^2

    @property
    def worst(self):
        return max(*self.simple, *self.double)


def invariance_check(tip: TipRecord, chart: NormalFormChart, k: int, order=4) -> InvarianceDefect:
    """Polar defect at ``x_k`` between the pullback by ``f`` of the data at ``x_(k+1)``
    and the data of ``zeta_k`` itself, for both denominators."""
    if not 1 <= k <= tip.p:
        raise ValueError("k must lie in [1, p]")
    xs = tip_cycle(tip)
    nxt = k % tip.p + 1
    f = _iterate_jet(xs[k - 1], tip.a_star, tip.b_star, 1, order, False)
    eta = zeta_k_jet(tip, chart, nxt, order).compose(f - f[0])
    own = zeta_k_jet(tip, chart, k, order)
    w_k = cmath.exp(TWO_PI_I * xs[k - 1])
    out = []
    for power in (1, 2):
        d = polar_data_from_jet(eta, power, w_k).defect(polar_data_from_jet(own, power, w_k))
        out.append(tuple(float(x) for x in d))
    return InvarianceDefect(k, out[0], out[1])


# transversality -------------------------------------------------------------

V_A = (1.0, 0.0)
V_B = (0.0, 1.0)


def pairing_sum(q: RationalQD, theta: RationalVF, cycle_w) -> complex:
    return sum((residue_pairing(q, theta, w) for w in cycle_w), 0j)


def _relative(x, ref):
    floor = 1e-3 * np.abs(ref).max()
    return np.abs(x - ref) / np.maximum(np.abs(ref), floor)


@dataclass
class TransversalityReport:
    residue_matrix: np.ndarray      # rows (A, B), columns (v_a, v_b)
    fd_matrix: np.ndarray
    rel_diff: np.ndarray
    det_residue: float
    det_fd: float
    imag_max: float
    tau_pairings: dict
    residue_sums: dict
    independence_det: float
    invariance: list = field(default_factory=list)

    @property
    def max_rel_diff(self):
        return float(self.rel_diff.max())

    @property
    def same_sign(self):
        return self.det_residue * self.det_fd > 0

    def as_dict(self):
        cplx = lambda z: [float(z.real), float(z.imag)]
        return {
            "residue_matrix": self.residue_matrix.tolist(),
            "fd_matrix": self.fd_matrix.tolist(),
            "rel_diff": self.rel_diff.tolist(),
            "max_rel_diff": self.max_rel_diff,
            "det_residue": self.det_residue,
            "det_fd": self.det_fd,
            "imag_max": self.imag_max,
            "tau_pairings": {k: cplx(v) for k, v in self.tau_pairings.items()},
            "residue_sums": {k: cplx(v) for k, v in self.residue_sums.items()},
            "independence_det": self.independence_det,
            "invariance_max": max((d.worst for d in self.invariance), default=0.0),
        }


def verify_dAdB(tip: TipRecord, chart: NormalFormChart, h=1e-5) -> TransversalityReport:
    p = tip.param
    qA, qB, cyc = tip_differentials(tip, chart)
    th = {"v_a": theta_v(p, V_A), "v_b": theta_v(p, V_B)}
    res = np.array([[pairing_sum(q, th[v], cyc) for v in ("v_a", "v_b")] for q in (qA, qB)])
    fd = alpha_beta_jacobian(tip, chart, h)
    fdm = np.array([fd.dA, fd.dB])
    real = res.real
    tau = tau_defect(p)
    sums = {f"{qn}*{vn}": residue_sum_check(q, t)
            for qn, q in (("qA", qA), ("qB", qB)) for vn, t in th.items()}
    return TransversalityReport(
        residue_matrix=real,
        fd_matrix=fdm,
        rel_diff=_relative(real, fdm),
        det_residue=float(np.linalg.det(real)),
        det_fd=float(np.linalg.det(fdm)),
        imag_max=float(np.abs(res.imag).max()),
        tau_pairings={"qA": pairing_sum(qA, tau, cyc), "qB": pairing_sum(qB, tau, cyc)},
        residue_sums=sums,
        independence_det=independence_det(p.b),
        invariance=[invariance_check(tip, chart, k) for k in range(1, tip.p + 1)],
    )
