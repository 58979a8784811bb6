"""Parabolic normal-form chart at a tip and the cubic splitting of its zero.

At a tip the local map ``g(u) = G^p(x* + u) - x* - k`` is ``u + c3 u^3 + ...``.
The chart ``zeta = s1 u + s2 u^2`` with ``s1 = sqrt(c3)`` and ``s2 = s1 c4/c3``
conjugates ``g`` to ``zeta + zeta^3 + O(zeta^5)``.  For nearby parameters the
triple zero splits into three fixed points; their ``zeta`` values are the
roots of the monic cubic ``A + B z + C z^2 + z^3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConvergenceError, Param, _iterate_jet, iterate_lift
from .jet import Jet
from .tongues import TipRecord

ROOT_RADIUS = 0.15
JET_ORDER = 5


@dataclass(frozen=True)
class NormalFormChart:
    x_star: float
    s: tuple            # (s1, s2, s3, s4)
    jet: Jet            # g(u) to order 5, with its tiny linear/quadratic residue

    def zeta_jet(self, order=JET_ORDER):
        c = np.zeros(order + 1)
        n = min(order, 4)
        c[1:n + 1] = self.s[:n]
        return Jet(c)

    def __call__(self, u):
        s1, s2, s3, s4 = self.s
        return u * (s1 + u * (s2 + u * (s3 + u * s4)))

    def conjugacy_defect(self):
        """Orders 1..4 of ``zeta(g(u)) - zeta(u) - zeta(u)^3`` in ``u``."""
        z = self.zeta_jet()
        g = self.jet - self.jet[0]
        d = z.compose(g) - z - z ** 3
        return d.coeffs[1:5]

    def conjugated_defect(self):
        """Orders 1..4 of ``zeta o g o zeta^-1 - id - id^3`` in ``zeta``."""
        z = self.zeta_jet()
        zi = z.reverse()
        g = self.jet - self.jet[0]
        h = z.compose(g.compose(zi))
        ident = Jet.variable(0.0, JET_ORDER)
        d = h - ident - ident ** 3
        return d.coeffs[1:5]


@dataclass(frozen=True)
class CubicSplitting:
    mu: Param
    roots_u: tuple
    roots: tuple            # zeta values
    A: float
    B: float
    C: float
    alpha: float
    beta: float
    disc: float
    imag_max: float         # largest |Im| among A, B, C before taking real parts

    @property
    def real_root_count(self):
        return sum(1 for r in self.roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r)))

    @property
    def cusp_defect(self):
        return self.beta ** 3 - self.alpha ** 2

    @property
    def relative_cusp_defect(self):
        scale = abs(self.beta) ** 3 + self.alpha ** 2
        return abs(self.cusp_defect) / scale if scale else 0.0

    @property
    def disc_u(self):
        """Discriminant of the monic cubic through the raw ``u`` roots."""
        r = self.roots_u
        return float(np.real(((r[0] - r[1]) * (r[0] - r[2]) * (r[1] - r[2])) ** 2))


def cubic_discriminant(A, B, C):
    """Discriminant of ``z^3 + C z^2 + B z + A``."""
    return 18 * C * B * A - 4 * C ** 3 * A + C ** 2 * B ** 2 - 4 * B ** 3 - 27 * A ** 2


def cusp_coordinates(A, B, C):
    alpha = C ** 3 / 27 - B * C / 6 + A / 2
    beta = C ** 2 / 9 - B / 3
    return alpha, beta


def tip_jet(tip: TipRecord, order=JET_ORDER, mu=None, partials=False):
    """Jet of ``u -> G_mu^p(x* + u) - x* - k`` (``mu`` defaults to the tip)."""
    a, b = (tip.a_star, tip.b_star) if mu is None else mu
    j = _iterate_jet(tip.x_star, a, b, tip.p, order, partials)
    return j - (tip.x_star + tip.k)


def chart_from_jet(g: Jet, x_star: float = 0.0, residual_tol=1e-8) -> NormalFormChart:
    """Chart for a jet ``g(u) = u + c3 u^3 + c4 u^4 + ...`` (constant, linear and
    quadratic residuals up to ``residual_tol`` are ignored)."""
    c1, c2, c3, c4 = g[1] - 1.0, g[2], g[3], g[4]
    if abs(g[0]) > residual_tol or abs(c1) > residual_tol or abs(c2) > residual_tol:
        raise ConvergenceError(
            f"jet is not parabolic to {residual_tol}: "
            f"(c0, c1-1, c2) = ({g[0]:.3g}, {c1:.3g}, {c2:.3g})")
    if not c3 > 0:
        raise ValueError(f"cubic coefficient {c3!r} is not positive; no real normal form")
    s1 = math.sqrt(c3)
    s2 = s1 * c4 / c3
    return NormalFormChart(x_star, (s1, s2, 0.0, 0.0), g)


def build_chart(tip: TipRecord, residual_tol=1e-8) -> NormalFormChart:
    return chart_from_jet(tip_jet(tip), tip.x_star, residual_tol)


def _unwrap_mu(mu: Param, tip: TipRecord):
    da = (mu.a - tip.a_star + 0.5) % 1.0 - 0.5
    return tip.a_star + da, mu.b


def _phi(u, a, b, tip):
    y, d = iterate_lift(tip.x_star + u, a, b, tip.p)
    return y - (tip.x_star + u) - tip.k, d - 1.0


def _aberth_polish(u, a, b, tip, max_iter=30):
    """Simultaneous Newton (Aberth) on the cluster of three zeros of ``phi``.

    Plain Newton degrades near a double or triple zero; the Aberth correction
    keeps the three iterates apart while each converges to its own zero.
    """
    u = np.array(u, dtype=complex)
    f, df = _phi(u, a, b, tip)
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(max_iter):
            w = f / df
            corr = np.array([np.sum(1.0 / (u[i] - np.delete(u, i))) for i in range(3)])
            step = w / (1.0 - w * corr)
            un = u - step
            # coincident iterates (an exact triple zero) leave nothing to polish
            if not np.all(np.isfinite(un)) or np.any(np.abs(un.imag) > 0.2):
                break
            u = un
            f, df = _phi(u, a, b, tip)
            if np.abs(step).max() <= 1e-15 * max(1e-3, np.abs(u).max()):
                break
    return u


def split_roots(mu: Param, tip: TipRecord, chart: NormalFormChart) -> CubicSplitting:
    a, b = _unwrap_mu(mu, tip)
    if abs(a - tip.a_star) > 0.05 or abs(b - tip.b_star) > 0.05:
        raise ValueError("mu must lie within 0.05 of the tip in each coordinate")
    phi = tip_jet(tip, mu=(a, b)) - Jet.variable(0.0, JET_ORDER)
    cand = np.roots(phi.coeffs[::-1])
    cand = cand[np.argsort(np.abs(cand))][:3]
    if cand.size < 3 or np.any(np.abs(cand) > ROOT_RADIUS):
        raise ConvergenceError(f"fewer than three zeros within {ROOT_RADIUS} of x*")
    # real parameters: symmetrize so the cluster stays closed under conjugation
    u = _aberth_polish(cand, a, b, tip)
    u = _conjugate_closed(u)
    if np.any(np.abs(u) > ROOT_RADIUS):
        raise ConvergenceError("root polish left the splitting window")
    z = np.array([chart(r) for r in u])
    A = -z[0] * z[1] * z[2]
    B = z[0] * z[1] + z[0] * z[2] + z[1] * z[2]
    C = -(z[0] + z[1] + z[2])
    imag = max(abs(A.imag), abs(B.imag), abs(C.imag))
    A, B, C = float(A.real), float(B.real), float(C.real)
    alpha, beta = cusp_coordinates(A, B, C)
    order = np.argsort(u.real)
    return CubicSplitting(Param(a, b), tuple(u[order]), tuple(z[order]), A, B, C,
                          alpha, beta, cubic_discriminant(A, B, C), imag)


def _conjugate_closed(u):
    """Pair a real-parameter cluster into one real root plus a conjugate pair
    when two roots are clearly non-real; otherwise make all three real."""
    im = np.abs(u.imag)
    order = np.argsort(im)
    r = u[order[0]]
    if im[order[1]] > 1e-9 * max(1.0, np.abs(u).max()):
        p, q = u[order[1]], u[order[2]]
        m = 0.5 * (p + np.conj(q))
        return np.array([r.real, m, np.conj(m)])
    return u.real.astype(complex)


@dataclass
class CuspJacobian:
    jac: np.ndarray         # rows (alpha, beta), columns (d/da, d/db)
    det: float
    dA: np.ndarray          # (dA/da, dA/db)
    dB: np.ndarray
    dC: np.ndarray
    alpha_vs_A: float       # max relative |d alpha - dA/2|
    beta_vs_B: float        # max relative |d beta + dB/3|


def alpha_beta_jacobian(tip: TipRecord, chart: NormalFormChart, h=1e-5) -> CuspJacobian:
    if not 1e-6 <= h <= 1e-3:
        raise ValueError("h must lie in [1e-6, 1e-3]")
    vals = {}
    for name, (da, db) in {"a+": (h, 0), "a-": (-h, 0), "b+": (0, h), "b-": (0, -h)}.items():
        s = split_roots(Param(tip.a_star + da, tip.b_star + db), tip, chart)
        vals[name] = np.array([s.alpha, s.beta, s.A, s.B, s.C])
    da = (vals["a+"] - vals["a-"]) / (2 * h)
    db = (vals["b+"] - vals["b-"]) / (2 * h)
    jac = np.array([[da[0], db[0]], [da[1], db[1]]])
    dA, dB, dC = np.array([da[2], db[2]]), np.array([da[3], db[3]]), np.array([da[4], db[4]])
    rel = lambda x, y: float(np.max(np.abs(x - y)) / max(np.max(np.abs(y)), 1e-300))
    return CuspJacobian(jac, float(np.linalg.det(jac)), dA, dB, dC,
                        rel(jac[0], dA / 2), rel(jac[1], -dB / 3))


@dataclass
class IterateDefect:
    m: int
    coeffs: np.ndarray      # orders 1..4 of zeta o G^{mp} o zeta^-1 - id
    defect: float


def iterate_relation_check(tip: TipRecord, chart: NormalFormChart, m: int) -> IterateDefect:
    """Expand ``zeta o g_n o zeta^-1 - id`` for ``n = m p``; cubic coefficient is ``m``."""
    if m not in (1, 2, 3):
        raise ValueError("m must be 1, 2 or 3")
    j = _iterate_jet(tip.x_star, tip.a_star, tip.b_star, m * tip.p, JET_ORDER, False)
    g = j - j[0]
    z = chart.zeta_jet()
    h = z.compose(g.compose(z.reverse()))
    c = h.coeffs[1:5] - np.array([1.0, 0.0, 0.0, 0.0])
    defect = abs(c[2] - m) + abs(c[0]) + abs(c[1]) + abs(c[3])
    return IterateDefect(m, c + np.array([1.0, 0, 0, 0]), float(defect))
