"""Tongue diagram, boundary continuation, tips and the cusp width law."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from .core import (ConvergenceError, Param, SingularJacobianError, _iterate_jet,
                   iterate_lift)
from .orbits import _attracting_batch, attracting_cycle


class TransversalityError(ConvergenceError):
    """The tip Jacobian is singular at a converged solution."""


@dataclass(frozen=True)
class GridRecord:
    a: float
    b: float
    period: int
    multiplier: Optional[float]


@dataclass(frozen=True)
class BoundarySample:
    b: float
    a: float
    x: float
    residual_value: float
    residual_multiplier: float

    def __post_init__(self):
        for name in ("b", "a", "x", "residual_value", "residual_multiplier"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass
class BoundaryCurve:
    period: int
    winding: int
    side: str
    samples: List[BoundarySample] = field(default_factory=list)
    stop_reason: str = ""


@dataclass(frozen=True)
class TipRecord:
    p: int
    k: int
    x_star: float
    a_star: float
    b_star: float
    residual_norm: float
    third_deriv: float
    jacobian_det: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "k", int(self.k))
        for name in ("x_star", "a_star", "b_star", "residual_norm", "third_deriv", "jacobian_det"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def param(self):
        return Param(self.a_star, self.b_star)


# grid scan -------------------------------------------------------------

def grid_axes(a_range, b_range, na, nb):
    """Left-closed grids: ``a_i = a0 + i (a1 - a0)/na``, same for ``b``.

    The right end is excluded, so ``[0, 1)`` in ``a`` is a periodic grid and
    ``b = 1`` is never sampled.
    """
    a0, a1 = a_range
    b0, b1 = b_range
    a = a0 + (a1 - a0) * np.arange(na) / na
    b = b0 + (b1 - b0) * np.arange(nb) / nb
    return a, b


def scan_grid(a_range=(0.0, 1.0), b_range=(0.5, 1.0), na=600, nb=300,
              max_period=8, transient=2000, tol=1e-6, seeds=16, chunk=4096):
    """Attracting-cycle period on a grid, row-major in ``b`` then ``a``."""
    if na < 2 or nb < 2:
        raise ValueError("na and nb must be >= 2")
    if not (0.0 < b_range[0] < 1.0 and 0.0 < b_range[1] <= 1.0 and b_range[0] < b_range[1]):
        raise ValueError("b_range must lie inside (0, 1)")
    a_ax, b_ax = grid_axes(a_range, b_range, na, nb)
    B, A = np.meshgrid(b_ax, a_ax, indexing="ij")
    A, B = A.ravel(), B.ravel()
    period = np.zeros(A.size, dtype=np.int64)
    mult = np.full(A.size, np.nan)
    for s in range(0, A.size, chunk):
        det = _attracting_batch(A[s:s + chunk], B[s:s + chunk], max_period,
                                transient, tol, seeds)
        per = det.period
        has = per > 0
        # minimal detected period wins; all seeds agree when the cycle is unique
        pick = np.where(has, per, max_period + 1).argmin(axis=1)
        rows = np.arange(per.shape[0])
        period[s:s + chunk] = np.where(has.any(axis=1), per[rows, pick], 0)
        mult[s:s + chunk] = np.where(has.any(axis=1), det.multiplier[rows, pick], np.nan)
    return [GridRecord(float(a), float(b), int(q), None if q == 0 else float(m))
            for a, b, q, m in zip(A, B, period, mult)]


# 2-system (boundary) and 3-system (tip) ---------------------------------

def _jet(x, a, b, p, K):
    return _iterate_jet(x, a, b, p, K, True)


def boundary_residual(x, a, b, p, k):
    """Residual of ``{G^p(x)-x-k, (G^p)'(x)-1}`` and its Jacobian in ``(x, a)``."""
    j = _jet(x, a, b, p, 2)
    r = np.array([j[0] - x - k, j[1] - 1.0])
    J = np.array([[j[1] - 1.0, j.partial_a[0]],
                  [2.0 * j[2], j.partial_a[1]]])
    db = np.array([j.partial_b[0], j.partial_b[1]])
    return r, J, db


def tip_residual(x, a, b, p, k):
    """Residual of the triple-zero system and its Jacobian in ``(x, a, b)``."""
    j = _jet(x, a, b, p, 3)
    r = np.array([j[0] - x - k, j[1] - 1.0, 2.0 * j[2]])
    J = np.array([[j[1] - 1.0, j.partial_a[0], j.partial_b[0]],
                  [2.0 * j[2], j.partial_a[1], j.partial_b[1]],
                  [6.0 * j[3], 2.0 * j.partial_a[2], 2.0 * j.partial_b[2]]])
    return r, J, 6.0 * j[3]


def _correct_boundary(x, a, b, p, k, max_iter=8, tol=1e-13):
    """Newton in ``(x, a)`` at fixed ``b``; returns (x, a, residual, iterations)."""
    for it in range(max_iter):
        r, J, _ = boundary_residual(x, a, b, p, k)
        if np.max(np.abs(r)) <= tol:
            return x, a, r, it
        det = np.linalg.det(J)
        if abs(det) <= 1e-14 * max(1.0, np.abs(J).max() ** 2):
            raise SingularJacobianError("boundary Jacobian singular", (x, a, b))
        dx, da = np.linalg.solve(J, -r)
        x, a = x + dx, a + da
    r, _, _ = boundary_residual(x, a, b, p, k)
    if np.max(np.abs(r)) <= tol:
        return x, a, r, max_iter
    raise ConvergenceError(f"boundary corrector failed at b={b!r} (|r|={np.abs(r).max():.3g})")


def _side(x, a, b, p):
    j = _jet(x, a, b, p, 2)
    return "left" if j[2] < 0 else "right"


def trace_boundary(seed, p, k, b_start, b_end, h0=1e-3, h_min=1e-7,
                   max_steps=10000, accept_tol=1e-10):
    """Continue one boundary branch as a graph over ``b``.

    Tangent predictor, Newton corrector in ``(x, a)``; the step is halved when
    the corrector fails or needs more than five iterations.  Tracing stops at
    ``b_end`` or when the corrector fails at the minimal step (the expected
    outcome next to the tip).
    """
    x, a = seed
    try:
        r0, _, _ = boundary_residual(x, a, b_start, p, k)
    except FloatingPointError:
        r0 = np.array([np.inf, np.inf])
    if np.max(np.abs(r0)) > 1e-6:
        raise ConvergenceError(
            f"seed is not on a period-{p} boundary (|r|={np.abs(r0).max():.3g} > 1e-6)")
    x, a, r, _ = _correct_boundary(x, a, b_start, p, k)
    curve = BoundaryCurve(p, k, _side(x, a, b_start, p))
    curve.samples.append(BoundarySample(b_start, a, x, abs(r[0]), abs(r[1])))
    direction = 1.0 if b_end > b_start else -1.0
    b, h = b_start, h0
    for _ in range(max_steps):
        if direction * (b_end - b) <= 1e-15:
            curve.stop_reason = "reached b_end"
            return curve
        step = min(h, abs(b_end - b))
        bn = b + direction * step
        _, J, db = boundary_residual(x, a, b, p, k)
        try:
            tx, ta = np.linalg.solve(J, -db)
        except np.linalg.LinAlgError:
            tx = ta = 0.0
        xp, ap = x + tx * (bn - b), a + ta * (bn - b)
        try:
            xn, an, rn, its = _correct_boundary(xp, ap, bn, p, k)
            ok = np.max(np.abs(rn)) <= accept_tol and its <= 5
        except (ConvergenceError, np.linalg.LinAlgError) as exc:
            ok, err = False, exc
        if ok:
            x, a, b = xn, an, bn
            curve.samples.append(BoundarySample(b, a, x, abs(rn[0]), abs(rn[1])))
            h = min(2.0 * h, h0) if its <= 3 else h
            continue
        h *= 0.5
        if h < h_min:
            where = f"(x, a, b) = ({x:.12g}, {a:.12g}, {b:.12g})"
            reason = "singular Jacobian" if isinstance(locals().get("err"), SingularJacobianError) \
                else "corrector failed"
            curve.stop_reason = f"{reason} at minimal step near {where}"
            return curve
    curve.stop_reason = "max_steps"
    return curve


def _normalize_tip(p, k, x, a):
    mx, ma = math.floor(x), math.floor(a)
    return x - mx, a - ma, k - (2 ** p - 1) * (mx + ma)


def find_tip(seed, p, k, tol=1e-11, max_iter=40, det_rel_tol=1e-6) -> TipRecord:
    """Newton on ``{G^p - id - k, (G^p)' - 1, (G^p)''}`` in ``(x, a, b)``."""
    x, a, b = map(float, seed)
    for _ in range(max_iter):
        r, J, _ = tip_residual(x, a, b, p, k)
        if np.linalg.norm(r) <= tol * 1e-2:
            break
        try:
            d = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError("tip Jacobian singular during Newton", (x, a, b)) from exc
        lam = 1.0
        # damp steps that would leave the parameter space
        while not 0.0 < b + lam * d[2] < 1.0 and lam > 1e-4:
            lam *= 0.5
        x, a, b = x + lam * d[0], a + lam * d[1], b + lam * d[2]
        if not np.all(np.isfinite([x, a, b])):
            raise ConvergenceError("tip Newton diverged")
        if np.linalg.norm(lam * d) < 1e-16 * max(1.0, abs(x), abs(a)):
            break
    r, J, third = tip_residual(x, a, b, p, k)
    res = float(np.linalg.norm(r))
    if not res <= tol:
        raise ConvergenceError(f"tip Newton did not converge (|r|={res:.3g})")
    if not 0.0 < b < 1.0:
        raise ConvergenceError(f"tip Newton left the parameter space (b={b!r})")
    det = float(np.linalg.det(J))
    scale = float(np.prod(np.linalg.norm(J, axis=1)))
    if abs(det) <= det_rel_tol * scale:
        raise TransversalityError(
            f"tip Jacobian singular at (x, a, b) = ({x!r}, {a!r}, {b!r}): "
            f"|det| = {abs(det):.3g} vs row-norm product {scale:.3g}")
    xn, an, kn = _normalize_tip(p, k, x, a)
    return TipRecord(p, int(kn), xn, an, b, res, float(third), det)


# branch solves at fixed b -----------------------------------------------

def _a_on_level(x, b, p, k, a0):
    """Solve ``G^p_a(x) = x + k`` for ``a`` (monotone in ``a``)."""
    a = a0
    for _ in range(60):
        j = _jet(x, a, b, p, 1)
        r = j[0] - x - k
        step = r / j.partial_a[0]
        a -= step
        if abs(step) < 1e-16 * max(1.0, abs(a)):
            break
    return a


def _mult_defect(x, b, p, k, a0):
    a = _a_on_level(x, b, p, k, a0)
    _, d = iterate_lift(x, a, b, p)
    return float(d) - 1.0, a


def boundary_pair(tip: TipRecord, b: float, window: float = 0.15):
    """The two boundary points of the tongue of ``tip`` at height ``b > b*``.

    Along the curve ``G^p_a(x) = x + k`` the boundary points are the critical
    points of ``x -> a(x)``, i.e. the zeros of the multiplier defect.  These
    are bracketed outward from ``x*`` and then polished with the 2-system.
    Returns ``(left, right)`` as :class:`BoundarySample`.
    """
    p, k, xs, a0 = tip.p, tip.k, tip.x_star, tip.a_star
    f0, _ = _mult_defect(xs, b, p, k, a0)

    def bracket(direction):
        h = 1e-4
        prev = xs
        while h <= window:
            xn = xs + direction * h
            fn, _ = _mult_defect(xn, b, p, k, a0)
            if np.sign(fn) != np.sign(f0) and fn != 0.0:
                return (prev, xn) if direction > 0 else (xn, prev)
            prev = xn
            h *= 1.5
        raise ConvergenceError(f"no boundary point within {window} of x* at b={b!r}")

    out = []
    for direction in (-1.0, 1.0):
        lo, hi = bracket(direction)
        xr = brentq(lambda t: _mult_defect(t, b, p, k, a0)[0], lo, hi, xtol=1e-15, maxiter=200)
        ar = _a_on_level(xr, b, p, k, a0)
        xr, ar, r, _ = _correct_boundary(xr, ar, b, p, k, max_iter=12)
        out.append(BoundarySample(b, ar, xr, abs(r[0]), abs(r[1])))
    out.sort(key=lambda s: s.a)
    return out[0], out[1]


@dataclass
class ContactFit:
    exponent: float
    prefactor: float
    residual: float
    offsets: np.ndarray
    widths: np.ndarray
    failures: list


def fit_power_law(offsets, widths):
    """Least-squares slope of ``log(width)`` against ``log(offset)``."""
    lx, ly = np.log(np.asarray(offsets)), np.log(np.asarray(widths))
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    rms = float(np.sqrt(np.mean((A @ [slope, icpt] - ly) ** 2)))
    return float(slope), float(math.exp(icpt)), rms


def contact_exponent(tip: TipRecord, offsets) -> ContactFit:
    """Fit ``width(b* + db) ~ C db^e`` from the two boundary branches."""
    offsets = np.asarray(offsets, dtype=float)
    if offsets.size < 6:
        raise ValueError("need at least 6 offsets")
    if np.any(offsets < 1e-5) or np.any(offsets > 1e-2):
        raise ValueError("offsets must lie in [1e-5, 1e-2]")
    used, widths, failures = [], [], []
    for db in offsets:
        try:
            left, right = boundary_pair(tip, tip.b_star + db)
        except ConvergenceError as exc:
            failures.append((float(db), str(exc)))
            continue
        used.append(db)
        widths.append(right.a - left.a)
    if len(used) < 4:
        raise ConvergenceError(f"only {len(used)} branch solves succeeded: {failures}")
    slope, pref, rms = fit_power_law(used, widths)
    return ContactFit(slope, pref, rms, np.array(used), np.array(widths), failures)


# locating tips ---------------------------------------------------------

def tongue_sections(p, b, na=2000, max_period=8):
    """Intervals in ``a`` at height ``b`` with an attracting cycle of period ``p``."""
    a_ax = np.arange(na) / na
    det = _attracting_batch(a_ax, np.full(na, b), max_period, 2000, 1e-6, 8)
    per = np.where(det.period > 0, det.period, 0).max(axis=1)
    inside = per == p
    sections = []
    i = 0
    while i < na:
        if inside[i]:
            j = i
            while j + 1 < na and inside[j + 1]:
                j += 1
            sections.append((a_ax[i], a_ax[j]))
            i = j + 1
        else:
            i += 1
    if len(sections) > 1 and sections[0][0] == 0.0 and sections[-1][1] == a_ax[-1]:
        first = sections.pop(0)
        sections[-1] = (sections[-1][0], first[1] + 1.0)
    return sections


def locate_tip(p, a_inside, b, h0=2e-3):
    """Tip of the period-``p`` tongue containing ``(a_inside, b)``.

    Walks in ``a`` from the interior to the boundary at fixed ``b``, traces
    that boundary branch downward, and hands the end point to the tip Newton.
    """
    c = attracting_cycle(Param(a_inside, b), max_period=p)
    if c is None or c.period != p:
        raise ConvergenceError(f"no period-{p} attracting cycle at ({a_inside}, {b})")
    x0, k = c.points[0], c.winding
    # along G^p_a(x) = x + k the multiplier defect is negative at x0 and
    # vanishes at the boundary; bracket its zero on the right of x0
    h, prev = 1e-4, x0
    while True:
        xn = x0 + h
        fn, _ = _mult_defect(xn, b, p, k, a_inside)
        if fn > 0:
            break
        prev, h = xn, h * 1.5
        if h > 0.5:
            raise ConvergenceError("no boundary point found beside the attracting cycle")
    xr = brentq(lambda t: _mult_defect(t, b, p, k, a_inside)[0], prev, xn,
                xtol=1e-15, maxiter=200)
    ar = _a_on_level(xr, b, p, k, a_inside)
    x, a, _, _ = _correct_boundary(xr, ar, b, p, k, max_iter=30, tol=1e-12)
    curve = trace_boundary((x, a), p, k, b, 1e-3, h0=h0)
    last = curve.samples[-1]
    return find_tip((last.x, last.a, last.b), p, k)
