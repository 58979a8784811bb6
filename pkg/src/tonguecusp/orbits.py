"""Real periodic orbits of the sine family: census, attracting cycles, polishing."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .core import (TWO_PI, ConvergenceError, ParabolicInputError, Param, iterate_jet,
                   iterate_lift, lift, lift_prime, wrap01)

INDIFFERENT_BAND = 1e-7
ATTRACTING_MARGIN = 1e-9


class NearMultipleRootWarning(UserWarning):
    """``|G^n(x) - x - k|`` came within 1e-9 of zero without a sign change."""


class PeriodicPoint(NamedTuple):
    x: float
    winding: int
    multiplier: float


@dataclass(frozen=True)
class Cycle:
    period: int
    winding: int
    points: tuple
    multiplier: float

    @property
    def kind(self):
        if abs(self.multiplier - 1.0) <= INDIFFERENT_BAND:
            return "indifferent"
        return "attracting" if self.multiplier < 1.0 else "repelling"

    def closure_residual(self, p: Param):
        y, _ = iterate_lift(self.points[0], p.a, p.b, self.period)
        return abs(float(y) - self.points[0] - self.winding)


def _circle_dist(x, y):
    d = (x - y) % 1.0
    return np.minimum(d, 1.0 - d)


def make_cycle(p: Param, x0: float, period: int, winding: int) -> Cycle:
    """Orbit points and multiplier of the cycle through ``x0``.

    Points are rotated so that the smallest one comes first.  The winding
    integer depends on the base point, so it is recomputed for ``points[0]``;
    ``winding`` only serves as a consistency check for the orbit through ``x0``.
    """
    pts = [wrap01(x0)]
    mult = 1.0
    y = pts[0]
    for _ in range(period):
        mult *= float(lift_prime(y, p.b))
        y = wrap01(float(lift(y, p.a, p.b)))
        pts.append(y)
    pts = pts[:period]
    j = int(np.argmin(pts))
    pts = pts[j:] + pts[:j]
    y, _ = iterate_lift(pts[0], p.a, p.b, period)
    return Cycle(period, int(round(float(y) - pts[0])), tuple(pts), mult)


# census ---------------------------------------------------------------

def _displacement(x, a, b, n):
    y, d = iterate_lift(x, a, b, n)
    return y - x, d


def find_real_periodic_points(p: Param, n: int, samples_per_branch: int = 256):
    """All real solutions of ``G^n(x) = x + k`` with ``x`` in ``[0, 1)``.

    ``G^n(x) - x`` is sampled on a grid of ``samples_per_branch * 2^n``
    intervals; each crossing of an integer level is bracketed, bisected and
    Newton-polished.  Points where the displacement comes within 1e-9 of an
    integer without crossing it are reported through
    :class:`NearMultipleRootWarning`.
    """
    if not 1 <= n <= 12:
        raise ValueError("n must lie in [1, 12]")
    a, b = p.a, p.b
    m = samples_per_branch * 2 ** n
    xs = np.linspace(0.0, 1.0, m + 1)
    s, _ = _displacement(xs, a, b, n)

    fl = np.floor(s)
    kmin = np.minimum(fl[:-1], fl[1:]).astype(np.int64)
    kmax = np.maximum(fl[:-1], fl[1:]).astype(np.int64)
    candidates = np.nonzero((fl[:-1] != fl[1:]) | (s[1:] == fl[1:]))[0]

    found = []
    for i in candidates:
        for k in range(int(kmin[i]), int(kmax[i]) + 1):
            l, r = s[i] - k, s[i + 1] - k
            # half-open intervals (x_i, x_{i+1}]: every root counted once
            if not (l * r < 0.0 or r == 0.0):
                continue
            if r == 0.0:
                x = xs[i + 1]
            else:
                x = brentq(lambda t: _displacement(t, a, b, n)[0] - k,
                           xs[i], xs[i + 1], xtol=1e-15, maxiter=200)
            x = _newton_polish_scalar(x, a, b, n, k, xs[i], xs[i + 1])
            kk = k
            if x >= 1.0:
                x -= 1.0
                kk = k - (2 ** n - 1)
            _, d = iterate_lift(x, a, b, n)
            found.append(PeriodicPoint(float(x), int(kk), float(d)))

    _resolve_tangencies(xs, s, a, b, n, found)
    found.sort(key=lambda t: (t.x, t.winding))
    return found


def _resolve_tangencies(xs, s, a, b, n, found, tol=1e-9):
    """Roots hidden between two grid nodes next to an extremum of ``G^n(x) - x``.

    At each discrete extremum the critical point is solved for exactly; levels
    crossed on either monotone half are root-found, and an extremum within
    ``tol`` of a level it does not cross is reported as a near-multiple root.
    """
    ds = np.diff(s)
    turn = np.nonzero(ds[:-1] * ds[1:] < 0)[0] + 1
    for i in turn:
        lo, hi = xs[i - 1], xs[i + 1]
        slope = lambda t: float(iterate_lift(t, a, b, n)[1]) - 1.0
        try:
            xc = brentq(slope, lo, hi, xtol=1e-15)
        except ValueError:
            continue
        disp = lambda t: float(iterate_lift(t, a, b, n)[0]) - t
        hc = disp(xc)
        have = {(pt.winding, round(pt.x, 9)) for pt in found if lo <= pt.x <= hi}
        for end in (lo, hi):
            he = disp(end)
            for k in range(math.ceil(min(he, hc)), math.floor(max(he, hc)) + 1):
                if k in (he, hc) or (he - k) * (hc - k) > 0:
                    continue
                x = brentq(lambda t: disp(t) - k, min(end, xc), max(end, xc), xtol=1e-15)
                if (k, round(x, 9)) in have:
                    continue
                _, d = iterate_lift(x, a, b, n)
                found.append(PeriodicPoint(float(x), int(k), float(d)))
        gap = abs(hc - round(hc))
        if gap < tol and not any(lo <= pt.x <= hi for pt in found):
            warnings.warn(f"near-multiple root of G^{n} - id - k at x~{xc:.12g} "
                          f"(|residual| = {gap:.3g} < {tol}, no sign change)",
                          NearMultipleRootWarning)


def _newton_polish_scalar(x, a, b, n, k, lo, hi, steps=3):
    for _ in range(steps):
        y, d = iterate_lift(x, a, b, n)
        if d == 1.0:
            break
        step = (float(y) - x - k) / (float(d) - 1.0)
        xn = x - step
        if not lo - 1e-12 <= xn <= hi + 1e-12:
            break
        x = xn
        if abs(step) < 1e-16:
            break
    return x


# polishing ------------------------------------------------------------

def polish_cycle(p: Param, c: Cycle, max_steps: int = 50, tol: float = 1e-12) -> Cycle:
    """Newton on ``x -> G^p(x) - x - k`` starting from ``c.points[0]``."""
    x = c.points[0]
    q, k = c.period, c.winding

    def residual(x):
        jet = iterate_jet(p, x, q, 1)
        return jet[0] - x - k, jet[1]

    r, d = residual(x)
    if abs(r) >= 0.01:
        raise ConvergenceError(f"cycle residual {abs(r):.3g} too large to polish")
    if abs(d - 1.0) <= 1e-6:
        raise ParabolicInputError(
            f"multiplier {d:.12g} is within 1e-6 of 1 (parabolic cycle)")
    for _ in range(max_steps):
        if abs(r) <= tol:
            return make_cycle(p, x, q, k)
        if abs(d - 1.0) <= 1e-6:
            raise ParabolicInputError("Newton reached a parabolic point")
        x = x - r / (d - 1.0)
        r, d = residual(x)
    if abs(r) <= tol:
        return make_cycle(p, x, q, k)
    raise ConvergenceError(f"Newton did not converge in {max_steps} steps (|r|={abs(r):.3g})")


# attracting cycles ----------------------------------------------------

@dataclass
class _Detection:
    period: np.ndarray      # (cells, seeds), 0 when nothing detected
    x: np.ndarray           # polished point, or nan
    winding: np.ndarray
    multiplier: np.ndarray


def _forward(x, a, b, steps):
    """``steps`` iterates of the circle map, in place on a copy of ``x``."""
    x = np.array(x, dtype=float)
    bp = np.broadcast_to(b / math.pi, x.shape)
    t = np.empty_like(x)
    fl = np.empty_like(x)
    for _ in range(steps):
        np.multiply(x, TWO_PI, out=t)
        np.sin(t, out=t)
        t *= bp
        x *= 2.0
        x += a
        x += t
        np.floor(x, out=fl)
        x -= fl
    return x


def _detect_periods(x, a, b, max_period, tol):
    """Minimal ``q <= max_period`` with ``|F^q(x) - x| < tol`` on the circle."""
    period = np.zeros(x.shape, dtype=np.int64)
    winding = np.zeros(x.shape, dtype=np.int64)
    y = x.copy()
    for q in range(1, max_period + 1):
        y = lift(y, a, b)
        hit = (period == 0) & (_circle_dist(y, x) < tol)
        period[hit] = q
        winding[hit] = np.round(y - x)[hit]
    return period, winding


def _newton_batch(x, a, b, period, winding, steps=40):
    """Vectorized Newton polish of ``G^q(x) = x + k`` (``q`` varies per entry)."""
    x = x.copy()
    res = np.full(x.shape, np.inf)
    mult = np.full(x.shape, np.nan)
    for q in np.unique(period[period > 0]):
        sel = period == q
        xs, ks = x[sel], winding[sel]
        aa = a[sel] if np.ndim(a) else a
        bb = b[sel] if np.ndim(b) else b
        for _ in range(steps):
            y, d = iterate_lift(xs, aa, bb, int(q))
            r = y - xs - ks
            denom = np.where(np.abs(d - 1.0) < 1e-14, np.nan, d - 1.0)
            step = r / denom
            step = np.where(np.isfinite(step), np.clip(step, -0.05, 0.05), 0.0)
            xs = xs - step
            if np.all(np.abs(step) < 1e-15):
                break
        y, d = iterate_lift(xs, aa, bb, int(q))
        res[sel] = np.abs(y - xs - ks)
        mult[sel] = d
        x[sel] = xs
    return x, res, mult


def _attracting_batch(a, b, max_period=8, transient=2000, tol=1e-6, seeds=64,
                      block=250):
    """Detect attracting cycles for arrays of parameters.

    Returns per-cell, per-seed detections.  Cells whose seeds have all locked
    onto a verified attracting cycle stop iterating early; others run the full
    transient.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    ncell = a.size
    x = np.tile((np.arange(seeds) + 0.5) / seeds, (ncell, 1))
    A = np.repeat(a[:, None], seeds, axis=1)
    B = np.repeat(b[:, None], seeds, axis=1)
    period = np.zeros((ncell, seeds), dtype=np.int64)
    winding = np.zeros((ncell, seeds), dtype=np.int64)
    xp = np.full((ncell, seeds), np.nan)
    mult = np.full((ncell, seeds), np.nan)

    active = np.arange(ncell)
    done = 0
    while active.size and done < transient:
        steps = min(block, transient - done)
        x[active] = _forward(x[active], A[active], B[active], steps)
        done += steps
        xa, Aa, Ba = x[active], A[active], B[active]
        per, wind = _detect_periods(xa, Aa, Ba, max_period, tol)
        xpol, res, mu = _newton_batch(xa, Aa, Ba, per, wind)
        ok = (per > 0) & (res <= 1e-10) & (mu < 1.0 - ATTRACTING_MARGIN) & (mu > 0)
        per = np.where(ok, per, 0)
        period[active] = per
        winding[active] = np.where(ok, wind, 0)
        xp[active] = np.where(ok, xpol % 1.0, np.nan)
        mult[active] = np.where(ok, mu, np.nan)
        finished = np.all(ok, axis=1)
        active = active[~finished]
    return _Detection(period, xp, winding, mult)


def _distinct_cycles(p: Param, det_row_period, det_row_x, det_row_winding):
    cycles = []
    for q, x, k in zip(det_row_period, det_row_x, det_row_winding):
        if q == 0:
            continue
        c = make_cycle(p, float(x), int(q), int(k))
        if any(c.period == o.period and _circle_dist(c.points[0], o.points[0]) < 1e-7
               for o in cycles):
            continue
        cycles.append(c)
    cycles.sort(key=lambda c: (c.period, c.points[0]))
    return cycles


def attracting_cycles(p: Param, max_period: int = 8, transient: int = 2000,
                      tol: float = 1e-6, seeds: int = 64):
    """Every distinct attracting cycle reached from the seeds (normally 0 or 1)."""
    det = _attracting_batch([p.a], [p.b], max_period, transient, tol, seeds)
    return _distinct_cycles(p, det.period[0], det.x[0], det.winding[0])


def attracting_cycle(p: Param, max_period: int = 8, transient: int = 2000,
                     tol: float = 1e-6, seeds: int = 64) -> Optional[Cycle]:
    """The attracting cycle of ``F_p`` with period at most ``max_period``, if any.

    Returns ``None`` when none of the seeds settles on a cycle whose polished
    multiplier is below ``1 - 1e-9``.
    """
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    cycles = attracting_cycles(p, max_period, transient, tol, seeds)
    return cycles[0] if cycles else None


def minimal_period(p: Param, x: float, n: int, tol: float = 1e-9):
    """Smallest divisor ``q`` of ``n`` with ``F^q(x) = x`` on the circle."""
    for q in range(1, n + 1):
        if n % q:
            continue
        y, _ = iterate_lift(x, p.a, p.b, q)
        if _circle_dist(float(y), x) < tol:
            return q
    return n


def cycle_from_point(p: Param, x: float, n: int) -> Cycle:
    """The cycle (under its minimal period) through a period-``n`` point."""
    q = minimal_period(p, x, n)
    y, _ = iterate_lift(x, p.a, p.b, q)
    return make_cycle(p, x, q, int(round(float(y) - x)))

