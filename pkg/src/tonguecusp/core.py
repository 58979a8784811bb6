"""The sine family of degree-2 circle maps and its basic calculus.

The real lift is ``G(x) = 2x + a + (b/pi) sin(2 pi x)``; in the global
coordinate ``w = exp(2 pi i z)`` the map reads
``w -> exp(2 pi i a) w^2 exp(b (w - 1/w))``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext

import numpy as np

from .jet import MAX_ORDER, Jet

TWO_PI = 2.0 * math.pi


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class ParabolicInputError(ConvergenceError):
    """Newton was asked to polish a cycle whose multiplier is (nearly) one."""


class SingularJacobianError(ConvergenceError):
    """A Newton system became singular; ``location`` records where."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


def wrap01(x):
    """Canonical representative in ``[0, 1)``."""
    r = x % 1.0
    if r >= 1.0:
        r = 0.0
    return r


@dataclass(frozen=True)
class Param:
    """A parameter ``lambda = (a, b)``; ``a`` is taken modulo 1."""

    a: float
    b: float

    def __post_init__(self):
        b = float(self.b)
        if not 0.0 < b < 1.0:
            raise ValueError(f"b must lie in (0, 1), got {b!r}")
        object.__setattr__(self, "a", wrap01(float(self.a)))
        object.__setattr__(self, "b", b)

    def shifted(self, da=0.0, db=0.0):
        return Param(self.a + da, self.b + db)


@dataclass(frozen=True)
class TorusPoint:
    """A point of the complex cylinder C/Z, real part reduced to ``[0, 1)``."""

    z: complex

    def __post_init__(self):
        z = complex(self.z)
        object.__setattr__(self, "z", complex(wrap01(z.real), z.imag))

    @property
    def w(self):
        return cmath.exp(2j * math.pi * self.z)

    @classmethod
    def from_w(cls, w):
        if w == 0:
            raise ValueError("w = 0 is the end +i*infinity, not a point of C/Z")
        return cls(cmath.log(w) / (2j * math.pi))


@dataclass(frozen=True)
class CriticalPair:
    c_plus: TorusPoint
    c_minus: TorusPoint
    w_plus: float
    w_minus: float


# real lift -------------------------------------------------------------

def lift(x, a, b):
    """Vectorized lift ``G``; accepts real or complex ``x``."""
    return 2.0 * x + a + (b / math.pi) * np.sin(TWO_PI * x)


def lift_prime(x, b):
    return 2.0 + 2.0 * b * np.cos(TWO_PI * x)


def lift_eval(p: Param, x):
    return lift(x, p.a, p.b)


def deriv_x(p: Param, x, order: int):
    """Derivative of the lift of the given order (1, 2 or 3)."""
    if order == 1:
        return 2.0 + 2.0 * p.b * np.cos(TWO_PI * x)
    if order == 2:
        return -4.0 * math.pi * p.b * np.sin(TWO_PI * x)
    if order == 3:
        return -8.0 * math.pi ** 2 * p.b * np.cos(TWO_PI * x)
    raise ValueError("order must be 1, 2 or 3")


def iterate_lift(x, a, b, n):
    """``G^n(x)`` and ``(G^n)'(x)`` by the chain rule, vectorized over ``x``.

    Integer parts are split off at every step (``G(x + m) = G(x) + 2m``) so
    the working value stays in the unit strip.
    """
    x = np.asarray(x)
    y = x.copy() if x.ndim else x + 0.0
    offset = np.zeros(np.shape(x))
    d = np.ones(np.shape(x), dtype=np.result_type(x, np.float64))
    for _ in range(n):
        d = d * lift_prime(y, b)
        y = lift(y, a, b)
        m = np.floor(np.real(y))
        y = y - m
        offset = 2.0 * offset + m
    return y + offset, d


# w-coordinate ------------------------------------------------------------

def map_eval_w(p: Param, w):
    if np.any(np.asarray(w) == 0):
        raise ValueError("w must be nonzero")
    return np.exp(2j * math.pi * p.a) * w ** 2 * np.exp(p.b * (w - 1.0 / w))


def critical_points(p: Param) -> CriticalPair:
    # roots of b w^2 + 2w + b, correctly rounded; |w-| ~ 2/b makes every ulp count
    with localcontext() as ctx:
        ctx.prec = 40
        b = Decimal(p.b)
        s = 1 + (1 - b * b).sqrt()
        w_minus = float(-s / b)
        w_plus = float(-b / s)
    return CriticalPair(TorusPoint.from_w(w_plus), TorusPoint.from_w(w_minus),
                        w_plus, w_minus)


# jets ---------------------------------------------------------------------

def lift_step_jet(x: Jet, a, b) -> Jet:
    """Apply ``G`` to a jet; ``a`` and ``b`` may be partial-carrying constants."""
    s = (x * TWO_PI).sin()
    return 2.0 * x + a + s * (b * (1.0 / math.pi))


def iterate_jet(p: Param, x0, n: int, K: int, with_param_partials: bool = False,
                a=None) -> Jet:
    """Jet of ``u -> G^n(x0 + u)`` to order ``K``.

    Coefficient ``j`` equals ``(G^n)^{(j)}(x0) / j!``.  With
    ``with_param_partials`` every coefficient carries its ``d/da`` and
    ``d/db``.  ``a`` overrides ``p.a`` so solvers can work with an unreduced
    lift parameter.
    """
    if not 1 <= K <= MAX_ORDER:
        raise ValueError(f"K must lie in [1, {MAX_ORDER}]")
    if n < 0:
        raise ValueError("n must be non-negative")
    a_val = p.a if a is None else a
    return _iterate_jet(x0, a_val, p.b, n, K, with_param_partials)


def _iterate_jet(x0, a, b, n, K, partials):
    if partials:
        aj = Jet.constant(a, K, da=1.0)
        bj = Jet.constant(b, K, db=1.0)
    else:
        aj, bj = a, b
    x = Jet.variable(x0, K)
    offset = 0.0
    for _ in range(n):
        x = lift_step_jet(x, aj, bj)
        m = math.floor(np.real(x.coeffs[0]))
        x = x - m
        offset = 2.0 * offset + m
    return x + offset
