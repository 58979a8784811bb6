"""Truncated Taylor jets with optional first-order parameter partials.

A :class:`Jet` of order ``K`` stores the coefficients ``c_0 .. c_K`` of a
power series in a local variable ``u``.  Each coefficient may also carry its
first derivatives with respect to the two family parameters ``(a, b)``; those
are propagated with dual-number rules, so products of two partial-carrying
cells drop the second-order terms.
"""

from __future__ import annotations

import math
from numbers import Number

import numpy as np

MAX_ORDER = 8


def _conv(x, y, n):
    return np.convolve(x, y)[:n]


class Jet:
    """Order-``K`` truncated series ``sum_j c_j u^j``.

    ``partials`` is either ``None`` or an array of shape ``(2, K+1)`` holding
    the ``d/da`` and ``d/db`` derivatives of every coefficient.
    """

    __slots__ = ("coeffs", "partials")

    def __init__(self, coeffs, partials=None):
        coeffs = np.asarray(coeffs)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise ValueError("coeffs must be a non-empty 1-d sequence")
        if coeffs.size - 1 > MAX_ORDER:
            raise ValueError(f"jet order {coeffs.size - 1} exceeds {MAX_ORDER}")
        dtype = np.result_type(coeffs.dtype, np.float64)
        if partials is not None:
            partials = np.asarray(partials)
            dtype = np.result_type(dtype, partials.dtype)
            if partials.shape != (2, coeffs.size):
                raise ValueError("partials must have shape (2, K+1)")
            partials = partials.astype(dtype)
        self.coeffs = coeffs.astype(dtype)
        self.partials = partials

    # construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, order, da=None, db=None):
        c = np.zeros(order + 1, dtype=np.result_type(value, np.float64))
        c[0] = value
        if da is None and db is None:
            return cls(c)
        d = np.zeros((2, order + 1), dtype=c.dtype)
        d[0, 0] = 0.0 if da is None else da
        d[1, 0] = 0.0 if db is None else db
        return cls(c, d)

    @classmethod
    def variable(cls, x0, order):
        """The jet of ``u -> x0 + u``."""
        c = np.zeros(order + 1, dtype=np.result_type(x0, np.float64))
        c[0] = x0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    # basic properties ---------------------------------------------------

    @property
    def order(self):
        return self.coeffs.size - 1

    @property
    def has_partials(self):
        return self.partials is not None

    @property
    def partial_a(self):
        if self.partials is None:
            return np.zeros_like(self.coeffs)
        return self.partials[0]

    @property
    def partial_b(self):
        if self.partials is None:
            return np.zeros_like(self.coeffs)
        return self.partials[1]

    def __len__(self):
        return self.coeffs.size

    def __getitem__(self, j):
        return self.coeffs[j]

    def __repr__(self):
        tag = ", with partials" if self.has_partials else ""
        return f"Jet(order={self.order}, coeffs={self.coeffs!r}{tag})"

    def derivative_value(self, j):
        """``d^j/du^j`` of the series at ``u = 0``."""
        return self.coeffs[j] * math.factorial(j)

    def drop_partials(self):
        return Jet(self.coeffs.copy())

    def truncate(self, order):
        p = None if self.partials is None else self.partials[:, : order + 1]
        return Jet(self.coeffs[: order + 1], p)

    def __call__(self, u):
        """Evaluate the truncated polynomial (values only)."""
        return np.polynomial.polynomial.polyval(u, self.coeffs)

    # arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError("jet orders differ")
            return other
        if isinstance(other, (Number, np.number)):
            return Jet.constant(other, self.order)
        return NotImplemented

    @staticmethod
    def _combine_partials(pa, pb):
        if pa is None:
            return None if pb is None else pb.copy()
        if pb is None:
            return pa.copy()
        return pa + pb

    def __neg__(self):
        return Jet(-self.coeffs, None if self.partials is None else -self.partials)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet(self.coeffs + other.coeffs,
                   self._combine_partials(self.partials, other.partials))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (Number, np.number)):
            return Jet(self.coeffs * other,
                       None if self.partials is None else self.partials * other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = self.coeffs.size
        c = _conv(self.coeffs, other.coeffs, n)
        d = None
        if self.partials is not None or other.partials is not None:
            d = np.zeros((2, n), dtype=np.result_type(c, self.partial_a, other.partial_a))
            for i in range(2):
                if other.partials is not None:
                    d[i] += _conv(self.coeffs, other.partials[i], n)
                if self.partials is not None:
                    d[i] += _conv(self.partials[i], other.coeffs, n)
        return Jet(c, d)

    __rmul__ = __mul__

    def reciprocal(self):
        c0 = self.coeffs[0]
        if c0 == 0:
            raise ZeroDivisionError("reciprocal of a jet with zero constant term")
        n = self.coeffs.size
        r = np.zeros(n, dtype=np.result_type(self.coeffs, np.float64))
        r[0] = 1.0 / c0
        for k in range(1, n):
            r[k] = -np.dot(self.coeffs[1 : k + 1], r[k - 1 :: -1][:k]) / c0
        out = Jet(r)
        if self.partials is not None:
            # d(1/f) = -df / f^2, truncated jet-wise
            d = np.zeros((2, n), dtype=np.result_type(r, self.partials))
            r2 = _conv(r, r, n)
            for i in range(2):
                d[i] = -_conv(self.partials[i], r2, n)
            out = Jet(r, d)
        return out

    def __truediv__(self, other):
        if isinstance(other, (Number, np.number)):
            return self * (1.0 / other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = Jet.constant(1.0, self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # elementary functions ----------------------------------------------

    def sincos(self):
        """Return the jets of ``sin(self)`` and ``cos(self)``."""
        x = self.coeffs
        n = x.size
        dtype = np.result_type(x, np.float64)
        s = np.zeros(n, dtype=dtype)
        c = np.zeros(n, dtype=dtype)
        s[0], c[0] = np.sin(x[0]), np.cos(x[0])
        jx = np.arange(n) * x
        for k in range(1, n):
            s[k] = np.dot(jx[1 : k + 1], c[k - 1 :: -1][:k]) / k
            c[k] = -np.dot(jx[1 : k + 1], s[k - 1 :: -1][:k]) / k
        if self.partials is None:
            return Jet(s), Jet(c)
        xd = self.partials
        sd = np.zeros((2, n), dtype=np.result_type(dtype, xd))
        cd = np.zeros_like(sd)
        jxd = np.arange(n) * xd
        for i in range(2):
            sd[i, 0] = c[0] * xd[i, 0]
            cd[i, 0] = -s[0] * xd[i, 0]
            for k in range(1, n):
                sd[i, k] = (np.dot(jxd[i, 1 : k + 1], c[k - 1 :: -1][:k])
                            + np.dot(jx[1 : k + 1], cd[i, k - 1 :: -1][:k])) / k
                cd[i, k] = -(np.dot(jxd[i, 1 : k + 1], s[k - 1 :: -1][:k])
                             + np.dot(jx[1 : k + 1], sd[i, k - 1 :: -1][:k])) / k
        return Jet(s, sd), Jet(c, cd)

    def sin(self):
        return self.sincos()[0]

    def cos(self):
        return self.sincos()[1]

    def exp(self):
        x = self.coeffs
        n = x.size
        e = np.zeros(n, dtype=np.result_type(x, np.float64))
        e[0] = np.exp(x[0])
        jx = np.arange(n) * x
        for k in range(1, n):
            e[k] = np.dot(jx[1 : k + 1], e[k - 1 :: -1][:k]) / k
        out = Jet(e)
        if self.partials is not None:
            d = np.zeros((2, n), dtype=np.result_type(e, self.partials))
            for i in range(2):
                d[i] = _conv(self.partials[i], e, n)
            out = Jet(e, d)
        return out

    # composition and reversion -----------------------------------------

    def compose(self, inner):
        """Jet of ``self(inner(u))``.

        ``inner`` must vanish at ``u = 0`` (its constant value is zero); its
        constant term may still carry parameter partials.
        """
        if inner.order != self.order:
            raise ValueError("jet orders differ")
        if abs(inner.coeffs[0]) > 1e-300:
            raise ValueError("inner jet must have zero constant term")
        inner = Jet(np.where(np.arange(inner.order + 1) == 0, 0.0, inner.coeffs),
                    inner.partials)
        out = Jet.constant(self.coeffs[-1], self.order,
                           *(self.partials[:, -1] if self.partials is not None else (None, None)))
        for j in range(self.order - 1, -1, -1):
            cj = Jet.constant(self.coeffs[j], self.order,
                              *(self.partials[:, j] if self.partials is not None else (None, None)))
            out = out * inner + cj
        return out

    def reverse(self):
        """Compositional inverse ``h`` with ``self(h(u)) = u`` (values only)."""
        if abs(self.coeffs[0]) > 1e-300:
            raise ValueError("series reversion needs a zero constant term")
        g1 = self.coeffs[1] if self.order >= 1 else 0.0
        if g1 == 0:
            raise ZeroDivisionError("series reversion needs a nonzero linear term")
        g = self.drop_partials()
        h = np.zeros(self.order + 1, dtype=g.coeffs.dtype)
        h[1] = 1.0 / g1
        for k in range(2, self.order + 1):
            ck = g.compose(Jet(h))[k]
            h[k] = -ck / g1
        return Jet(h)
