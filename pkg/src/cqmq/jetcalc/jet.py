"""Multivariate truncated Taylor expansions ("jets").

A jet of order ``d`` in ``n`` variables stores the Taylor coefficients
``a[alpha] = d^alpha f(p) / alpha!`` for every multi-index ``|alpha| <= d``,
so that ``f(p + h) = sum_alpha a[alpha] h^alpha + O(|h|^(d+1))``.

Coefficients live in an array of shape ``(M,) + batch`` where ``M`` is the
number of monomials; the trailing batch axes let one jet object carry the
expansions at many base points at once (used when sampling grids).
Monomials are graded by total degree, so truncating to a lower order is a
prefix slice.
"""

from __future__ import annotations

import functools
import math
from numbers import Number

import numpy as np
import scipy.sparse as sp

from cqmq.errors import DomainError

__all__ = [
    "Jet",
    "Basis",
    "basis",
    "sin",
    "cos",
    "tan",
    "exp",
    "log",
    "sqrt",
    "sinh",
    "cosh",
    "power",
]


def _compositions(total, parts):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class Basis:
    """Monomial bookkeeping for jets with ``nvars`` variables up to ``order``."""

    def __init__(self, nvars, order):
        self.nvars = nvars
        self.order = order
        self.multi = []
        self.sizes = []
        for deg in range(order + 1):
            self.multi.extend(_compositions(deg, nvars))
            self.sizes.append(len(self.multi))
        self.index = {a: k for k, a in enumerate(self.multi)}
        self.degree = np.array([sum(a) for a in self.multi], dtype=int)
        self.factorial = np.array(
            [math.prod(math.factorial(x) for x in a) for a in self.multi], dtype=float
        )

        I, J, K = [], [], []
        for i, a in enumerate(self.multi):
            for j, b in enumerate(self.multi):
                if sum(a) + sum(b) > order:
                    continue
                I.append(i)
                J.append(j)
                K.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self.pair_left = np.array(I, dtype=np.intp)
        self.pair_right = np.array(J, dtype=np.intp)
        self.pair_target = sp.csr_matrix(
            (np.ones(len(K)), (np.array(K, dtype=np.intp), np.arange(len(K)))),
            shape=(len(self.multi), len(K)),
        )

        # d/dh_i maps order `order` onto order `order - 1`
        self.deriv_maps = []
        for i in range(nvars):
            src, fac = [], []
            for b in self.multi[: self.sizes[order - 1]] if order > 0 else []:
                up = list(b)
                up[i] += 1
                src.append(self.index[tuple(up)])
                fac.append(up[i])
            self.deriv_maps.append((np.array(src, dtype=np.intp), np.array(fac, dtype=float)))

    @property
    def size(self):
        return len(self.multi)


@functools.lru_cache(maxsize=None)
def basis(nvars, order):
    return Basis(nvars, order)


class Jet:
    """Truncated multivariate Taylor expansion, optionally batched over base points.

    Parameters
    ----------
    coeffs : array_like
        Shape ``(M,) + batch`` with ``M = basis(nvars, order).size``.
    nvars : int
    order : int
    """

    __slots__ = ("coeffs", "nvars", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs, nvars, order):
        coeffs = np.asarray(coeffs)
        if coeffs.dtype.kind not in "fc":
            coeffs = coeffs.astype(float)
        if coeffs.shape[0] != basis(nvars, order).size:
            raise ValueError(
                f"expected {basis(nvars, order).size} coefficients, got {coeffs.shape[0]}"
            )
        self.coeffs = coeffs
        self.nvars = nvars
        self.order = order

    # construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, nvars, order):
        value = np.asarray(value)
        dtype = complex if value.dtype.kind == "c" else float
        c = np.zeros((basis(nvars, order).size,) + value.shape, dtype=dtype)
        c[0] = value
        return cls(c, nvars, order)

    @classmethod
    def variable(cls, i, value, nvars, order):
        """The jet of the coordinate function ``h -> value + h_i``."""
        jet = cls.constant(np.asarray(value, dtype=float), nvars, order)
        if order >= 1:
            e = [0] * nvars
            e[i] = 1
            jet.coeffs[basis(nvars, order).index[tuple(e)]] = 1.0
        return jet

    @classmethod
    def variables(cls, point, order):
        """Coordinate jets ``x_i = p_i + h_i`` for every axis of ``point``.

        ``point`` may carry trailing batch axes: shape ``(n,) + batch``.
        """
        point = np.asarray(point, dtype=float)
        n = point.shape[0]
        return [cls.variable(i, point[i], n, order) for i in range(n)]

    # basic access -------------------------------------------------------

    @property
    def basis(self):
        return basis(self.nvars, self.order)

    @property
    def value(self):
        return self.coeffs[0]

    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]

    def coefficient(self, alpha):
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise ValueError(f"multi-index {alpha} exceeds jet order {self.order}")
        return self.coeffs[self.basis.index[alpha]]

    def derivative(self, alpha):
        """Partial derivative ``d^alpha f(p)`` (coefficient times ``alpha!``)."""
        alpha = tuple(alpha)
        return self.coefficient(alpha) * math.prod(math.factorial(a) for a in alpha)

    def gradient(self):
        return np.array([self.derivative(_unit(i, self.nvars)) for i in range(self.nvars)])

    def hessian(self):
        n = self.nvars
        out = np.empty((n, n) + self.batch_shape, dtype=self.coeffs.dtype)
        for i in range(n):
            for j in range(i, n):
                a = [0] * n
                a[i] += 1
                a[j] += 1
                out[i, j] = out[j, i] = self.derivative(a)
        return out

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        if order == self.order:
            return self
        return Jet(self.coeffs[: basis(self.nvars, order).size], self.nvars, order)

    def diff(self, i):
        """Jet of ``d f / d h_i``; the order drops by one."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = self.basis.deriv_maps[i]
        fac = fac.reshape((-1,) + (1,) * len(self.batch_shape))
        return Jet(self.coeffs[src] * fac, self.nvars, self.order - 1)

    def restrict(self, nvars):
        """Drop every variable past the first ``nvars`` (set them to zero)."""
        bas = self.basis
        keep = [k for k, a in enumerate(bas.multi) if not any(a[nvars:])]
        return Jet(self.coeffs[keep], nvars, self.order)

    def broadcast_to(self, shape):
        shape = tuple(shape)
        if self.batch_shape == shape:
            return self
        return Jet(np.array(_broadcast(self.coeffs, shape)), self.nvars, self.order)

    def conj(self):
        return Jet(np.conj(self.coeffs), self.nvars, self.order)

    @property
    def real(self):
        return Jet(self.coeffs.real.copy(), self.nvars, self.order)

    @property
    def imag(self):
        return Jet(self.coeffs.imag.copy(), self.nvars, self.order)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, batch={self.batch_shape})"

    # arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable counts")
            order = min(self.order, other.order)
            a, b = self.truncate(order), other.truncate(order)
            if a.batch_shape != b.batch_shape:
                shape = np.broadcast_shapes(a.batch_shape, b.batch_shape)
                a = Jet(_broadcast(a.coeffs, shape), a.nvars, order)
                b = Jet(_broadcast(b.coeffs, shape), b.nvars, order)
            return a, b
        if isinstance(other, (Number, np.ndarray, np.generic)):
            return self, Jet.constant(other, self.nvars, self.order)
        return None

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return Jet(a.coeffs + b.coeffs, a.nvars, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.nvars, self.order)

    def __sub__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return Jet(a.coeffs - b.coeffs, a.nvars, a.order)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, (Number, np.generic)):
            return Jet(self.coeffs * other, self.nvars, self.order)
        if isinstance(other, np.ndarray) and not isinstance(other, Jet):
            return Jet(self.coeffs * other[None, ...], self.nvars, self.order)
        pair = self._coerce(other)
        if pair is None:
            return NotImplemented
        a, b = pair
        return Jet(_convolve(a.coeffs, b.coeffs, a.basis), a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if isinstance(other, (Number, np.generic, np.ndarray)):
            if np.any(np.asarray(other) == 0):
                raise DomainError("division by zero")
            return self * (1.0 / np.asarray(other))
        return NotImplemented

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, (int, np.integer)):
            return self.ipow(int(exponent))
        if isinstance(exponent, Number):
            return power(self, float(exponent))
        return NotImplemented

    def ipow(self, k):
        if k < 0:
            return self.reciprocal().ipow(-k)
        result = Jet.constant(np.ones(self.batch_shape, dtype=self.coeffs.dtype), self.nvars, self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def reciprocal(self):
        b0 = self.value
        if np.any(b0 == 0):
            raise DomainError("division by a jet with zero constant term")
        # 1/(b0 + t) = sum_k (-1)^k t^k / b0^(k+1)
        ks = range(self.order + 1)
        return _series(self, [(-1.0) ** k / b0 ** (k + 1) for k in ks])


def _broadcast(c, shape):
    c = c.reshape(c.shape[:1] + (1,) * (len(shape) - (c.ndim - 1)) + c.shape[1:])
    return np.broadcast_to(c, c.shape[:1] + shape)


def _unit(i, n):
    e = [0] * n
    e[i] = 1
    return tuple(e)


def _convolve(a, b, bas):
    prod = a[bas.pair_left] * b[bas.pair_right]
    shape = prod.shape
    flat = prod.reshape(shape[0], -1)
    out = bas.pair_target @ flat
    return np.asarray(out).reshape((bas.size,) + shape[1:])


def _series(b, coefs):
    """``sum_k coefs[k] * (b - b0)^k`` truncated at the jet order."""
    t = Jet(b.coeffs.copy(), b.nvars, b.order)
    t.coeffs[0] = 0
    c0 = np.asarray(coefs[0])
    dtype = np.result_type(c0, *[np.asarray(c) for c in coefs[1:]], t.coeffs)
    out = np.zeros(b.coeffs.shape, dtype=dtype)
    out[0] = c0
    tk = None
    for k in range(1, b.order + 1):
        tk = t if tk is None else tk * t
        out = out + tk.coeffs * np.asarray(coefs[k])[None, ...]
    return Jet(out, b.nvars, b.order)


def _as_jet(x):
    if not isinstance(x, Jet):
        raise TypeError("expected a Jet")
    return x


def _cyclic(derivs, b):
    d = b.order
    return [derivs[k % len(derivs)] / math.factorial(k) for k in range(d + 1)]


def sin(b):
    b = _as_jet(b)
    s, c = np.sin(b.value), np.cos(b.value)
    return _series(b, _cyclic([s, c, -s, -c], b))


def cos(b):
    b = _as_jet(b)
    s, c = np.sin(b.value), np.cos(b.value)
    return _series(b, _cyclic([c, -s, -c, s], b))


def sinh(b):
    b = _as_jet(b)
    s, c = np.sinh(b.value), np.cosh(b.value)
    return _series(b, _cyclic([s, c], b))


def cosh(b):
    b = _as_jet(b)
    s, c = np.sinh(b.value), np.cosh(b.value)
    return _series(b, _cyclic([c, s], b))


def tan(b):
    b = _as_jet(b)
    if np.any(np.isclose(np.cos(b.value), 0.0, atol=1e-300, rtol=0)):
        raise DomainError("tan evaluated at a pole")
    return sin(b) / cos(b)


def exp(b):
    b = _as_jet(b)
    e = np.exp(b.value)
    return _series(b, [e / math.factorial(k) for k in range(b.order + 1)])


def _require_positive(b, name):
    v = b.value
    if np.iscomplexobj(v):
        if np.any(v.imag != 0):
            raise DomainError(f"{name} of a complex value")
        v = v.real
    if np.any(~(v > 0)):
        raise DomainError(f"{name} of a non-positive value")
    return v


def log(b):
    b = _as_jet(b)
    v = _require_positive(b, "log")
    coefs = [np.log(v)] + [(-1.0) ** (k + 1) / (k * v**k) for k in range(1, b.order + 1)]
    return _series(b, coefs)


def power(b, p):
    """Real power ``b**p`` for a jet with strictly positive constant term."""
    b = _as_jet(b)
    v = _require_positive(b, "real power")
    coefs = []
    binom = 1.0
    for k in range(b.order + 1):
        coefs.append(binom * v ** (p - k))
        binom *= (p - k) / (k + 1)
    return _series(b, coefs)


def sqrt(b):
    return power(b, 0.5)

