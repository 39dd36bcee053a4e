"""Scalar fields on a chart that can report their jets at a point.

Everything the operators consume (metric components, gauge potentials,
section coefficients, phase-function components, operator outputs) is a
:class:`Field`.  Derived fields are lazy: asking for the jet of an operator
output at order ``d`` asks its inputs for jets of a higher order.
"""

from __future__ import annotations

from collections import OrderedDict
from numbers import Number

import numpy as np

from cqmq.errors import DomainError
from cqmq.jetcalc import expr as E
from cqmq.jetcalc.jet import Jet, basis

# jets kept per derived field; operator chains re-request the same point and order
MEMO_SIZE = 16


class Field:
    """A (possibly complex, possibly time-dependent) scalar field."""

    def jet(self, p, d, t=None):
        raise NotImplementedError

    def value(self, p, t=None):
        return self.jet(p, 0, t).value

    def dt_field(self):
        """The field ``d/dt F``; static fields return the zero field."""
        return ZERO

    def is_static(self):
        return self.dt_field() is ZERO

    def time_derivative(self, p, t):
        return self.dt_field().value(p, t)

    def compose(self, coords, t=None):
        """Jet of ``y -> F(x(y))`` for coordinate jets ``coords = x(y)``.

        Generic route: Taylor-expand ``F`` at ``x(0)`` and substitute the
        nilpotent parts ``x(y) - x(0)``; exact to the order of ``coords``.
        """
        order = coords[0].order
        nv = coords[0].nvars
        p = np.array([c.value.real for c in coords])
        fj = self.jet(p, order, t)
        shifts = [c - c.value for c in coords]
        bas = basis(len(coords), order)
        total = None
        for k, alpha in enumerate(bas.multi):
            term = Jet.constant(fj.coeffs[k], nv, order)
            for i, a in enumerate(alpha):
                if a:
                    term = term * shifts[i].ipow(a)
            total = term if total is None else total + term
        return total

    # field algebra ------------------------------------------------------

    def __add__(self, other):
        other = as_field(other)
        return FuncField(
            lambda p, d, t: self.jet(p, d, t) + other.jet(p, d, t),
            dt=lambda: _static_or(self, other, lambda: self.dt_field() + other.dt_field()),
        )

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * as_field(other)

    def __rsub__(self, other):
        return as_field(other) - self

    def __mul__(self, other):
        other = as_field(other)
        return FuncField(
            lambda p, d, t: self.jet(p, d, t) * other.jet(p, d, t),
            dt=lambda: _static_or(self, other, lambda: self.dt_field() * other + self * other.dt_field()),
        )

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self


class ExprField(Field):
    """Field given by a parsed closed-form expression."""

    def __init__(self, expression, n=None, aliases=None):
        self.expression = E.parse(expression, n=n, aliases=aliases)

    def jet(self, p, d, t=None):
        p = np.asarray(p, dtype=float)
        return E.eval_jet(self.expression, p, d, t=t)

    def compose(self, coords, t=None):
        env = {i + 1: c for i, c in enumerate(coords)}
        if t is not None:
            env[0] = t
        out = E.evaluate(self.expression, env, coords[0].nvars, coords[0].order)
        return out.broadcast_to(np.broadcast_shapes(*(c.batch_shape for c in coords)))

    def dt_field(self):
        if 0 not in E.variables(self.expression):
            return ZERO
        return FuncField(self._dt_jet, label=f"d/dt {E.to_source(self.expression)}")

    def _dt_jet(self, p, d, t):
        if t is None:
            raise DomainError("time-dependent field evaluated without a time")
        n = p.shape[0]
        env = {i + 1: Jet.variable(i, p[i], n + 1, d + 1) for i in range(n)}
        env[0] = Jet.variable(n, np.full(p.shape[1:], float(t)), n + 1, d + 1)
        full = E.evaluate(self.expression, env, n + 1, d + 1).broadcast_to(p.shape[1:]).diff(n)
        return full.restrict(n)

    def __repr__(self):
        return f"ExprField({E.to_source(self.expression)!r})"


class ConstField(Field):
    def __init__(self, c):
        self.c = c

    def jet(self, p, d, t=None):
        p = np.asarray(p, dtype=float)
        return Jet.constant(np.full(p.shape[1:], self.c), p.shape[0], d)

    def compose(self, coords, t=None):
        return Jet.constant(np.full(coords[0].batch_shape, self.c), coords[0].nvars, coords[0].order)

    def __repr__(self):
        return f"ConstField({self.c!r})"


class FuncField(Field):
    """Field defined by a jet-producing callable ``fn(p, d, t) -> Jet``."""

    def __init__(self, fn, dt=None, label=None):
        self.fn = fn
        self.dt = dt
        self.label = label
        self._dt_cache = None
        self._memo = OrderedDict()

    def jet(self, p, d, t=None):
        p = np.asarray(p, dtype=float)
        key = (p.shape, p.tobytes(), d, t)
        hit = self._memo.get(key)
        if hit is not None:
            self._memo.move_to_end(key)
            return hit
        out = self.fn(p, d, t)
        self._memo[key] = out
        if len(self._memo) > MEMO_SIZE:
            self._memo.popitem(last=False)
        return out

    def dt_field(self):
        if self.dt is None:
            return ZERO
        if self._dt_cache is None:
            self._dt_cache = self.dt()
        return self._dt_cache

    def __repr__(self):
        return f"FuncField({self.label or self.fn!r})"


def _static_or(a, b, build):
    if a.is_static() and b.is_static():
        return ZERO
    return build()


ZERO = ConstField(0.0)


def as_field(x, n=None, aliases=None):
    if isinstance(x, Field):
        return x
    if isinstance(x, (str, E.Expression)):
        return ExprField(x, n=n, aliases=aliases)
    if isinstance(x, Number):
        return ConstField(x)
    raise TypeError(f"cannot interpret {x!r} as a field")
