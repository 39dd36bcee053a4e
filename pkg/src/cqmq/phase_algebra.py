"""Special phase functions, the special bracket and tangent lifts.

A special phase function on ``T M`` (time independent, constant quadratic
coefficient) is

    f(x, v) = 1/2 f0 g_ij(x) v^i v^j + f_i(x) v^i + f_scal(x).

The Poisson bracket is the one carried over from ``T*M`` through
``p_i = g_ij v^j`` with ``{x^i, p_j} = delta^i_j``; the geodesic spray is
``gamma = v^i d/dx^i - G^i_jk v^j v^k d/dv^i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cqmq.errors import NotSpecial
from cqmq.jetcalc.fields import ConstField, FuncField, as_field
from cqmq.jetcalc.jet import Jet


@dataclass(frozen=True)
class SpecialPhaseFunction:
    f0: float
    f_lin: tuple
    f_scal: object

    @classmethod
    def make(cls, f0, f_lin, f_scal, n=None, aliases=None):
        return cls(
            float(f0),
            tuple(as_field(f, n=n, aliases=aliases) for f in f_lin),
            as_field(f_scal, n=n, aliases=aliases),
        )

    @property
    def n(self):
        return len(self.f_lin)

    def raised(self, m):
        """Contravariant components ``f^i = g^ij f_j`` as fields."""
        return tuple(_raised_component(m, self.f_lin, i) for i in range(self.n))


def _raised_component(m, f_lin, i):
    def fn(p, d, t):
        geo = m.metric_jet(p, d)
        acc = None
        for j in range(m.n):
            term = geo.ginv[i][j] * f_lin[j].jet(p, d, t)
            acc = term if acc is None else acc + term
        return acc

    return FuncField(fn, label=f"raise[{i}]")


def zero_function(n):
    return SpecialPhaseFunction(0.0, tuple(ConstField(0.0) for _ in range(n)), ConstField(0.0))


def position(i, n):
    """The coordinate function ``x^i`` (1-based)."""
    return SpecialPhaseFunction.make(0.0, ["0"] * n, f"x{i}", n=n)


def momentum(j, m, gauge=None):
    """Observed momentum ``P_j = g_jk v^k + A_j`` (1-based ``j``)."""
    lin = tuple(m.g[j - 1][k] for k in range(m.n))
    scal = gauge.spatial[j - 1] if gauge is not None else ConstField(0.0)
    return SpecialPhaseFunction(0.0, lin, scal)


def energy(m, gauge=None):
    """Observed energy ``H_0 = 1/2 g_ij v^i v^j - A_0``."""
    scal = -1.0 * gauge.time if gauge is not None else ConstField(0.0)
    return SpecialPhaseFunction(1.0, tuple(ConstField(0.0) for _ in range(m.n)), scal)


def evaluate(f, m, p, v):
    """Value of ``f`` at position ``p`` and velocity ``v``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    g = m.metric_jet(p, 0).g_value
    quad = 0.5 * f.f0 * np.einsum("ij...,i...,j...->...", g, v, v)
    lin = sum(f.f_lin[i].value(p) * v[i] for i in range(f.n))
    return quad + lin + f.f_scal.value(p)


def special_bracket(f, g, m, check=True):
    """Covariant special bracket of two special phase functions.

    With constant quadratic coefficients every term involving the kinetic
    part cancels against the spray terms, so the result is the Poisson
    bracket of the linear-plus-scalar parts: quadratic coefficient zero,
    linear part ``h^j = g^k d_k f^j - f^k d_k g^j`` and scalar part
    ``g^k d_k f_scal - f^k d_k g_scal``.  With ``check`` the result is
    compared against a brute-force phase-space evaluation of
    ``{f, g} + f0 gamma.g - g0 gamma.f`` at two sample points.
    """
    n = m.n
    fu, gu = f.raised(m), g.raised(m)

    def up_component(j):
        def fn(p, d, t):
            acc = Jet.constant(np.zeros(np.shape(p)[1:]), n, d)
            for k in range(n):
                fk, gk = fu[k].jet(p, d + 1, t), gu[k].jet(p, d + 1, t)
                acc = acc + gk.truncate(d) * fu[j].jet(p, d + 1, t).diff(k) - fk.truncate(d) * gu[j].jet(p, d + 1, t).diff(k)
            return acc

        return FuncField(fn, label=f"bracket^{j}")

    hup = [up_component(j) for j in range(n)]

    def lower(i):
        def fn(p, d, t):
            geo = m.metric_jet(p, d)
            acc = Jet.constant(np.zeros(np.shape(p)[1:]), n, d)
            for j in range(n):
                acc = acc + geo.g[i][j] * hup[j].jet(p, d, t)
            return acc

        return FuncField(fn, label=f"bracket_{i}")

    def scal(p, d, t):
        acc = Jet.constant(np.zeros(np.shape(p)[1:]), n, d)
        fs, gs = f.f_scal.jet(p, d + 1, t), g.f_scal.jet(p, d + 1, t)
        for k in range(n):
            acc = acc + gu[k].jet(p, d, t) * fs.diff(k) - fu[k].jet(p, d, t) * gs.diff(k)
        return acc

    out = SpecialPhaseFunction(0.0, tuple(lower(i) for i in range(n)), FuncField(scal, label="bracket_scal"))
    if check:
        rng = np.random.default_rng(12345)
        for p in sample_points(m, 2, rng):
            v = rng.uniform(-1, 1, size=n)
            brute = bracket_phase_value(f, g, m, p, v)
            shaped = evaluate(out, m, p, v)
            if not np.isclose(brute, shaped, rtol=1e-8, atol=1e-9):
                raise NotSpecial(f"bracket shape check failed: {brute} vs {shaped}")
    return out


def sample_points(m, count, rng):
    """Random interior points of the chart's domain box."""
    pts = []
    for _ in range(count):
        p = []
        for lo, hi in m.domain:
            if np.isfinite(lo) and np.isfinite(hi):
                p.append(rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo)))
            elif np.isfinite(lo):
                p.append(lo + rng.uniform(0.5, 2.0))
            else:
                p.append(rng.uniform(-1.0, 1.0))
        pts.append(np.array(p))
    return pts


# --------------------------------------------------------------------------
# brute-force phase-space route (independent of the closed form above)


def _phase_jet(f, m, p, v, order=1):
    n = m.n
    z = Jet.variables(np.concatenate([p, v]), order)
    xs, vs = z[:n], z[n:]
    g = m.pullback_jet(xs)
    acc = Jet.constant(0.0, 2 * n, order)
    for i in range(n):
        for j in range(n):
            acc = acc + (0.5 * f.f0) * g[i][j] * vs[i] * vs[j]
        acc = acc + f.f_lin[i].compose(xs) * vs[i]
    return acc + f.f_scal.compose(xs)


def bracket_phase_value(f, g, m, p, v):
    """``{f, g} + f0 gamma(g) - g0 gamma(f)`` at ``(p, v)`` straight from the definitions."""
    n = m.n
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    F, G = _phase_jet(f, m, p, v), _phase_jet(g, m, p, v)
    geo = m.metric_jet(p, 1)
    ginv = geo.ginv_value
    dg = np.array([[[geo.g[a][b].derivative(_unit(i, n)) for i in range(n)] for b in range(n)] for a in range(n)])
    gam = np.array([[[x.value for x in row] for row in mat] for mat in geo.gamma_std])

    def parts(H):
        grad = H.gradient()
        dx_v, dv = grad[:n], grad[n:]
        dp = ginv @ dv
        # d v^l / d x^i at fixed momentum = -g^{lk} d_i g_kj v^j
        dvdx = -np.einsum("lk,kji,j->li", ginv, dg, v)
        dx_p = dx_v + dv @ dvdx
        spray = v @ dx_v - np.einsum("ijk,j,k,i->", gam, v, v, dv)
        return dx_p, dp, spray

    fx, fp, fs = parts(F)
    gx, gp, gs = parts(G)
    poisson = fx @ gp - fp @ gx
    return poisson + f.f0 * gs - g.f0 * fs


# --------------------------------------------------------------------------
# tangent lifts


@dataclass(frozen=True)
class TangentLiftField:
    """Vector field ``f0 d_0 - f^i d_i`` on spacetime."""

    time: float
    spatial: tuple

    def at(self, p):
        p = np.asarray(p, dtype=float)
        return np.array([self.time] + [float(np.real(c.value(p))) for c in self.spatial])


def tangent_lift(f, m):
    up = f.raised(m)
    return TangentLiftField(f.f0, tuple(-1.0 * c for c in up))


def lie_bracket_at(X, Y, p):
    """Components ``(time, spatial...)`` of ``[X, Y]`` at ``p`` for time-independent fields."""
    p = np.asarray(p, dtype=float)
    n = len(X.spatial)
    xj = [c.jet(p, 1) for c in X.spatial]
    yj = [c.jet(p, 1) for c in Y.spatial]
    out = [0.0]
    for j in range(n):
        s = 0.0
        for k in range(n):
            s += xj[k].value * yj[j].derivative(_unit(k, n)) - yj[k].value * xj[j].derivative(_unit(k, n))
        out.append(s)
    return np.array(out, dtype=float)


def _unit(i, n):
    e = [0] * n
    e[i] = 1
    return tuple(e)
