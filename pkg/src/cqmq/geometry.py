"""Metric charts, Christoffel symbols, curvature and normal coordinates.

Two Christoffel conventions coexist.  ``gamma_std`` is the usual
Levi-Civita symbol ``+1/2 g^{ih}(d_j g_hk + d_k g_hj - d_h g_jk)``; the
*flipped-sign* symbol ``gamma`` is its negative and is only exposed as API
surface.  All curvature is assembled from ``gamma_std`` with

    R^i_jkl = d_k G^i_lj - d_l G^i_kj + G^i_km G^m_lj - G^i_lm G^m_kj,

``Ric_jl = R^i_jil`` and ``r_std = g^jl Ric_jl`` (unit sphere: ``r_std = 2``).
The scalar curvature entering the energy operators is ``r_paper = -r_std``
(the field name is kept for report compatibility; unit sphere: ``-2``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from cqmq.errors import DomainError, NotPositiveDefinite
from cqmq.jetcalc import jet as J
from cqmq.jetcalc.fields import as_field
from cqmq.jetcalc.jet import Jet

DEFAULT_ORDER = 4


# --------------------------------------------------------------------------
# small helpers for matrices of jets


def _batch_last(a):
    """(n, n) + batch  ->  batch + (n, n)."""
    return np.moveaxis(np.moveaxis(a, 0, -1), 0, -1)


def _batch_first(a):
    return np.moveaxis(np.moveaxis(a, -1, 0), -1, 0)


def jet_values(mat):
    return np.array([[m.value for m in row] for row in mat])


def jet_det(mat):
    n = len(mat)
    if n == 1:
        return mat[0][0]
    if n == 2:
        return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    total = None
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * jet_det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


def jet_inverse(mat):
    """Inverse of a matrix of jets by a terminating Neumann series."""
    n = len(mat)
    g0 = jet_values(mat)
    try:
        inv0 = _batch_first(np.linalg.inv(_batch_last(g0)))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("singular metric") from exc
    order = mat[0][0].order
    nil = [[mat[i][j] - g0[i][j] for j in range(n)] for i in range(n)]
    # K = -inv0 @ nil  (nilpotent)
    K = [[sum((nil[k][j] * (-inv0[i][k]) for k in range(n)), start=Jet.constant(np.zeros(g0.shape[2:]), mat[0][0].nvars, order)) for j in range(n)] for i in range(n)]
    term = [[Jet.constant(inv0[i][j], mat[0][0].nvars, order) for j in range(n)] for i in range(n)]
    total = [row[:] for row in term]
    for _ in range(order):
        term = jet_matmul(K, term)
        total = [[total[i][j] + term[i][j] for j in range(n)] for i in range(n)]
    return total


def jet_matmul(A, B):
    n, m, q = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(q):
            acc = A[i][0] * B[0][j]
            for k in range(1, m):
                acc = acc + A[i][k] * B[k][j]
            row.append(acc)
        out.append(row)
    return out


# --------------------------------------------------------------------------
# charts


@dataclass(frozen=True)
class MetricChart:
    """Coordinate chart with metric components given as fields.

    Parameters
    ----------
    n : int
    g : tuple of tuple of Field
        Full symmetric component matrix.
    periods : tuple
        Per-axis period, or ``None`` for a non-periodic axis.
    domain : tuple of (lo, hi)
    aliases : dict
        Alternative coordinate names, e.g. ``{"theta": 1, "phi": 2}``.
    """

    n: int
    g: tuple
    periods: tuple = None
    domain: tuple = None
    aliases: dict = field(default_factory=dict)
    name: str = "custom"

    @classmethod
    def from_components(cls, n, components, periods=None, domain=None, aliases=None, name="custom"):
        """Build from a nested list or ``{(i, j): expr}`` of upper-triangle entries.

        Indices in the dict form are 1-based; omitted entries are zero.
        """
        aliases = dict(aliases or {})
        grid = [[None] * n for _ in range(n)]
        if isinstance(components, dict):
            for (i, j), e in components.items():
                grid[i - 1][j - 1] = e
        else:
            for i in range(n):
                for j in range(n):
                    grid[i][j] = components[i][j]
        g = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                e = grid[i][j] if grid[i][j] is not None else grid[j][i]
                if grid[i][j] is not None and grid[j][i] is not None and i != j and str(grid[i][j]) != str(grid[j][i]):
                    raise ValueError(f"metric is not symmetric in ({i + 1}, {j + 1})")
                f = as_field(0 if e is None else e, n=n, aliases=aliases)
                g[i][j] = g[j][i] = f
        periods = tuple(periods) if periods is not None else (None,) * n
        domain = tuple(tuple(d) for d in domain) if domain is not None else ((-np.inf, np.inf),) * n
        return cls(n, tuple(tuple(r) for r in g), periods, domain, aliases, name)

    def metric_jet(self, p, d=DEFAULT_ORDER):
        p = np.asarray(p, dtype=float)
        if p.shape[0] != self.n:
            raise ValueError(f"point has {p.shape[0]} coordinates, chart has {self.n}")
        self.check_domain(p)
        cache = {}
        rows = []
        for i in range(self.n):
            row = []
            for j in range(self.n):
                f = self.g[i][j]
                if id(f) not in cache:
                    cache[id(f)] = f.jet(p, d)
                row.append(cache[id(f)])
            rows.append(row)
        return LocalGeometry(rows)

    def pullback_jet(self, coords):
        """Metric components ``g_ij(x(y))`` composed with coordinate jets."""
        cache = {}
        rows = []
        for i in range(self.n):
            row = []
            for j in range(self.n):
                f = self.g[i][j]
                if id(f) not in cache:
                    cache[id(f)] = f.compose(coords)
                row.append(cache[id(f)])
            rows.append(row)
        return rows

    def check_domain(self, p):
        p = np.asarray(p, dtype=float)
        for i, (lo, hi) in enumerate(self.domain):
            if self.periods[i] is not None:
                continue
            if np.any(p[i] <= lo) or np.any(p[i] >= hi):
                raise DomainError(f"coordinate x{i + 1} outside the chart domain ({lo}, {hi})")

    def scaled(self, c2):
        """The chart of the metric ``c2 * g``."""
        g = tuple(tuple(c2 * f for f in row) for row in self.g)
        return MetricChart(self.n, g, self.periods, self.domain, self.aliases, f"{c2}*{self.name}")


class LocalGeometry:
    """Metric jets at a base point and everything derived from them.

    ``gmat`` is an ``n x n`` nested list of :class:`Jet` (possibly batched).
    Derived quantities are jets too; each derivative costs one order.
    """

    def __init__(self, gmat):
        self.g = gmat
        self.n = len(gmat)
        self.order = gmat[0][0].order
        g0 = jet_values(gmat)
        if np.iscomplexobj(g0):
            raise DomainError("complex metric components")
        try:
            np.linalg.cholesky(_batch_last(g0))
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite("metric is not positive definite") from exc
        if not np.all(np.isfinite(g0)):
            raise DomainError("non-finite metric component")

    @property
    def nvars(self):
        return self.g[0][0].nvars

    def _zero(self, order):
        return Jet.constant(np.zeros(self.g[0][0].batch_shape), self.nvars, order)

    @cached_property
    def g_value(self):
        return jet_values(self.g)

    @cached_property
    def ginv(self):
        return jet_inverse(self.g)

    @cached_property
    def ginv_value(self):
        return jet_values(self.ginv)

    @cached_property
    def det(self):
        return jet_det(self.g)

    @cached_property
    def sqrt_det(self):
        return J.power(self.det, 0.5)

    @cached_property
    def quarter_det(self):
        return J.power(self.det, 0.25)

    @cached_property
    def dg(self):
        """``dg[h][k][j] = d_j g_hk`` (order - 1)."""
        n = self.n
        return [[[self.g[h][k].diff(j) for j in range(n)] for k in range(n)] for h in range(n)]

    @cached_property
    def gamma_std(self):
        """Standard Levi-Civita symbols ``gamma_std[i][j][k] = G^i_jk`` (order - 1)."""
        n = self.n
        ginv = [[x.truncate(self.order - 1) for x in row] for row in self.ginv]
        dg = self.dg
        low = [[[0.5 * (dg[h][k][j] + dg[h][j][k] - dg[j][k][h]) for k in range(n)] for j in range(n)] for h in range(n)]
        out = []
        for i in range(n):
            out.append([[sum((ginv[i][h] * low[h][j][k] for h in range(n)), start=self._zero(self.order - 1)) for k in range(n)] for j in range(n)])
        return out

    @cached_property
    def gamma_paper(self):
        """Flipped-sign symbols ``-G^i_jk``."""
        return [[[-x for x in row] for row in mat] for mat in self.gamma_std]

    @cached_property
    def gamma_trace(self):
        """``G^h_jh`` (standard sign), equal to ``d_j log sqrt|g|``."""
        n = self.n
        return [sum((self.gamma_std[h][j][h] for h in range(n)), start=self._zero(self.order - 1)) for j in range(n)]

    @cached_property
    def riemann(self):
        """``R[i][j][k][l] = R^i_jkl`` (order - 2)."""
        n = self.n
        G = self.gamma_std
        o = self.order - 2
        Gt = [[[x.truncate(o) for x in row] for row in mat] for mat in G]
        dG = [[[[G[i][j][k].diff(l) for l in range(n)] for k in range(n)] for j in range(n)] for i in range(n)]
        R = [[[[None] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        val = dG[i][l][j][k] - dG[i][k][j][l]
                        for m in range(n):
                            val = val + Gt[i][k][m] * Gt[m][l][j] - Gt[i][l][m] * Gt[m][k][j]
                        R[i][j][k][l] = val
        return R

    @cached_property
    def ricci(self):
        n = self.n
        R = self.riemann
        return [[sum((R[i][j][i][l] for i in range(n)), start=self._zero(self.order - 2)) for l in range(n)] for j in range(n)]

    @cached_property
    def r_std(self):
        n = self.n
        ginv = [[x.truncate(self.order - 2) for x in row] for row in self.ginv]
        Ric = self.ricci
        total = self._zero(self.order - 2)
        for j in range(n):
            for l in range(n):
                total = total + ginv[j][l] * Ric[j][l]
        return total

    @cached_property
    def r_paper(self):
        return -self.r_std


# --------------------------------------------------------------------------
# value objects


@dataclass
class MetricAt:
    g: np.ndarray
    ginv: np.ndarray
    det: np.ndarray
    quarter: np.ndarray


@dataclass
class CurvatureData:
    point: np.ndarray
    gamma: np.ndarray = None
    gamma_std: np.ndarray = None
    riemann: np.ndarray = None
    ricci: np.ndarray = None
    r_std: np.ndarray = None
    r_paper: np.ndarray = None

    def to_dict(self):
        out = {"point": np.asarray(self.point).tolist()}
        for key in ("gamma", "gamma_std", "riemann", "ricci", "r_std", "r_paper"):
            v = getattr(self, key)
            if v is not None:
                out[key] = np.asarray(v).tolist()
        return out


def _values3(mat):
    return np.array([[[x.value for x in row] for row in m] for m in mat])


def metric_at(m, p):
    """Metric, inverse, determinant and determinant^(1/4) at ``p``."""
    geo = m.metric_jet(p, 0)
    det = np.asarray(geo.det.value)
    return MetricAt(geo.g_value, geo.ginv_value, det, det**0.25)


def christoffel(m, p):
    geo = m.metric_jet(p, 1)
    gs = _values3(geo.gamma_std)
    return CurvatureData(point=np.asarray(p, dtype=float), gamma=-gs, gamma_std=gs)


def curvature_from_geometry(geo, point):
    gs = _values3(geo.gamma_std)
    n = geo.n
    R = np.array([[[[geo.riemann[i][j][k][l].value for l in range(n)] for k in range(n)] for j in range(n)] for i in range(n)])
    Ric = np.array([[x.value for x in row] for row in geo.ricci])
    r = np.asarray(geo.r_std.value)
    return CurvatureData(point=np.asarray(point, dtype=float), gamma=-gs, gamma_std=gs, riemann=R, ricci=Ric, r_std=r, r_paper=-r)


def scalar_curvature(m, p):
    """Full curvature record at ``p`` (flipped-sign scalar curvature ``r_paper = -r_std``)."""
    return curvature_from_geometry(m.metric_jet(p, 2), p)


# --------------------------------------------------------------------------
# normal coordinates


@dataclass
class NormalChart:
    """Second-order normal coordinates ``y`` centred at ``center``.

    The transition map is the polynomial ``x(y) = p + L y - 1/2 G(Ly, Ly) + 1/6 C(Ly, Ly, Ly)``
    with ``L`` the inverse-transpose Cholesky factor of ``g(p)``, ``G`` the standard
    symbols at ``p`` and ``C^i_jkl = -d_l G^i_jk + 2 G^i_mk G^m_jl`` (the third
    derivative of a geodesic).  The pulled-back metric then equals the identity
    with vanishing first derivatives at ``y = 0``, and matches Riemann normal
    coordinates through second order.
    """

    center: np.ndarray
    linear: np.ndarray
    quadratic: np.ndarray
    cubic: np.ndarray
    chart: MetricChart
    order: int

    def coordinate_jets(self, order=None):
        """Jets of ``x^i(y)`` at ``y = 0``."""
        order = self.order if order is None else order
        n = len(self.center)
        y = [Jet.variable(a, 0.0, n, order) for a in range(n)]
        xi = [sum((self.linear[i, a] * y[a] for a in range(n)), start=Jet.constant(0.0, n, order)) for i in range(n)]
        out = []
        for i in range(n):
            acc = Jet.constant(self.center[i], n, order)
            acc = acc + xi[i]
            for j in range(n):
                for k in range(n):
                    if self.quadratic[i, j, k] != 0:
                        acc = acc - 0.5 * self.quadratic[i, j, k] * (xi[j] * xi[k])
                    for l in range(n):
                        if self.cubic[i, j, k, l] != 0:
                            acc = acc + (self.cubic[i, j, k, l] / 6.0) * (xi[j] * xi[k] * xi[l])
            out.append(acc)
        return out

    def jacobian_jets(self, order=None):
        """``J[i][a] = d x^i / d y^a`` as jets (one order lower)."""
        xs = self.coordinate_jets(order)
        n = len(xs)
        return [[xs[i].diff(a) for a in range(n)] for i in range(n)]

    def pulled_back_geometry(self, order=None):
        """:class:`LocalGeometry` of the metric in normal coordinates at the pole."""
        order = self.order if order is None else order
        xs = self.coordinate_jets(order + 1)
        n = len(xs)
        Jm = [[xs[i].diff(a) for a in range(n)] for i in range(n)]
        g = self.chart.pullback_jet([x.truncate(order) for x in xs])
        G = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                acc = Jet.constant(0.0, n, order)
                for i in range(n):
                    for j in range(n):
                        acc = acc + Jm[i][a] * Jm[j][b] * g[i][j]
                G[a][b] = G[b][a] = acc
        return LocalGeometry(G)

    def pull_scalar(self, f, order=None, t=None):
        order = self.order if order is None else order
        return as_field(f).compose(self.coordinate_jets(order), t)

    def pull_covector(self, comps, order=None):
        """Components ``A'_a(y) = A_i(x(y)) dx^i/dy^a`` of a one-form."""
        order = self.order if order is None else order
        xs = self.coordinate_jets(order + 1)
        n = len(xs)
        Jm = [[xs[i].diff(a) for a in range(n)] for i in range(n)]
        base = [x.truncate(order) for x in xs]
        Ai = [as_field(c).compose(base) for c in comps]
        return [sum((Ai[i] * Jm[i][a] for i in range(n)), start=Jet.constant(0.0, n, order)) for a in range(n)]


def normal_chart(m, p, order=DEFAULT_ORDER):
    """Construct second-order normal coordinates of ``m`` centred at ``p``."""
    p = np.asarray(p, dtype=float)
    geo = m.metric_jet(p, 2)
    g0 = geo.g_value
    try:
        C = np.linalg.cholesky(g0)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("metric is not positive definite") from exc
    L = np.linalg.inv(C).T
    n = m.n
    gam = _values3(geo.gamma_std)
    dgam = np.array([[[[geo.gamma_std[i][j][k].derivative(_unit(l, n)) for l in range(n)] for k in range(n)] for j in range(n)] for i in range(n)])
    # C^i_jkl for the cubic geodesic term, contracted symmetrically later
    cubic = -dgam + 2.0 * np.einsum("imk,mjl->ijkl", gam, gam)
    return NormalChart(center=p, linear=L, quadratic=gam, cubic=cubic, chart=m, order=order)


def _unit(i, n):
    e = [0] * n
    e[i] = 1
    return tuple(e)
