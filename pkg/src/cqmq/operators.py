"""Quantum operators acting on half-form sections.

Sections are stored by coefficient and frame.  In the eta-frame the
coefficient ``psi`` multiplies the parallel half-density ``sqrt(eta)``; in
the v-frame the coefficient ``psi_eta = psi |g|^(1/4)`` multiplies the
coordinate half-density ``sqrt(v)``.

Every operator returns a lazy section: its coefficient is a field whose jet
at order ``d`` is computed from jets of the inputs at a higher order, so
operators compose exactly (commutators, frame round trips).  The pointwise
helpers (``observed_laplacian(..., p)`` etc.) simply evaluate that field.

Conventions fixed here:

* ``D_i = d_i - i A_i`` on line-bundle coefficients;
* the half-density connection form is ``omega_i = -1/4 d_i log|g|`` so that
  ``sqrt(eta)`` is parallel;
* the Bochner Laplacian is ``g^ij (D_i D_j - G^k_ij D_k)`` with standard
  Levi-Civita symbols, i.e. the Laplace-Beltrami operator when ``A = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cqmq.geometry import DEFAULT_ORDER, normal_chart
from cqmq.jetcalc.fields import ZERO, ConstField, FuncField, as_field
from cqmq.jetcalc.jet import Jet

ETA = "eta"
VFRAME = "v"


# --------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class GaugePotential:
    """Time-independent gauge potential ``A_0, A_1..A_n``."""

    time: object
    spatial: tuple

    @classmethod
    def make(cls, a0="0", a=None, n=None, aliases=None):
        a = a if a is not None else ["0"] * n
        return cls(as_field(a0, n=n, aliases=aliases), tuple(as_field(x, n=n, aliases=aliases) for x in a))

    @classmethod
    def zero(cls, n):
        return cls(ZERO, tuple(ZERO for _ in range(n)))

    def spatial_jets(self, p, d, t=None):
        return [f.jet(p, d, t) for f in self.spatial]


@dataclass(frozen=True)
class HalfFormSection:
    coefficient: object
    frame: str = ETA

    @classmethod
    def make(cls, coefficient, frame=ETA, n=None, aliases=None):
        if frame not in (ETA, VFRAME):
            raise ValueError(f"unknown frame {frame!r}")
        return cls(as_field(coefficient, n=n, aliases=aliases), frame)

    def at(self, p, t=None):
        return self.coefficient.value(np.asarray(p, dtype=float), t)

    def jet(self, p, d, t=None):
        return self.coefficient.jet(np.asarray(p, dtype=float), d, t)

    def is_static(self):
        return self.coefficient.is_static()

    def dt(self):
        return HalfFormSection(self.coefficient.dt_field(), self.frame)

    def in_frame(self, frame, m):
        if frame == self.frame:
            return self
        return to_vframe(self, m) if frame == VFRAME else to_etaframe(self, m)

    def __add__(self, other):
        _same_frame(self, other)
        return HalfFormSection(self.coefficient + other.coefficient, self.frame)

    def __sub__(self, other):
        _same_frame(self, other)
        return HalfFormSection(self.coefficient - other.coefficient, self.frame)

    def __rmul__(self, c):
        return HalfFormSection(as_field(c) * self.coefficient, self.frame)


def _same_frame(a, b):
    if a.frame != b.frame:
        raise ValueError("sections are in different frames")


@dataclass(frozen=True)
class OperatorResult:
    section: HalfFormSection
    connections: tuple = field(default=())

    def at(self, p, t=None):
        return self.section.at(p, t)


def quarter_density(m):
    return FuncField(lambda p, d, t: m.metric_jet(p, d).quarter_det, label="|g|^(1/4)")


def to_vframe(s, m):
    if s.frame == VFRAME:
        return s
    q = quarter_density(m)
    return HalfFormSection(s.coefficient * q, VFRAME)


def to_etaframe(s, m):
    if s.frame == ETA:
        return s
    c = s.coefficient

    def fn(p, d, t):
        return c.jet(p, d, t) / m.metric_jet(p, d).quarter_det

    dt = None if c.is_static() else (lambda: to_etaframe(HalfFormSection(c.dt_field(), VFRAME), m).coefficient)
    return HalfFormSection(FuncField(fn, dt=dt, label="eta-frame"), ETA)


# --------------------------------------------------------------------------
# shared jet-level building blocks (used by pointwise and grid code)


def covariant_gradient(phi, A_jets, omega=None):
    """``D_i phi = d_i phi - i A_i phi (+ omega_i phi)``; one order lower."""
    out = []
    for i in range(phi.nvars):
        g = phi.diff(i) - 1j * (A_jets[i] * phi)
        if omega is not None:
            g = g + omega[i] * phi
        out.append(g)
    return out


def halfform_connection(geo):
    """``omega_i = -1/4 d_i log|g| = -1/2 G^h_ih`` (standard sign)."""
    return [-0.5 * tr for tr in geo.gamma_trace]


def bochner_laplacian_jet(phi, geo, A_jets, omega=None):
    """``g^ij (nabla_i nabla_j phi)`` for the connection ``d - iA (+ omega)``; two orders lower."""
    n = phi.nvars
    Dphi = covariant_gradient(phi, A_jets, omega)
    total = None
    for i in range(n):
        for j in range(n):
            nab = Dphi[j].diff(i) - 1j * (A_jets[i] * Dphi[j])
            if omega is not None:
                nab = nab + omega[i] * Dphi[j]
            for k in range(n):
                nab = nab - geo.gamma_std[k][i][j] * Dphi[k]
            term = geo.ginv[i][j] * nab
            total = term if total is None else total + term
    return total


def divergence_jet(vec, geo):
    """``d_j (f^j sqrt|g|) / sqrt|g| = d_j f^j + f^j G^h_jh``; one order lower."""
    total = None
    for j in range(len(vec)):
        term = vec[j].diff(j) + vec[j] * geo.gamma_trace[j]
        total = term if total is None else total + term
    return total


def _lazy(s, m, eta_op, extra=2, label="op"):
    """Section whose eta-frame coefficient is ``eta_op(psi, geo, p, order, t)``.

    The output is returned in the frame of ``s``.
    """
    eta_in = to_etaframe(s, m)
    c = eta_in.coefficient

    def fn(p, d, t):
        o = d + extra
        geo = m.metric_jet(p, o)
        psi = c.jet(p, o, t)
        out = eta_op(psi, geo, p, o, t).truncate(d)
        if s.frame == VFRAME:
            out = out * geo.quarter_det.truncate(d)
        return out

    def dt():
        return _lazy(HalfFormSection(c.dt_field(), ETA), m, eta_op, extra, label).in_frame(s.frame, m).coefficient

    return HalfFormSection(FuncField(fn, dt=None if c.is_static() else dt, label=label), s.frame)


# --------------------------------------------------------------------------
# derivatives and Laplacians


def observed_derivative(s, A, m, p, t=None):
    """Spatial components ``d_i psi - i A_i psi`` of the eta-frame coefficient at ``p``."""
    p = np.asarray(p, dtype=float)
    psi = to_etaframe(s, m).jet(p, 1, t)
    return np.array([g.value for g in covariant_gradient(psi, A.spatial_jets(p, 1, t))])


def observed_time_derivative(s, A, m, p, t):
    """``d_0 psi - i A_0 psi`` of the eta-frame coefficient."""
    e = to_etaframe(s, m)
    return e.coefficient.time_derivative(p, t) - 1j * A.time.value(p) * e.at(p, t)


def halfform_derivative(s, m, p, t=None):
    """Covariant derivative of the half-density part, reported on the v-frame coefficient.

    For ``s = phi sqrt(v)`` this returns the components of
    ``(d_i phi + omega_i phi)`` with ``omega`` making ``sqrt(eta)`` parallel.
    """
    p = np.asarray(p, dtype=float)
    v = to_vframe(s, m)
    geo = m.metric_jet(p, 1)
    phi = v.jet(p, 1, t)
    omega = halfform_connection(geo)
    return np.array([(phi.diff(i) + omega[i] * phi).value for i in range(m.n)])


def laplacian(s, A, m, include_halfform=True):
    """Observed Laplacian as a lazy section in the frame of ``s``.

    ``include_halfform=True`` uses the tensor product of the gauge
    connection with the half-density connection (the covariant Laplacian on
    half-forms).  ``include_halfform=False`` treats the coefficient as a bare
    line-bundle section with the density factor of its frame held fixed; in
    the eta-frame both agree because ``sqrt(eta)`` is parallel, in the v-frame
    the flag-off variant is the chart-dependent Laplacian of ``psi |g|^(1/4)``.
    """
    if include_halfform:
        if s.frame == ETA:
            # literal tensor-product route: go to the v-frame, apply the full connection, come back
            return OperatorResult(to_etaframe(_tensor_laplacian(to_vframe(s, m), A, m), m), ("gauge", "halfform"))
        return OperatorResult(_tensor_laplacian(s, A, m), ("gauge", "halfform"))
    return OperatorResult(_plain_laplacian(s, A, m), ("gauge",))


def _plain_laplacian(s, A, m):
    c = s.coefficient

    def fn(p, d, t):
        o = d + 2
        geo = m.metric_jet(p, o)
        return bochner_laplacian_jet(c.jet(p, o, t), geo, A.spatial_jets(p, o, t)).truncate(d)

    dt = None if c.is_static() else (lambda: _plain_laplacian(HalfFormSection(c.dt_field(), s.frame), A, m).coefficient)
    return HalfFormSection(FuncField(fn, dt=dt, label="laplacian"), s.frame)


def _tensor_laplacian(s, A, m):
    c = s.coefficient

    def fn(p, d, t):
        o = d + 2
        geo = m.metric_jet(p, o)
        omega = halfform_connection(geo)
        return bochner_laplacian_jet(c.jet(p, o, t), geo, A.spatial_jets(p, o, t), omega).truncate(d)

    dt = None if c.is_static() else (lambda: _tensor_laplacian(HalfFormSection(c.dt_field(), VFRAME), A, m).coefficient)
    return HalfFormSection(FuncField(fn, dt=dt, label="halfform laplacian"), VFRAME)


def observed_laplacian(s, A, m, p, include_halfform=True, t=None):
    return laplacian(s, A, m, include_halfform).at(p, t)


# --------------------------------------------------------------------------
# Z_f, quantum operators, energy operators, Schrodinger operator


def lie_operator(f, s, A, m):
    """``Z_f`` on half-forms for a time-independent special phase function ``f``.

    Eta-frame coefficient:
    ``i (f0 (d_0 - i A_0) - f^i D_i - i f_scal - 1/2 div f) psi``.
    """
    up = f.raised(m)
    zero_time = s.is_static()
    dt_part = None if zero_time else to_etaframe(s, m).dt().coefficient

    def op(psi, geo, p, o, t):
        Aj = A.spatial_jets(p, o, t)
        D = covariant_gradient(psi, Aj)
        fu = [c.jet(p, o, t) for c in up]
        out = -1j * f.f_scal.jet(p, o, t) * psi - 0.5 * divergence_jet(fu, geo) * psi
        for i in range(m.n):
            out = out - fu[i] * D[i]
        if f.f0:
            time_part = -1j * A.time.jet(p, o, t) * psi
            if dt_part is not None:
                time_part = time_part + dt_part.jet(p, o, t)
            out = out + f.f0 * time_part
        return 1j * out

    return OperatorResult(_lazy(s, m, op, extra=1, label="Z_f"), ("gauge", "halfform"))


def lie_operator_Z(f, s, A, m, p, t=None):
    return lie_operator(f, s, A, m).at(p, t)


def quantum(f, s, A, m, k=0.0):
    """Quantum operator of ``f``:

    ``(-1/2 f0 Lap - i f^j D_j + f_scal - 1/2 k f0 r - i/2 div f) psi``
    with the half-form Laplacian and ``r = r_paper``.
    """
    up = f.raised(m)

    def op(psi, geo, p, o, t):
        Aj = A.spatial_jets(p, o, t)
        out = f.f_scal.jet(p, o, t) * psi
        if f.f0:
            lap = bochner_laplacian_jet(psi, geo, Aj)
            out = out - 0.5 * f.f0 * lap - (0.5 * k * f.f0) * geo.r_paper * psi
        if any(not _is_zero(c) for c in f.f_lin):
            fu = [c.jet(p, o, t) for c in up]
            D = covariant_gradient(psi, Aj)
            for j in range(m.n):
                out = out - 1j * fu[j] * D[j]
            out = out - 0.5j * divergence_jet(fu, geo) * psi
        return out

    return OperatorResult(_lazy(s, m, op, extra=2, label="f^"), ("gauge", "halfform"))


def _is_zero(f):
    return f is ZERO or (isinstance(f, ConstField) and f.c == 0)


def quantum_operator(f, s, A, m, k, p, t=None):
    return quantum(f, s, A, m, k).at(p, t)


def energy_cqm(s, A, m, k=0.0):
    """``(-1/2 Lap - A_0 - 1/2 k r) psi`` with the half-form Laplacian."""

    def op(psi, geo, p, o, t):
        lap = bochner_laplacian_jet(psi, geo, A.spatial_jets(p, o, t))
        return -0.5 * lap - A.time.jet(p, o, t) * psi - (0.5 * k) * geo.r_paper * psi

    return OperatorResult(_lazy(s, m, op, extra=2, label="H0"), ("gauge", "halfform"))


def energy_operator_cqm(s, A, m, k, p, t=None):
    return energy_cqm(s, A, m, k).at(p, t)


def energy_gq_chart(s, A, m):
    """``-1/2 Lap(psi_eta) - A_0 psi_eta`` computed in the chart of ``m`` (v-frame).

    Only at the pole of a normal chart does this agree with the BKS
    operator; elsewhere it depends on the coordinates.
    """
    v = to_vframe(s, m)
    lap = _plain_laplacian(v, A, m).coefficient
    out = HalfFormSection(-0.5 * lap - A.time * v.coefficient, VFRAME)
    return OperatorResult(out.in_frame(s.frame, m), ("gauge",))


def energy_operator_gq(s, A, m, p, t=None, order=DEFAULT_ORDER):
    """BKS energy operator at ``p``: ``-1/2 Lap(psi_eta b) (x) sqrt(v) - A_0 psi_eta``.

    Evaluated at the pole of a normal chart centred at ``p``, where the v- and
    eta-frames coincide, and returned in the frame of ``s`` in the original
    chart.  Batched points are handled one pole at a time.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim > 1:
        flat = p.reshape(p.shape[0], -1)
        vals = [energy_operator_gq(s, A, m, flat[:, j], t, order) for j in range(flat.shape[1])]
        return np.array(vals).reshape(p.shape[1:])
    eta = to_etaframe(s, m)
    nc = normal_chart(m, p, order)
    psi = nc.pull_scalar(eta.coefficient, order, t)
    geo = nc.pulled_back_geometry(order)
    A_y = nc.pull_covector(A.spatial, order)
    a0 = nc.pull_scalar(A.time, order)
    phi = psi * geo.quarter_det
    val = (-0.5 * bochner_laplacian_jet(phi, geo, A_y) - a0 * phi).value
    # pole of the normal chart: |g| = 1, so this is the eta-frame coefficient
    if s.frame == VFRAME:
        val = val * m.metric_jet(p, 0).quarter_det.value
    return val


def schrodinger(s, A, m, k=0.0):
    """``S psi = d_0 psi - i A_0 psi - i/2 Lap psi - i/2 k r psi`` on the eta-frame coefficient.

    Equivalently ``S = d_0 + i H_0`` with ``H_0`` the energy operator.
    """
    H = energy_cqm(s, A, m, k).section
    out = 1j * H
    if not s.is_static():
        out = out + s.dt()
    return OperatorResult(out, ("gauge", "halfform"))


def schrodinger_operator(s, A, m, k, p, t):
    return schrodinger(s, A, m, k).at(p, t)


def commutator(op_f, op_g, s):
    """``[F, G] s`` for operators given as callables ``section -> section``."""
    return op_f(op_g(s)) - op_g(op_f(s))
