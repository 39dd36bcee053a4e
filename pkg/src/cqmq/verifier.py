"""Residual-producing checks of the curvature identities and structural claims.

Every check returns a :class:`ResidualReport`; ``pass`` holds exactly when
the maximum residual is at most the tolerance.  Checks built from a seed
(the ``suite_*`` functions) draw their metrics, sections, gauges and points
from ``numpy.random.default_rng(seed)`` and are deterministic.

Tolerance ladder: ``1e-9``/``1e-8`` for jet-exact pointwise identities,
``1e-10`` for matrix symmetry certificates, ``1e-12`` for the parallelism of
the half-density ``sqrt(eta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cqmq import manifolds
from cqmq import operators as ops
from cqmq import phase_algebra as pa
from cqmq import spectral
from cqmq.errors import GridTooCoarse
from cqmq.geometry import normal_chart
from cqmq.manifolds import _lit

SCHEMA_VERSION = 1
POLE_ORDER = 2

TOLERANCES = {
    "lemma": 1e-9,
    "cancellation": 1e-8,
    "k_reconciliation": 1e-9,
    "pole_identities": 1e-9,
    "bracket_morphism": 1e-10,
    "jacobi": 1e-9,
    "commutator_anomaly": 1e-8,
    "hermiticity": 1e-10,
    "sqrt_eta_parallel": 1e-12,
    "frame_roundtrip": 1e-13,
}


@dataclass
class ResidualReport:
    check: str
    corpus: dict
    tolerance: float
    max_residual: float
    seed: int = None
    samples: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.max_residual <= self.tolerance)

    def to_dict(self):
        out = {
            "schema_version": SCHEMA_VERSION,
            "check": self.check,
            "seed": self.seed,
            "corpus": self.corpus,
            "tolerance": self.tolerance,
            "max_residual": float(self.max_residual),
            "pass": self.passed,
            "samples": self.samples,
        }
        if self.extra:
            out["extra"] = self.extra
        return out

    def with_tolerance(self, tol):
        return ResidualReport(self.check, self.corpus, tol, self.max_residual, self.seed, self.samples, self.extra)


def _report(check, corpus, tol, samples, seed=None, extra=None):
    worst = max((s["residual"] for s in samples), default=0.0)
    return ResidualReport(check, corpus, tol, float(worst), seed, samples, extra or {})


def _points(p, n):
    p = np.asarray(p, dtype=float)
    return [p] if p.ndim == 1 else [row for row in p.reshape(-1, n)]


def _sample(label, p, residual, **kw):
    out = {"case": label, "point": [float(x) for x in p], "residual": float(residual)}
    out.update({k: float(v) if np.isscalar(v) else v for k, v in kw.items()})
    return out


# --------------------------------------------------------------------------
# corpus


def random_expression(rng, n, degree=2, terms=3, complex_=False, scale=1.0):
    """Trigonometric polynomial in ``x1..xn`` with random coefficients."""

    def coef():
        re = _lit(scale * rng.uniform(-1, 1))
        if not complex_:
            return re
        return f"({re} + {_lit(scale * rng.uniform(-1, 1))}*i)"

    parts = [coef()]
    for _ in range(terms):
        k = rng.integers(-degree, degree + 1, size=n)
        if not k.any():
            k[rng.integers(n)] = 1
        arg = " + ".join(f"{_lit(float(ki))}*x{i + 1}" for i, ki in enumerate(k) if ki)
        fn = "cos" if rng.random() < 0.5 else "sin"
        parts.append(f"{coef()}*{fn}({arg})")
    return " + ".join(parts)


def random_section(rng, n, frame=ops.ETA):
    return ops.HalfFormSection.make(random_expression(rng, n, complex_=True), frame, n=n)


def random_gauge(rng, n, scale=0.5):
    return ops.GaugePotential.make(
        random_expression(rng, n, scale=scale), [random_expression(rng, n, scale=scale) for _ in range(n)], n=n
    )


def random_special(rng, m, f0=None):
    """Random special phase function; ``f0`` drawn from {0, 1} unless given."""
    n = m.n
    f0 = float(rng.integers(0, 2)) if f0 is None else f0
    lin = [random_expression(rng, n, scale=0.5) for _ in range(n)]
    return pa.SpecialPhaseFunction.make(f0, lin, random_expression(rng, n, scale=0.5), n=n)


def build_corpus(seed, count=20, dims=(2, 3), eps=0.15, include_models=True):
    """``count`` random analytic metrics split over ``dims``, plus the model charts."""
    rng = np.random.default_rng(seed)
    out = []
    for j in range(count):
        n = dims[j % len(dims)]
        sub = int(rng.integers(2**31))
        out.append((f"random(n={n},seed={sub})", manifolds.random_metric(sub, n=n, eps=eps)))
    if include_models:
        out.append(("sphere(1)", manifolds.sphere(1.0)))
        out.append(("half_plane", manifolds.half_plane()))
    return out


def _corpus_descriptor(corpus, points_per):
    return {"metrics": [c[0] for c in corpus], "points_per_metric": points_per}


# --------------------------------------------------------------------------
# pointwise checks


def lemma_terms(m, A, s, p):
    """The four terms of the product-rule splitting of the half-form Laplacian at ``p``.

    For ``Psi = phi b (x) sqrt(v)`` with ``phi`` the v-frame coefficient:
    ``plain`` is the line-bundle Laplacian of ``phi b``, ``full`` the
    tensor-product Laplacian of ``Psi``, ``cross`` is ``G(D(phi b), nabla sqrt v)``
    and ``second`` is ``G(nabla nabla sqrt v)``.
    """
    p = np.asarray(p, dtype=float)
    geo = m.metric_jet(p, 2)
    phi = ops.to_vframe(s, m).jet(p, 2)
    Aj = A.spatial_jets(p, 2)
    omega = ops.halfform_connection(geo)
    plain = ops.bochner_laplacian_jet(phi, geo, Aj).value
    full = ops.bochner_laplacian_jet(phi, geo, Aj, omega).value
    D = ops.covariant_gradient(phi, Aj)
    n = m.n
    gi = geo.ginv_value
    cross = sum(gi[i][j] * D[i].value * omega[j].value for i in range(n) for j in range(n))
    second = 0.0
    for i in range(n):
        for j in range(n):
            t = omega[j].diff(i).value + omega[i].value * omega[j].value
            t = t - sum(geo.gamma_std[k][i][j].value * omega[k].value for k in range(n))
            second = second + gi[i][j] * t
    return plain, full, cross, second, phi.value


def verify_lemma(m, A, s, p, tolerance=TOLERANCES["lemma"], label=None):
    """Residual of ``plain = full - 2 cross - phi * second`` at the given point(s)."""
    samples = []
    for q in _points(p, m.n):
        plain, full, cross, second, phi = lemma_terms(m, A, s, q)
        res = abs(plain - (full - 2 * cross - phi * second))
        samples.append(_sample(label or m.name, q, res))
    return _report("lemma", {"metric": m.name}, tolerance, samples)


def pole_quantities(m, A, s, p):
    """Both sides of the cancellation identity at the pole of a normal chart at ``p``.

    Returns ``(lhs, rhs, r)`` with ``lhs`` the half-form Laplacian of ``Psi``
    and ``rhs = Lap(psi_eta b) - 1/6 r psi`` (coefficients at the pole, where
    both frames coincide).
    """
    nc = normal_chart(m, p, POLE_ORDER)
    geo = nc.pulled_back_geometry(POLE_ORDER)
    psi = nc.pull_scalar(ops.to_etaframe(s, m).coefficient, POLE_ORDER)
    Ay = nc.pull_covector(A.spatial, POLE_ORDER)
    phi = psi * geo.quarter_det
    omega = ops.halfform_connection(geo)
    lhs = ops.bochner_laplacian_jet(phi, geo, Ay, omega).value
    r = geo.r_paper.value
    rhs = ops.bochner_laplacian_jet(phi, geo, Ay).value - r * psi.value / 6.0
    return lhs, rhs, r


def verify_cancellation(m, A, s, p, tolerance=TOLERANCES["cancellation"], label=None):
    """Pole form and chart-independent form of the cancellation identity.

    Each sample records ``pole_residual`` (both sides at the pole of the
    normal chart) and ``global_residual`` (``energy_operator_gq`` against
    ``energy_operator_cqm`` with ``k = 1/6`` in the original chart).
    """
    samples = []
    for q in _points(p, m.n):
        lhs, rhs, r = pole_quantities(m, A, s, q)
        pole = abs(lhs - rhs)
        glob = abs(ops.energy_operator_gq(s, A, m, q, order=POLE_ORDER) - ops.energy_operator_cqm(s, A, m, 1 / 6, q))
        samples.append(_sample(label or m.name, q, max(pole, glob), pole_residual=pole, global_residual=glob, r_paper=r))
    return _report("cancellation", {"metric": m.name}, tolerance, samples)


def pole_identity_values(m, p):
    """Values entering the two pole identities in a normal chart at ``p``.

    Returns ``(r, trace_second, lhs2, rhs2)``: ``r`` is ``r_paper`` at the pole,
    ``trace_second = 3/2 G^ik g^pq d_i d_k g_pq``, and ``lhs2``/``rhs2`` are
    ``1/2 G^ij d_i Gamma^h_jh`` (flipped-sign symbols) and
    ``-1/4 G^ij g^hk d_i d_j g_hk``.
    """
    nc = normal_chart(m, p, POLE_ORDER)
    geo = nc.pulled_back_geometry(POLE_ORDER)
    n = m.n
    gi = geo.ginv_value
    dd = lambda a, b, i, j: geo.g[a][b].derivative(tuple(int(x == i) + int(x == j) for x in range(n)))
    t1 = 1.5 * sum(gi[i][k] * gi[a][b] * dd(a, b, i, k) for i in range(n) for k in range(n) for a in range(n) for b in range(n))
    trace_flip = [-tr for tr in geo.gamma_trace]
    lhs2 = 0.5 * sum(gi[i][j] * trace_flip[j].diff(i).value for i in range(n) for j in range(n))
    rhs2 = -0.25 * sum(gi[i][j] * gi[h][k] * dd(h, k, i, j) for i in range(n) for j in range(n) for h in range(n) for k in range(n))
    return geo.r_paper.value, t1, lhs2, rhs2


def verify_pole_identities(m, p, tolerance=TOLERANCES["pole_identities"], label=None):
    samples = []
    for q in _points(p, m.n):
        r, t1, l2, r2 = pole_identity_values(m, q)
        a, b = abs(r - t1), abs(l2 - r2)
        samples.append(_sample(label or m.name, q, max(a, b), curvature_residual=a, trace_residual=b, r_paper=r, trace_value=t1))
    return _report("pole_identities", {"metric": m.name}, tolerance, samples)


def verify_bracket_morphism(f, g, m, sample_count=20, seed=0, tolerance=TOLERANCES["bracket_morphism"], label=None):
    """``max |[X_f, X_g] - X_[[f,g]]|`` over random points."""
    rng = np.random.default_rng(seed)
    h = pa.special_bracket(f, g, m)
    Xf, Xg, Xh = pa.tangent_lift(f, m), pa.tangent_lift(g, m), pa.tangent_lift(h, m)
    samples = []
    for q in pa.sample_points(m, sample_count, rng):
        lhs = pa.lie_bracket_at(Xf, Xg, q)
        res = float(np.max(np.abs(lhs - Xh.at(q))))
        samples.append(_sample(label or m.name, q, res))
    return _report("bracket_morphism", {"metric": m.name, "points": sample_count}, tolerance, samples, seed)


def verify_jacobi(f, g, h, m, sample_count=10, seed=0, tolerance=TOLERANCES["jacobi"], label=None):
    """Cyclic sum of nested special brackets evaluated on phase space."""
    rng = np.random.default_rng(seed)
    br = lambda a, b: pa.special_bracket(a, b, m, check=False)
    terms = [br(f, br(g, h)), br(g, br(h, f)), br(h, br(f, g))]
    samples = []
    for q in pa.sample_points(m, sample_count, rng):
        v = rng.uniform(-1, 1, size=m.n)
        res = abs(sum(pa.evaluate(t, m, q, v) for t in terms))
        samples.append(_sample(label or m.name, q, res))
    return _report("jacobi", {"metric": m.name, "points": sample_count}, tolerance, samples, seed)


# --------------------------------------------------------------------------
# commutators


def fourier_sections(n, max_freq=2):
    """Plane waves ``exp(i k.x)`` with ``|k_j| <= max_freq``."""
    import itertools

    out = []
    for k in itertools.product(range(-max_freq, max_freq + 1), repeat=n):
        arg = " + ".join(f"{_lit(float(kj))}*x{j + 1}" for j, kj in enumerate(k) if kj) or "0"
        out.append((list(k), ops.HalfFormSection.make(f"exp(i*({arg}))", n=n)))
    return out


def commutator_terms(f, g, m, A, k, s):
    """Sections ``[f^, g^] s``, ``(i [[f,g]])^ s`` and the anomaly ``[X, S] s``.

    ``X = -i (g0 Z_f - f0 Z_g)`` and ``S`` is the Schrodinger operator.
    """
    q = lambda h: (lambda u: ops.quantum(h, u, A, m, k).section)
    Q = lambda u: ops.schrodinger(u, A, m, k).section
    Z = lambda h: (lambda u: ops.lie_operator(h, u, A, m).section)
    comm = ops.commutator(q(f), q(g), s)
    bracket = pa.special_bracket(f, g, m)
    image = 1j * q(bracket)(s)

    def X(u):
        out = None
        if g.f0:
            out = (-1j * g.f0) * Z(f)(u)
        if f.f0:
            t = (1j * f.f0) * Z(g)(u)
            out = t if out is None else out + t
        return out

    anomaly = None
    if f.f0 or g.f0:
        anomaly = X(Q(s)) - Q(X(s))
    return comm, image, anomaly


def verify_commutator_anomaly(f, g, grid, m, A, k=0.0, tolerance=TOLERANCES["commutator_anomaly"], max_freq=2, label=None):
    """``[f^, g^] - i [[f,g]]^`` against the anomaly term on a basis of plane waves.

    The operators act exactly (jet composition) and are sampled at the grid
    nodes.  The plane-wave basis must be resolved by the grid: fewer than
    ``4 * max_freq + 1`` nodes along an axis raises :class:`GridTooCoarse`.
    """
    if min(grid.counts) < 4 * max_freq + 1:
        raise GridTooCoarse(f"grid {grid.counts} cannot resolve test sections up to frequency {max_freq}")
    pts = grid.nodes()
    samples = []
    comm_norm = anomaly_norm = 0.0
    for freq, s in fourier_sections(m.n, max_freq):
        comm, image, anomaly = commutator_terms(f, g, m, A, k, s)
        c = np.asarray(comm.at(pts))
        d = c - np.asarray(image.at(pts))
        a = np.zeros_like(d) if anomaly is None else np.asarray(anomaly.at(pts))
        res = float(np.max(np.abs(d - a)))
        comm_norm = max(comm_norm, float(np.max(np.abs(c))))
        anomaly_norm = max(anomaly_norm, float(np.max(np.abs(a))))
        samples.append({"case": label or m.name, "frequency": freq, "residual": res, "defect_norm": float(np.max(np.abs(d)))})
    extra = {"commutator_norm": comm_norm, "anomaly_norm": anomaly_norm, "grid": grid.descriptor()}
    return _report("commutator_anomaly", {"metric": m.name, "grid": list(grid.counts)}, tolerance, samples, extra=extra)


# --------------------------------------------------------------------------
# structural checks


def verify_hermiticity(cases, tolerance=TOLERANCES["hermiticity"]):
    """Symmetry certificates of assembled operators; ``cases`` is ``[(label, DiscreteOperator)]``."""
    samples = [{"case": label, "residual": float(H.certificate), "size": H.grid.size} for label, H in cases]
    return _report("hermiticity", {"operators": [c for c, _ in cases]}, tolerance, samples)


def sqrt_eta_residuals(m, A, s, p):
    """Residuals for the parallelism of ``sqrt(eta)``.

    ``parallel``: the half-density derivative of the section with eta-frame
    coefficient 1.  ``compensated``: the v-frame coefficient-1 section against
    the analytic ``-1/4 |g|^(-5/4) d|g|`` times ``|g|^(1/4)``.  ``covariance``:
    the Bochner Laplacian of ``psi`` converted to the v-frame against the
    tensor-product Laplacian of the v-frame coefficient.
    """
    n = m.n
    p = np.asarray(p, dtype=float)
    one = ops.HalfFormSection.make(1, ops.ETA, n=n)
    parallel = float(np.max(np.abs(ops.halfform_derivative(one, m, p))))
    geo = m.metric_jet(p, 1)
    det = geo.det
    vone = ops.HalfFormSection.make(1, ops.VFRAME, n=n)
    # in the eta frame this section is |g|^(-1/4); its derivative is compensated by omega
    got = ops.halfform_derivative(vone, m, p)
    expect = np.array([-0.25 * det.value ** (-1.25) * det.diff(i).value * det.value**0.25 for i in range(n)])
    compensated = float(np.max(np.abs(got - expect)))
    geo2 = m.metric_jet(p, 2)
    psi = ops.to_etaframe(s, m).jet(p, 2)
    Aj = A.spatial_jets(p, 2)
    eta_route = ops.bochner_laplacian_jet(psi, geo2, Aj).value * geo2.quarter_det.value
    phi = ops.to_vframe(s, m).jet(p, 2)
    v_route = ops.bochner_laplacian_jet(phi, geo2, Aj, ops.halfform_connection(geo2)).value
    covariance = abs(eta_route - v_route) / max(1.0, abs(eta_route))
    return parallel, compensated, covariance


def verify_sqrt_eta_parallel(m, A, s, p, tolerance=TOLERANCES["sqrt_eta_parallel"], label=None):
    samples = []
    for q in _points(p, m.n):
        a, b, c = sqrt_eta_residuals(m, A, s, q)
        samples.append(_sample(label or m.name, q, max(a, b, c), parallel=a, compensated=b, covariance=c))
    return _report("sqrt_eta_parallel", {"metric": m.name}, tolerance, samples)


def verify_frame_roundtrip(m, s, p, tolerance=TOLERANCES["frame_roundtrip"], label=None):
    samples = []
    for q in _points(p, m.n):
        back = ops.to_vframe(ops.to_etaframe(s, m), m) if s.frame == ops.VFRAME else ops.to_etaframe(ops.to_vframe(s, m), m)
        a = s.at(q)
        res = abs(back.at(q) - a) / max(1.0, abs(a))
        samples.append(_sample(label or m.name, q, res))
    return _report("frame_roundtrip", {"metric": m.name}, tolerance, samples)


def k_reconciliation(corpus_cases, tolerance=TOLERANCES["k_reconciliation"]):
    """Pointwise ``|GQ - CQM(1/6)|`` and a least-squares fit of the curvature coefficient.

    ``corpus_cases`` is a list of ``(label, m, A, s, points)``.  The fit solves
    ``GQ - CQM(0) = -1/2 kappa r psi`` for ``kappa`` over all samples.
    """
    samples, num, den = [], 0.0, 0.0
    for label, m, A, s, pts in corpus_cases:
        for q in _points(pts, m.n):
            gq = ops.energy_operator_gq(s, A, m, q, order=POLE_ORDER)
            c0 = ops.energy_operator_cqm(s, A, m, 0.0, q)
            c6 = ops.energy_operator_cqm(s, A, m, 1 / 6, q)
            r = float(np.real(m.metric_jet(q, 2).r_paper.value))
            x = -0.5 * r * ops.to_etaframe(s, m).at(q)
            if s.frame == ops.VFRAME:
                x = x * m.metric_jet(q, 0).quarter_det.value
            num += np.real(np.conj(x) * (gq - c0))
            den += abs(x) ** 2
            samples.append(_sample(label, q, abs(gq - c6)))
    kappa = num / den if den else float("nan")
    return _report("k_reconciliation", {"cases": len(corpus_cases)}, tolerance, samples, extra={"kappa": float(kappa)})


# --------------------------------------------------------------------------
# seeded suites


def _cases(seed, count=20, points=2, dims=(2, 3), manifold=None, gauge=None):
    """Metric, gauge, section and points per corpus entry.

    With ``manifold`` the corpus is that single chart (``4 * points`` points);
    ``gauge`` then replaces the random gauge.
    """
    rng = np.random.default_rng([seed, 1])
    out = []
    if manifold is not None:
        corpus, points = [(manifold.name, manifold)], 4 * points
    else:
        corpus = build_corpus(seed, count, dims)
    for label, m in corpus:
        A = gauge if gauge is not None else random_gauge(rng, m.n)
        s = random_section(rng, m.n)
        pts = np.array(pa.sample_points(m, points, rng))
        out.append((label, m, A, s, pts))
    return out


def _merge(check, seed, tol, reports, corpus):
    samples = [s for r in reports for s in r.samples]
    extra = {}
    for r in reports:
        extra.update(r.extra)
    return _report(check, corpus, tol, samples, seed, extra)


def suite_lemma(seed, tolerance=None, manifold=None, gauge=None, count=20, points=2):
    cases = _cases(seed, count, points, manifold=manifold, gauge=gauge)
    tol = tolerance or TOLERANCES["lemma"]
    reps = [verify_lemma(m, A, s, pts, tol, label) for label, m, A, s, pts in cases]
    return _merge("lemma", seed, tol, reps, _corpus_descriptor(cases, points))


def suite_cancellation(seed, tolerance=None, manifold=None, gauge=None, count=20, points=2):
    cases = _cases(seed, count, points, manifold=manifold, gauge=gauge)
    tol = tolerance or TOLERANCES["cancellation"]
    reps = [verify_cancellation(m, A, s, pts, tol, label) for label, m, A, s, pts in cases]
    return _merge("cancellation", seed, tol, reps, _corpus_descriptor(cases, points))


def suite_k_reconciliation(seed, tolerance=None, manifold=None, gauge=None, count=20, points=2):
    cases = _cases(seed, count, points, manifold=manifold, gauge=gauge)
    rep = k_reconciliation(cases, tolerance or TOLERANCES["k_reconciliation"])
    rep.seed = seed
    rep.corpus = _corpus_descriptor(cases, points)
    return rep


def suite_pole_identities(seed, tolerance=None, manifold=None, gauge=None, count=20, points=2):
    cases = _cases(seed, count, points, manifold=manifold, gauge=gauge)
    tol = tolerance or TOLERANCES["pole_identities"]
    reps = [verify_pole_identities(m, pts, tol, label) for label, m, A, s, pts in cases]
    return _merge("pole_identities", seed, tol, reps, _corpus_descriptor(cases, points))


def _phase_pairs(seed, count=4, manifold=None):
    rng = np.random.default_rng([seed, 2])
    out = []
    for j in range(count):
        m = manifold if manifold is not None else manifolds.random_metric(int(rng.integers(2**31)), n=2)
        out.append((m, random_special(rng, m, 0.0), random_special(rng, m, 0.0), random_special(rng, m, 1.0)))
    return out


def suite_bracket_morphism(seed, tolerance=None, manifold=None, gauge=None, count=4, points=10):
    tol = tolerance or TOLERANCES["bracket_morphism"]
    reps = []
    for m, f, g, h in _phase_pairs(seed, count, manifold):
        reps.append(verify_bracket_morphism(f, g, m, points, seed, tol))
        reps.append(verify_bracket_morphism(f, h, m, points, seed, tol))
    return _merge("bracket_morphism", seed, tol, reps, {"metrics": count, "points_per_pair": points})


def suite_jacobi(seed, tolerance=None, manifold=None, gauge=None, count=2, points=5):
    tol = tolerance or TOLERANCES["jacobi"]
    reps = [verify_jacobi(f, g, h, m, points, seed, tol) for m, f, g, h in _phase_pairs(seed, count, manifold)]
    return _merge("jacobi", seed, tol, reps, {"metrics": count, "points_per_triple": points})


def suite_commutator_anomaly(seed, tolerance=None, manifold=None, gauge=None, nodes=128):
    """``[x^, P^] = i`` and the ``(H_0, x)`` anomaly on the circle, plus a random pair on a curved chart."""
    tol = tolerance or TOLERANCES["commutator_anomaly"]
    c = manifolds.circle()
    A = ops.GaugePotential.zero(1)
    grid = spectral.make_grid(c, (nodes,))
    x, P, H = pa.position(1, 1), pa.momentum(1, c, A), pa.energy(c, A)
    reps = [
        verify_commutator_anomaly(x, P, grid, c, A, 0.0, tol, label="circle:[x,P]"),
        verify_commutator_anomaly(H, x, grid, c, A, 0.0, tol, label="circle:[H0,x]"),
    ]
    # random pair on a curved chart; the gauge is pure gauge (F = 0), which the anomaly law presupposes
    rng = np.random.default_rng([seed, 4])
    m = manifolds.random_metric(int(rng.integers(2**31)), n=2)
    flat_gauge = ops.GaugePotential.make(_lit(rng.uniform(-1, 1)), ["0.3 + cos(x1)*cos(x2)", "-sin(x1)*sin(x2)"], n=2)
    f, g = random_special(rng, m, 1.0), random_special(rng, m, 0.0)
    reps.append(verify_commutator_anomaly(f, g, spectral.make_grid(m, (12, 12)), m, flat_gauge, 0.5, tol, max_freq=1, label="curved:[f,g]"))
    extra = {"anomaly_norm_H0_x": reps[1].extra["anomaly_norm"], "commutator_norm_x_P": reps[0].extra["commutator_norm"]}
    out = _merge("commutator_anomaly", seed, tol, reps, {"metric": c.name, "grid": [nodes]})
    out.extra = extra
    return out


def hermiticity_cases(seed, sphere_grid=(32, 64), torus_grid=(32, 32)):
    rng = np.random.default_rng([seed, 3])
    torus = manifolds.flat_torus()
    tg = spectral.make_grid(torus, torus_grid)
    A = ops.GaugePotential.make(random_expression(rng, 2, scale=0.3), [random_expression(rng, 2, scale=0.3) for _ in range(2)], n=2)
    cases = [("flat_torus:H0", spectral.assemble_hamiltonian(torus, A, tg, 0.5))]
    for j in range(2):
        f = random_special(rng, torus)
        cases.append((f"flat_torus:f{j}", spectral.assemble_operator(f, torus, A, tg, 0.5)))
    pert = manifolds.perturbed_flat(2, 0.1)
    cases.append(("perturbed_flat:H0", spectral.assemble_hamiltonian(pert, A, spectral.make_grid(pert, torus_grid), 1.0)))
    sph = manifolds.sphere()
    cases.append(("sphere:H0", spectral.assemble_hamiltonian(sph, None, spectral.make_grid(sph, sphere_grid), 1 / 6)))
    return cases


def suite_hermiticity(seed, tolerance=None, manifold=None, gauge=None):
    rep = verify_hermiticity(hermiticity_cases(seed), tolerance or TOLERANCES["hermiticity"])
    rep.seed = seed
    return rep


def suite_sqrt_eta_parallel(seed, tolerance=None, manifold=None, gauge=None, count=6, points=2):
    cases = _cases(seed, count, points, manifold=manifold, gauge=gauge)
    tol = tolerance or TOLERANCES["sqrt_eta_parallel"]
    reps = [verify_sqrt_eta_parallel(m, A, s, pts, tol, label) for label, m, A, s, pts in cases]
    return _merge("sqrt_eta_parallel", seed, tol, reps, _corpus_descriptor(cases, points))


def suite_frame_roundtrip(seed, tolerance=None, manifold=None, gauge=None, count=6, points=4):
    cases = _cases(seed, count, points, manifold=manifold, gauge=gauge)
    tol = tolerance or TOLERANCES["frame_roundtrip"]
    reps = []
    for label, m, A, s, pts in cases:
        reps.append(verify_frame_roundtrip(m, s, pts, tol, label))
        reps.append(verify_frame_roundtrip(m, ops.HalfFormSection(s.coefficient, ops.VFRAME), pts, tol, label))
    return _merge("frame_roundtrip", seed, tol, reps, _corpus_descriptor(cases, points))


SUITES = {
    "lemma": suite_lemma,
    "cancellation": suite_cancellation,
    "pole_identities": suite_pole_identities,
    "bracket_morphism": suite_bracket_morphism,
    "commutator_anomaly": suite_commutator_anomaly,
    "hermiticity": suite_hermiticity,
    "sqrt_eta_parallel": suite_sqrt_eta_parallel,
    "k_reconciliation": suite_k_reconciliation,
    "jacobi": suite_jacobi,
    "frame_roundtrip": suite_frame_roundtrip,
}

DEFAULT_SUITE = (
    "lemma",
    "cancellation",
    "pole_identities",
    "bracket_morphism",
    "commutator_anomaly",
    "hermiticity",
    "sqrt_eta_parallel",
)


def run_check(name, seed, tolerance=None, manifold=None, gauge=None):
    """Run one named suite; ``manifold``/``gauge`` restrict the pointwise corpus."""
    return SUITES[name](seed, tolerance, manifold, gauge)
