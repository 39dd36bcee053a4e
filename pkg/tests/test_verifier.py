import json
import math

import numpy as np
import pytest

from cqmq import manifolds
from cqmq import operators as ops
from cqmq import phase_algebra as pa
from cqmq import spectral
from cqmq import verifier as V
from cqmq.errors import GridTooCoarse

E2 = manifolds.euclidean(2)
Z2 = ops.GaugePotential.zero(2)
S2 = manifolds.sphere()


def test_report_pass_flag():
    r = V.ResidualReport("x", {}, 1e-9, 1e-9)
    assert r.passed
    assert not r.with_tolerance(1e-10).passed
    d = r.to_dict()
    assert set(d) >= {"check", "seed", "corpus", "tolerance", "max_residual", "pass", "samples", "schema_version"}


def test_lemma_examples():
    s = V.random_section(np.random.default_rng(0), 2)
    rep = V.verify_lemma(E2, Z2, s, [0.3, 0.4])
    assert rep.max_residual == 0
    # on a flat chart the derivative of sqrt(v) vanishes
    _, _, cross, second, _ = V.lemma_terms(E2, Z2, s, [0.3, 0.4])
    assert cross == 0 and second == 0
    one = ops.HalfFormSection.make("1", n=2)
    assert V.verify_lemma(S2, Z2, one, [math.pi / 3, 1.0]).max_residual <= 1e-10
    pert = manifolds.perturbed_flat(2, 0.1)
    rng = np.random.default_rng(1)
    pts = np.array(pa.sample_points(pert, 20, rng))
    rep = V.verify_lemma(pert, V.random_gauge(rng, 2), V.random_section(rng, 2), pts)
    assert len(rep.samples) == 20 and rep.passed and rep.max_residual <= 1e-9


def test_cancellation_examples():
    s = V.random_section(np.random.default_rng(2), 2)
    lhs, rhs, r = V.pole_quantities(E2, Z2, s, [0.1, 0.2])
    assert r == 0 and lhs == pytest.approx(rhs, abs=1e-14)
    s = ops.HalfFormSection.make("1 + cos(theta)/10", n=2, aliases={"theta": 1})
    rep = V.verify_cancellation(S2, Z2, s, [math.pi / 2, 0.0])
    assert rep.max_residual <= 1e-8
    rep = V.verify_cancellation(manifolds.half_plane(), Z2, V.random_section(np.random.default_rng(3), 2), [0.0, 2.0])
    assert rep.max_residual <= 1e-8 and rep.samples[0]["r_paper"] == pytest.approx(2.0)


def test_cancellation_detects_wrong_coefficient():
    # both sides differ by exactly r psi / 6 when the curvature term is dropped
    s = ops.HalfFormSection.make("1", n=2)
    lhs, rhs, r = V.pole_quantities(S2, Z2, s, [1.0, 0.5])
    assert abs((rhs + r / 6) - lhs) == pytest.approx(abs(r) / 6)


def test_pole_identities_examples():
    rep = V.verify_pole_identities(E2, [0.0, 0.0])
    assert rep.max_residual == 0
    r, t1, l2, r2 = V.pole_identity_values(S2, [1.0, 2.0])
    assert t1 == pytest.approx(-2.0, abs=1e-9) and r == pytest.approx(-2.0, abs=1e-12)
    assert V.verify_pole_identities(S2, [1.0, 2.0]).max_residual <= 1e-9
    m3 = manifolds.random_metric(17, n=3)
    pts = np.array(pa.sample_points(m3, 3, np.random.default_rng(0)))
    assert V.verify_pole_identities(m3, pts).max_residual <= 1e-8


def test_bracket_morphism_examples():
    assert V.verify_bracket_morphism(pa.position(1, 2), pa.position(2, 2), E2, 5).max_residual == 0
    P1, P2 = pa.momentum(1, E2), pa.momentum(2, E2)
    assert V.verify_bracket_morphism(P1, P2, E2, 5).max_residual == 0
    m = manifolds.random_metric(21, n=2)
    rng = np.random.default_rng(4)
    f, g = V.random_special(rng, m), V.random_special(rng, m)
    assert V.verify_bracket_morphism(f, g, m, 10).max_residual <= 1e-10


def test_jacobi():
    m = manifolds.random_metric(22, n=2)
    rng = np.random.default_rng(5)
    f, g, h = (V.random_special(rng, m) for _ in range(3))
    assert V.verify_jacobi(f, g, h, m, 4).max_residual <= 1e-9


def test_commutator_examples():
    c = manifolds.circle()
    Z1 = ops.GaugePotential.zero(1)
    grid = spectral.make_grid(c, (128,))
    x, P, H = pa.position(1, 1), pa.momentum(1, c, Z1), pa.energy(c, Z1)
    rep = V.verify_commutator_anomaly(x, P, grid, c, Z1)
    assert rep.max_residual <= 1e-8 and rep.extra["commutator_norm"] == pytest.approx(1.0)
    rep = V.verify_commutator_anomaly(H, x, grid, c, Z1)
    assert rep.max_residual <= 1e-6 and rep.extra["anomaly_norm"] > 1.0
    assert max(s["defect_norm"] for s in rep.samples) > 1.0
    g2 = spectral.make_grid(manifolds.flat_torus(), (12, 12))
    rep = V.verify_commutator_anomaly(pa.position(1, 2), pa.position(2, 2), g2, manifolds.flat_torus(), Z2, max_freq=1)
    assert rep.extra["commutator_norm"] <= 1e-13


def test_commutator_needs_resolving_grid():
    c = manifolds.circle()
    with pytest.raises(GridTooCoarse):
        V.verify_commutator_anomaly(pa.position(1, 1), pa.position(1, 1), spectral.make_grid(c, (8,)), c, ops.GaugePotential.zero(1))


def test_sqrt_eta_and_round_trip():
    m = manifolds.random_metric(8, n=3)
    rng = np.random.default_rng(6)
    s = V.random_section(rng, 3)
    pts = np.array(pa.sample_points(m, 3, rng))
    assert V.verify_sqrt_eta_parallel(m, V.random_gauge(rng, 3), s, pts).max_residual <= 1e-12
    assert V.verify_frame_roundtrip(m, s, pts).max_residual <= 1e-13


def test_suite_is_deterministic():
    a = json.dumps(V.run_check("lemma", 7).to_dict(), sort_keys=True)
    b = json.dumps(V.run_check("lemma", 7).to_dict(), sort_keys=True)
    assert a == b
    assert json.dumps(V.run_check("lemma", 8).to_dict(), sort_keys=True) != a


def test_suite_restricted_to_manifold():
    rep = V.run_check("cancellation", 1, manifold=S2)
    assert rep.corpus["metrics"] == [S2.name] and rep.passed


def test_forced_failure():
    rep = V.run_check("pole_identities", 1, tolerance=1e-20)
    assert not rep.passed


@pytest.mark.parametrize("f0,g0", [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.0, 0.0)])
def test_anomaly_law_on_curved_chart(f0, g0):
    m = manifolds.random_metric(3, n=2)
    rng = np.random.default_rng(int(10 * f0 + g0))
    A = ops.GaugePotential.make("0.7", ["0.3 + cos(x1)*cos(x2)", "-sin(x1)*sin(x2)"], n=2)
    f, g = V.random_special(rng, m, f0), V.random_special(rng, m, g0)
    rep = V.verify_commutator_anomaly(f, g, spectral.make_grid(m, (10, 10)), m, A, 0.3, max_freq=1)
    assert rep.max_residual <= 1e-10
    if f0 or g0:
        assert rep.extra["anomaly_norm"] > 1e-2
