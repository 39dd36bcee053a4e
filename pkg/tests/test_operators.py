import math

import numpy as np
import pytest

from cqmq import manifolds
from cqmq import operators as ops
from cqmq import phase_algebra as pa
from cqmq.verifier import random_gauge, random_section, random_special

E1, E2 = manifolds.euclidean(1), manifolds.euclidean(2)
S2 = manifolds.sphere()
CURVED = manifolds.random_metric(4, n=2)
Z1, Z2 = ops.GaugePotential.zero(1), ops.GaugePotential.zero(2)
SPH = {"theta": 1, "phi": 2}


def sec(expr, n, frame=ops.ETA, aliases=None):
    return ops.HalfFormSection.make(expr, frame, n=n, aliases=aliases)


def test_observed_derivative_examples():
    np.testing.assert_allclose(ops.observed_derivative(sec("x1", 2), Z2, E2, [2.0, 3.0]), [1, 0])
    A = ops.GaugePotential.make("0", ["1", "0"], n=2)
    np.testing.assert_allclose(ops.observed_derivative(sec("1", 2), A, E2, [0.4, 0.1]), [-1j, 0])
    np.testing.assert_allclose(ops.observed_derivative(sec("exp(i*x1)", 2), A, E2, [0.4, 0.1]), [0, 0], atol=1e-15)


def test_observed_time_derivative():
    A = ops.GaugePotential.make("2", ["0"], n=1)
    s = sec("exp(i*(x1 - t/2))", 1)
    got = ops.observed_time_derivative(s, A, E1, np.array([0.3]), 0.2)
    assert got == pytest.approx((-0.5j - 2j) * np.exp(1j * (0.3 - 0.1)))


def test_halfform_derivative():
    f = sec("sin(x1)*x2", 2, ops.VFRAME)
    np.testing.assert_allclose(ops.halfform_derivative(f, E2, [0.3, 2.0]), [math.cos(0.3) * 2, math.sin(0.3)])
    one = sec("1", 2)
    assert np.max(np.abs(ops.halfform_derivative(one, S2, [0.8, 0.1]))) <= 1e-15
    vone = sec("1", 2, ops.VFRAME)
    th = 0.8
    det, ddet = math.sin(th) ** 2, 2 * math.sin(th) * math.cos(th)
    expect = -0.25 * det ** (-1.25) * ddet * det**0.25
    got = ops.halfform_derivative(vone, S2, [th, 0.1])
    assert abs(got[0] - expect) <= 1e-12 and abs(got[1]) <= 1e-15


@pytest.mark.parametrize("flag", [True, False])
def test_flat_laplacian(flag):
    assert ops.observed_laplacian(sec("x1^2 + x2^2", 2), Z2, E2, [0.3, -1.2], flag) == pytest.approx(4)
    a, b = 0.7, -1.3
    s = sec(f"exp(i*({a}*x1 + ({b})*x2))", 2)
    p = [0.5, 0.25]
    assert ops.observed_laplacian(s, Z2, E2, p, flag) == pytest.approx(-(a * a + b * b) * s.at(p))


def test_sphere_zonal_harmonic():
    s = sec("cos(theta)", 2, aliases=SPH)
    for th in (0.3, 1.0, 2.5):
        assert ops.observed_laplacian(s, Z2, S2, [th, 0.7]) == pytest.approx(-2 * math.cos(th), rel=1e-13)


def test_halfform_flag_matters_in_vframe_only():
    s = random_section(np.random.default_rng(0), 2)
    A = random_gauge(np.random.default_rng(1), 2)
    p = [0.9, 2.0]
    assert ops.observed_laplacian(s, A, CURVED, p, True) == pytest.approx(ops.observed_laplacian(s, A, CURVED, p, False), rel=1e-12)
    v = ops.to_vframe(s, CURVED)
    assert abs(ops.observed_laplacian(v, A, CURVED, p, True) - ops.observed_laplacian(v, A, CURVED, p, False)) > 1e-3


def test_lie_operator_examples():
    s = sec("sin(x1)", 1)
    x = pa.position(1, 1)
    assert ops.lie_operator_Z(x, s, Z1, E1, [0.4]) == pytest.approx(0.4 * math.sin(0.4))
    P = pa.momentum(1, E1)
    assert ops.lie_operator_Z(P, s, Z1, E1, [0.4]) == pytest.approx(-1j * math.cos(0.4))
    # v-frame form on a curved metric: Z[P_j] = -i d_j(psi_eta)
    s = random_section(np.random.default_rng(2), 2)
    v = ops.to_vframe(s, CURVED)
    P1 = pa.momentum(1, CURVED)
    got = ops.lie_operator(P1, v, Z2, CURVED).at([1.0, 2.0])
    expect = -1j * v.jet(np.array([1.0, 2.0]), 1).gradient()[0]
    assert got == pytest.approx(expect, rel=1e-12)


def test_quantum_operator_examples():
    rng = np.random.default_rng(3)
    s = random_section(rng, 2)
    p = [0.7, 1.4]
    x2 = pa.position(2, 2)
    assert ops.quantum_operator(x2, s, Z2, CURVED, 0.3, p) == pytest.approx(1.4 * s.at(p), rel=1e-13)
    v = ops.to_vframe(s, CURVED)
    P2 = pa.momentum(2, CURVED)
    expect = -1j * v.jet(np.array(p), 1).gradient()[1]
    assert ops.quantum(P2, v, Z2, CURVED).at(p) == pytest.approx(expect, rel=1e-12)
    H = pa.energy(E1)
    assert ops.quantum_operator(H, sec("exp(i*x1)", 1), Z1, E1, 0.0, [0.2]) == pytest.approx(0.5 * np.exp(0.2j))


def test_energy_cqm_equals_quantum_of_energy():
    rng = np.random.default_rng(4)
    A = random_gauge(rng, 2)
    s = random_section(rng, 2)
    H = pa.energy(CURVED, A)
    p = [0.2, 3.3]
    for k in (0.0, 1 / 6, 1.0):
        assert ops.energy_operator_cqm(s, A, CURVED, k, p) == pytest.approx(ops.quantum_operator(H, s, A, CURVED, k, p), rel=1e-13)


def test_energy_cqm_sphere():
    s = sec("cos(theta)", 2, aliases=SPH)
    p = [1.1, 0.3]
    assert ops.energy_operator_cqm(s, Z2, S2, 0.0, p) == pytest.approx(math.cos(1.1), rel=1e-13)
    assert ops.energy_operator_cqm(s, Z2, S2, 1.0, p) == pytest.approx(2 * math.cos(1.1), rel=1e-13)
    flat = sec("sin(x1)*cos(2*x2)", 2)
    for k in (0.0, 3.0):
        assert ops.energy_operator_cqm(flat, Z2, E2, k, [0.1, 0.2]) == pytest.approx(2.5 * math.sin(0.1) * math.cos(0.4))


@pytest.mark.parametrize("m", [S2, manifolds.perturbed_flat(2, 0.1), CURVED, manifolds.random_metric(9, n=3)], ids=lambda m: m.name)
def test_gq_equals_cqm_one_sixth(m):
    rng = np.random.default_rng(5)
    A = random_gauge(rng, m.n)
    for frame in (ops.ETA, ops.VFRAME):
        s = random_section(rng, m.n, frame)
        for p in pa.sample_points(m, 3, rng):
            gq = ops.energy_operator_gq(s, A, m, p)
            assert gq == pytest.approx(ops.energy_operator_cqm(s, A, m, 1 / 6, p), rel=1e-9, abs=1e-9)


def test_gq_flat_is_cqm_zero():
    s = random_section(np.random.default_rng(6), 2)
    p = np.array([0.4, 0.9])
    assert ops.energy_operator_gq(s, Z2, E2, p) == pytest.approx(ops.energy_operator_cqm(s, Z2, E2, 0.0, p))


def test_chart_local_gq_is_not_intrinsic():
    # the chart formula agrees at the pole of a normal chart only
    rng = np.random.default_rng(7)
    s = random_section(rng, 2)
    p = [1.0, 2.0]
    local = ops.energy_gq_chart(s, Z2, S2).at(p)
    assert abs(local - ops.energy_operator_cqm(s, Z2, S2, 1 / 6, p)) > 1e-3


def test_schrodinger_plane_wave():
    s = sec("exp(i*(x1 - t/2))", 1)
    assert abs(ops.schrodinger_operator(s, Z1, E1, 0.0, [0.3], 0.7)) <= 1e-15


def test_schrodinger_stationary_and_consistency():
    rng = np.random.default_rng(8)
    A = random_gauge(rng, 2)
    s = random_section(rng, 2)
    p, k = [0.5, 1.5], 0.4
    lap = ops.observed_laplacian(s, A, CURVED, p)
    r = CURVED.metric_jet(np.array(p), 2).r_paper.value
    psi = s.at(p)
    expect = -1j * A.time.value(p) * psi - 0.5j * lap - 0.5j * k * r * psi
    got = ops.schrodinger_operator(s, A, CURVED, k, p, 0.0)
    assert got == pytest.approx(expect, rel=1e-12)
    td = ops.HalfFormSection.make("exp(-i*t)*(" + str(s.coefficient.expression) + ")", n=2)
    lhs = ops.schrodinger_operator(td, A, CURVED, k, p, 0.3)
    H = ops.energy_operator_cqm(td, A, CURVED, k, p, 0.3)
    dt = td.coefficient.time_derivative(p, 0.3)
    assert abs(lhs - 1j * H - dt) <= 1e-10


def test_linearity():
    rng = np.random.default_rng(9)
    A = random_gauge(rng, 2)
    f = random_special(rng, CURVED, 1.0)
    s1, s2 = random_section(rng, 2), random_section(rng, 2)
    a, b = 0.3 - 1.1j, -0.7 + 0.2j
    comb = a * s1 + b * s2
    p = [2.0, 0.6]
    for op in (
        lambda u: ops.quantum(f, u, A, CURVED, 0.2),
        lambda u: ops.lie_operator(f, u, A, CURVED),
        lambda u: ops.energy_cqm(u, A, CURVED, 1 / 6),
        lambda u: ops.laplacian(u, A, CURVED),
    ):
        lhs = op(comb).at(p)
        rhs = a * op(s1).at(p) + b * op(s2).at(p)
        assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(lhs))


def test_frame_covariance_and_round_trip():
    rng = np.random.default_rng(10)
    A = random_gauge(rng, 2)
    f = random_special(rng, CURVED, 1.0)
    s = random_section(rng, 2)
    p = [1.7, 0.2]
    for op in (lambda u: ops.quantum(f, u, A, CURVED, 0.5).section, lambda u: ops.laplacian(u, A, CURVED).section):
        a = ops.to_vframe(op(s), CURVED).at(p)
        b = op(ops.to_vframe(s, CURVED)).at(p)
        assert abs(a - b) <= 1e-11 * max(1.0, abs(a))
    back = ops.to_etaframe(ops.to_vframe(s, CURVED), CURVED)
    assert abs(back.at(p) - s.at(p)) <= 1e-13


def test_operator_result_metadata():
    r = ops.laplacian(sec("x1", 2), Z2, E2, include_halfform=False)
    assert r.connections == ("gauge",)
    assert "halfform" in ops.laplacian(sec("x1", 2), Z2, E2).connections
