import math

import numpy as np
import pytest

from cqmq import manifolds
from cqmq import spectral as sp
from cqmq.errors import DomainError, GridTooCoarse, NoConvergence
from cqmq.operators import GaugePotential
from cqmq.verifier import random_special

CIRCLE = manifolds.circle()
TORUS = manifolds.flat_torus()
SPHERE = manifolds.sphere()


def test_circle_stencil_is_textbook():
    g = sp.make_grid(CIRCLE, (8,))
    H = sp.assemble_hamiltonian(CIRCLE, None, g).matrix.toarray()
    h = 2 * math.pi / 8
    T = (2 * np.eye(8) - np.roll(np.eye(8), 1, 0) - np.roll(np.eye(8), -1, 0)) / (2 * h * h)
    np.testing.assert_allclose(H, T, atol=1e-14)


def test_grid_validation():
    with pytest.raises(GridTooCoarse):
        sp.make_grid(CIRCLE, (2,))
    with pytest.raises(DomainError):
        sp.make_grid(manifolds.half_plane(), (8, 8))
    g = sp.make_grid(SPHERE, (8, 16))
    assert g.pole_offset == (True, False) and g.periodic == (False, True)
    assert g.axes[0][0] == pytest.approx(math.pi / 16)
    assert np.all(g.weights > 0)


def test_k_dependence_is_diagonal():
    g = sp.make_grid(SPHERE, (16, 32))
    H0 = sp.assemble_hamiltonian(SPHERE, None, g, 0.0).matrix
    H1 = sp.assemble_hamiltonian(SPHERE, None, g, 0.7).matrix
    D = (H1 - H0).toarray()
    np.testing.assert_allclose(D, np.diag(np.diag(D)), atol=0)
    np.testing.assert_allclose(np.diag(D), -0.5 * 0.7 * -2.0, rtol=1e-12)


def test_sphere_certificate():
    g = sp.make_grid(SPHERE, (64, 128))
    assert sp.assemble_hamiltonian(SPHERE, None, g, 1 / 6).certificate <= 1e-10


def test_random_metric_and_gauge_certificate():
    m = manifolds.random_metric(3, n=2)
    A = GaugePotential.make("cos(x1)", ["0.3*sin(x2)", "0.2 + cos(x1 + x2)"], n=2)
    g = sp.make_grid(m, (24, 20))
    H = sp.assemble_hamiltonian(m, A, g, 0.4)
    assert H.certificate <= 1e-10
    vals = np.linalg.eigvals(H.matrix.toarray())
    assert np.max(np.abs(vals.imag)) <= 1e-10


def test_quantum_operators_hermitian_on_torus():
    rng = np.random.default_rng(0)
    A = GaugePotential.make("0", ["0.4*cos(x2)", "0.1"], n=2)
    g = sp.make_grid(TORUS, (16, 16))
    for _ in range(4):
        H = sp.assemble_operator(random_special(rng, TORUS), TORUS, A, g, 0.3)
        assert H.certificate <= 1e-10


def test_eigensolver_matches_dense():
    m = manifolds.random_metric(5, n=2)
    g = sp.make_grid(m, (20, 24))
    H = sp.assemble_hamiltonian(m, GaugePotential.make("0.5*cos(x1)", ["0.2", "0"], n=2), g, 0.0)
    rep = sp.eigen_spectrum(H, 8, seed=3)
    dense = np.linalg.eigvalsh(H.symmetrized().toarray())
    np.testing.assert_allclose(rep.eigenvalues, dense[:8], rtol=1e-9, atol=1e-10)
    assert rep.converged and rep.iterations > 0


def test_eigensolver_is_deterministic():
    g = sp.make_grid(TORUS, (24, 24))
    H = sp.assemble_hamiltonian(TORUS, None, g)
    a, b = sp.eigen_spectrum(H, 5, seed=9), sp.eigen_spectrum(H, 5, seed=9)
    assert a.to_dict() == b.to_dict()


def test_no_convergence_reports_partial():
    g = sp.make_grid(SPHERE, (32, 64))
    H = sp.assemble_hamiltonian(SPHERE, None, g)
    with pytest.raises(NoConvergence) as info:
        sp.eigen_spectrum(H, 9, seed=0, tol=1e-30, max_iter=2)
    assert info.value.partial is not None and not info.value.partial.converged


def test_circle_fourier_oracle():
    g = sp.make_grid(CIRCLE, (256,))
    rep = sp.eigen_spectrum(sp.assemble_hamiltonian(CIRCLE, None, g), 7, seed=0)
    expect = np.array([0, 0.5, 0.5, 2, 2, 4.5, 4.5])
    assert abs(rep.eigenvalues[0]) <= 1e-10
    np.testing.assert_allclose(rep.eigenvalues[1:], expect[1:], rtol=5e-3)


def test_torus_fourier_oracle():
    g = sp.make_grid(TORUS, (64, 64))
    rep = sp.eigen_spectrum(sp.assemble_hamiltonian(TORUS, None, g), 5, seed=0)
    assert abs(rep.eigenvalues[0]) <= 1e-10
    np.testing.assert_allclose(rep.eigenvalues[1:], 0.5, rtol=1e-2)


def test_convergence_order():
    errs = []
    for N in (64, 128, 256):
        rep = sp.eigen_spectrum(sp.assemble_hamiltonian(CIRCLE, None, sp.make_grid(CIRCLE, (N,))), 3, seed=0)
        errs.append(abs(rep.eigenvalues[1] - 0.5))
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(4.0, abs=0.5)


def test_constant_gauge_shift_on_circle():
    a = 0.3
    A = GaugePotential.make("0", [str(a)], n=1)
    rep = sp.eigen_spectrum(sp.assemble_hamiltonian(CIRCLE, A, sp.make_grid(CIRCLE, (256,))), 5, seed=0)
    expect = np.sort([0.5 * (n - a) ** 2 for n in range(-3, 4)])[:5]
    np.testing.assert_allclose(rep.eigenvalues, expect, rtol=5e-3)


def test_sweep_flat_torus_has_zero_shift():
    g = sp.make_grid(TORUS, (24, 24))
    tab = sp.k_sweep(TORUS, None, g, [0.0, 5.0], 5, seed=1)
    assert tab.r_constant and tab.max_deviation <= 1e-12
    assert np.all(np.abs(tab.shifts) <= 1e-12)


def test_sweep_non_constant_curvature_skips_assertion():
    m = manifolds.perturbed_flat(2, 0.1)
    tab = sp.k_sweep(m, None, sp.make_grid(m, (16, 16)), [0.0, 1.0], 4, seed=1)
    assert not tab.r_constant and tab.expected is None


def test_csv_rows():
    tab = sp.k_sweep(CIRCLE, None, sp.make_grid(CIRCLE, (32,)), [0.0, 1.0], 3, seed=0)
    text = sp.spectrum_csv(tab)
    lines = text.strip().splitlines()
    assert lines[0] == "k,j,lambda,shift" and len(lines) == 7
