"""Acceptance criteria, one test per criterion at the stated tolerances.

Each test prints a single ``ACCEPTANCE`` line with its verdict before
asserting, so ``pytest -v -s`` (or the tee'd log) shows the full ledger.
"""

import time

import numpy as np
import pytest

from cqmq import manifolds
from cqmq import spectral as sp
from cqmq import verifier as V

SEED = 42


def announce(capsys, n, name, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {n} {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def test_corpus_shape():
    corpus = V.build_corpus(SEED)
    dims = [m.n for _, m in corpus[:-2]]
    assert len(dims) >= 20 and dims.count(2) >= 1 and dims.count(3) >= 1
    assert [label for label, _ in corpus[-2:]] == ["sphere(1)", "half_plane"]


def test_1_cancellation_theorem(capsys):
    t = time.perf_counter()
    rep = V.suite_cancellation(SEED)
    elapsed = time.perf_counter() - t
    ok = rep.max_residual <= 1e-8 and elapsed <= 30
    announce(capsys, 1, "cancellation theorem", ok, f"max residual {rep.max_residual:.2e} <= 1e-8 over {len(rep.samples)} samples, {elapsed:.1f}s <= 30s")
    assert rep.max_residual <= 1e-8
    assert elapsed <= 30


def test_2_k_one_sixth_reconciliation(capsys):
    rep = V.suite_k_reconciliation(SEED)
    kappa = rep.extra["kappa"]
    ok = rep.max_residual <= 1e-9 and abs(kappa - 1 / 6) <= 1e-6
    announce(capsys, 2, "k = 1/6 reconciliation", ok, f"|GQ - CQM(1/6)| {rep.max_residual:.2e} <= 1e-9, fitted kappa {kappa:.12f}")
    assert rep.max_residual <= 1e-9
    assert abs(kappa - 1 / 6) <= 1e-6


def test_3_pole_identities(capsys):
    rep = V.suite_pole_identities(SEED)
    r, t1, _, _ = V.pole_identity_values(manifolds.sphere(), np.array([1.2, 0.5]))
    ok = rep.max_residual <= 1e-9 and abs(t1 + 2) <= 1e-9 and abs(r + 2) <= 1e-9
    announce(capsys, 3, "pole identities", ok, f"max residual {rep.max_residual:.2e} <= 1e-9, sphere value {t1:.12f}")
    assert rep.max_residual <= 1e-9
    assert t1 == pytest.approx(-2.0, abs=1e-9)
    assert r == pytest.approx(-2.0, abs=1e-9)


def test_4_lemma(capsys):
    rep = V.suite_lemma(SEED)
    ok = rep.max_residual <= 1e-9
    announce(capsys, 4, "lemma", ok, f"max residual {rep.max_residual:.2e} <= 1e-9 over {len(rep.samples)} samples")
    assert ok


def test_5_spectral_shift(capsys):
    t = time.perf_counter()
    m = manifolds.sphere(1.0)
    grid = sp.make_grid(m, (64, 128))
    table = sp.k_sweep(m, None, grid, [0.0, 1 / 6, 1.0], 9, seed=SEED)
    elapsed = time.perf_counter() - t
    lam0 = table.reports[0].eigenvalues
    oracle = np.array([0, 1, 1, 1, 3, 3, 3, 3, 3], dtype=float)
    rel = np.abs(lam0[1:] - oracle[1:]) / oracle[1:]
    ok = abs(lam0[0]) <= 1e-8 and rel.max() <= 0.02 and table.r_constant and table.max_deviation <= 1e-10 and elapsed <= 120
    announce(
        capsys, 5, "spectral shift", ok,
        f"max rel. error {rel.max():.2e} <= 2%, shift deviation {table.max_deviation:.2e} <= 1e-10, {elapsed:.1f}s <= 120s",
    )
    assert abs(lam0[0]) <= 1e-8
    assert rel.max() <= 0.02
    assert table.r_value == pytest.approx(-2.0)
    assert table.max_deviation <= 1e-10
    assert elapsed <= 120


def test_6_flat_baselines(capsys):
    c = manifolds.circle()
    rep = sp.eigen_spectrum(sp.assemble_hamiltonian(c, None, sp.make_grid(c, (256,))), 7, seed=SEED)
    oracle = np.array([0, 0.5, 0.5, 2, 2, 4.5, 4.5])
    rel = np.abs(rep.eigenvalues[1:] - oracle[1:]) / oracle[1:]
    errs = []
    for N in (64, 128, 256):
        r = sp.eigen_spectrum(sp.assemble_hamiltonian(c, None, sp.make_grid(c, (N,))), 3, seed=SEED)
        errs.append(abs(r.eigenvalues[1] - 0.5))
    factors = [a / b for a, b in zip(errs, errs[1:])]
    ok = abs(rep.eigenvalues[0]) <= 1e-10 and rel.max() <= 5e-3 and all(abs(f - 4) <= 0.5 for f in factors)
    announce(capsys, 6, "flat baselines", ok, f"max rel. error {rel.max():.2e} <= 0.5%, convergence factors {[round(float(f), 3) for f in factors]}")
    assert abs(rep.eigenvalues[0]) <= 1e-10
    assert rel.max() <= 5e-3
    for f in factors:
        assert f == pytest.approx(4.0, abs=0.5)


def test_7_algebraic_layer(capsys):
    morph = V.suite_bracket_morphism(SEED)
    jac = V.suite_jacobi(SEED)
    comm = V.suite_commutator_anomaly(SEED, tolerance=1e-8)
    xp = [s for s in comm.samples if s["case"] == "circle:[x,P]"]
    hx = [s for s in comm.samples if s["case"] == "circle:[H0,x]"]
    xp_res = max(s["residual"] for s in xp)
    hx_res = max(s["residual"] for s in hx)
    anomaly = comm.extra["anomaly_norm_H0_x"]
    ok = morph.max_residual <= 1e-9 and jac.max_residual <= 1e-9 and xp_res <= 1e-8 and hx_res <= 1e-6 and anomaly > 1e-3
    announce(
        capsys, 7, "algebraic layer", ok,
        f"morphism {morph.max_residual:.2e}, Jacobi {jac.max_residual:.2e}, [x,P]-i {xp_res:.2e}, anomaly match {hx_res:.2e} (anomaly size {anomaly:.2f})",
    )
    assert morph.max_residual <= 1e-9
    assert jac.max_residual <= 1e-9
    assert xp_res <= 1e-8
    assert hx_res <= 1e-6
    assert anomaly > 1e-3


def test_8_structural_invariants(capsys):
    cases = V.hermiticity_cases(SEED)
    for name, m, counts in [("circle", manifolds.circle(), (256,)), ("sphere64x128", manifolds.sphere(), (64, 128))]:
        cases.append((name, sp.assemble_hamiltonian(m, None, sp.make_grid(m, counts), 1 / 6)))
    herm = V.verify_hermiticity(cases)
    par = V.suite_sqrt_eta_parallel(SEED)
    rt = V.suite_frame_roundtrip(SEED)
    ok = herm.max_residual <= 1e-10 and par.max_residual <= 1e-12 and rt.max_residual <= 1e-13
    announce(
        capsys, 8, "structural invariants", ok,
        f"Hermiticity {herm.max_residual:.2e} <= 1e-10, sqrt(eta) {par.max_residual:.2e} <= 1e-12, round trip {rt.max_residual:.2e} <= 1e-13",
    )
    assert herm.max_residual <= 1e-10
    assert par.max_residual <= 1e-12
    assert rt.max_residual <= 1e-13
