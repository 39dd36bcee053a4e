"""Finite-difference Hamiltonians on coordinate grids and their low spectra.

The discretization is built from the quadratic form

    Q(psi) = 1/2 sum_ij  int sqrt|g| g^ij conj(D_i psi) D_j psi,   D = d - iA,

so the assembled matrix ``H`` is self-adjoint for the weighted inner product
``<u, v> = sum w conj(u) v`` with ``w = sqrt|g| * prod(h)``.  Diagonal
(``i = j``) terms use forward differences on cell edges with the flux
coefficient sampled at edge midpoints; mixed terms use central differences.
Gauge potentials enter through Peierls phases ``exp(-i h A(mid))`` so that a
constant potential is an exact gauge shift of the discrete spectrum.

Non-periodic axes are sampled at cell centres (``lo + (j + 1/2) h``) with a
zero-flux closure on the outermost edges; on the sphere this keeps every
node away from the coordinate poles, where the flux coefficient vanishes
anyway.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from cqmq.errors import DomainError, GridTooCoarse, NoConvergence

HERMITIAN_TOL = 1e-10


# --------------------------------------------------------------------------
# grids


@dataclass
class Grid:
    """Tensor-product grid on a chart.

    Attributes
    ----------
    counts : tuple of int
    spacings : tuple of float
    periodic : tuple of bool
    pole_offset : tuple of bool
        Whether a non-periodic axis is staggered by half a cell.
    axes : list of ndarray
        1-D node coordinates per axis.
    weights : ndarray
        Quadrature weights ``sqrt|g| * prod(h)`` at the nodes (flattened).
    """

    counts: tuple
    spacings: tuple
    periodic: tuple
    pole_offset: tuple
    axes: list
    weights: np.ndarray = None
    chart_name: str = ""

    @property
    def size(self):
        return int(np.prod(self.counts))

    @property
    def cell(self):
        return float(np.prod(self.spacings))

    def nodes(self):
        """Node coordinates, shape ``(n, size)`` in C order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.array([a.ravel() for a in mesh])

    def shifted(self, axis, half=0.5):
        """Coordinates of the points ``node + half * h * e_axis``."""
        pts = self.nodes()
        pts[axis] = pts[axis] + half * self.spacings[axis]
        return pts

    def descriptor(self):
        return {
            "chart": self.chart_name,
            "counts": list(self.counts),
            "spacings": [float(h) for h in self.spacings],
            "periodic": list(self.periodic),
            "pole_offset": list(self.pole_offset),
        }


def make_grid(m, counts):
    """Uniform grid on the chart domain of ``m``.

    Periodic axes start at the domain's lower end; bounded non-periodic axes
    are offset by half a cell.  Unbounded non-periodic axes cannot be gridded.
    """
    counts = tuple(int(c) for c in counts)
    if len(counts) != m.n:
        raise ValueError(f"grid has {len(counts)} axes, chart has {m.n}")
    if min(counts) < 3:
        raise GridTooCoarse("every axis needs at least 3 nodes")
    axes, hs, per, off = [], [], [], []
    for a, N in enumerate(counts):
        lo, hi = m.domain[a]
        P = m.periods[a]
        if P is not None:
            lo = lo if np.isfinite(lo) else 0.0
            h = P / N
            axes.append(lo + h * np.arange(N))
            per.append(True)
            off.append(False)
        else:
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise DomainError(f"axis {a + 1} is neither periodic nor bounded")
            h = (hi - lo) / N
            axes.append(lo + h * (np.arange(N) + 0.5))
            per.append(False)
            off.append(True)
        hs.append(h)
    grid = Grid(counts, tuple(hs), tuple(per), tuple(off), axes, chart_name=m.name)
    geo = m.metric_jet(grid.nodes(), 0)
    grid.weights = np.sqrt(np.asarray(geo.det.value, dtype=float)) * grid.cell
    if np.any(grid.weights <= 0):
        raise DomainError("non-positive quadrature weight")
    return grid


# --------------------------------------------------------------------------
# discrete operators


@dataclass
class DiscreteOperator:
    """Sparse matrix with the inner-product weights it is self-adjoint for."""

    matrix: sp.csr_matrix
    grid: Grid
    weights: np.ndarray
    certificate: float = field(default=None)
    label: str = ""

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix)
        if self.certificate is None:
            self.certificate = symmetry_certificate(self.matrix, self.weights)

    def __matmul__(self, v):
        return self.matrix @ v

    def symmetrized(self):
        """``W^(1/2) H W^(-1/2)``, Hermitian in the plain inner product."""
        s = np.sqrt(self.weights)
        return sp.csr_matrix(sp.diags(s) @ self.matrix @ sp.diags(1.0 / s))


def symmetry_certificate(H, w):
    """``max |H_ij w_i - conj(H_ji) w_j|``."""
    WH = sp.csr_matrix(sp.diags(w) @ H)
    D = WH - WH.conj().T
    return float(np.max(np.abs(D.data))) if D.nnz else 0.0


def _index(grid):
    return np.arange(grid.size).reshape(grid.counts)


def _edge_pairs(grid, axis):
    """Node index pairs ``(k, k + e_axis)`` for all edges along ``axis``."""
    idx = _index(grid)
    nxt = np.roll(idx, -1, axis=axis)
    if not grid.periodic[axis]:
        sl = [slice(None)] * len(grid.counts)
        sl[axis] = slice(0, grid.counts[axis] - 1)
        idx, nxt = idx[tuple(sl)], nxt[tuple(sl)]
    return idx.ravel(), nxt.ravel()


def _edge_midpoints(grid, axis, lo):
    pts = grid.shifted(axis, 0.5)
    return pts[:, lo]


def _field_values(f, pts):
    return np.asarray(f.value(pts), dtype=complex) * np.ones(pts.shape[1])


def _peierls(A, axis, pts, h):
    return np.exp(-1j * h * _field_values(A.spatial[axis], pts))


def forward_difference(grid, A, axis):
    """Edge-valued ``(U psi_{k+e} - psi_k) / h`` as a sparse (edges x nodes) matrix."""
    lo, hi = _edge_pairs(grid, axis)
    h = grid.spacings[axis]
    U = _peierls(A, axis, _edge_midpoints(grid, axis, lo), h) if A is not None else np.ones(len(lo))
    E = len(lo)
    rows = np.concatenate([np.arange(E), np.arange(E)])
    cols = np.concatenate([lo, hi])
    vals = np.concatenate([-np.ones(E), U]) / h
    return sp.csr_matrix((vals, (rows, cols)), shape=(E, grid.size)), lo


def central_difference(grid, A, axis):
    """Node-valued ``(U+ psi_{k+e} - U- psi_{k-e}) / 2h`` with mirrored ghosts on open axes."""
    lo, hi = _edge_pairs(grid, axis)
    h = grid.spacings[axis]
    U = _peierls(A, axis, _edge_midpoints(grid, axis, lo), h) if A is not None else np.ones(len(lo))
    N = grid.size
    # forward neighbour of lo is hi with phase U; backward neighbour of hi is lo with phase conj(U)
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    vals = np.concatenate([U, -np.conj(U)]) / (2 * h)
    C = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    if not grid.periodic[axis]:
        # mirrored ghost psi_ghost = psi_k at both ends
        idx = _index(grid)
        first = np.take(idx, 0, axis=axis).ravel()
        last = np.take(idx, grid.counts[axis] - 1, axis=axis).ravel()
        diag = np.zeros(N)
        diag[first] += 1.0 / (2 * h)
        diag[last] -= 1.0 / (2 * h)
        C = C + sp.diags(diag)
    return sp.csr_matrix(C)


def kinetic_form(m, A, grid):
    """Sparse Hermitian matrix of ``sum sqrt|g| g^ij conj(D_i psi) D_j psi * prod(h)``."""
    n = m.n
    K = sp.csr_matrix((grid.size, grid.size), dtype=complex)
    for a in range(n):
        B, lo = forward_difference(grid, A, a)
        mid = _edge_midpoints(grid, a, lo)
        geo = m.metric_jet(mid, 0)
        c = np.sqrt(np.asarray(geo.det.value, dtype=float)) * np.asarray(geo.ginv_value[a][a], dtype=float) * grid.cell
        K = K + B.conj().T @ sp.diags(c) @ B
    if n > 1:
        geo = m.metric_jet(grid.nodes(), 0)
        ginv = geo.ginv_value
        C = [central_difference(grid, A, a) for a in range(n)]
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                c = grid.weights * np.asarray(ginv[a][b], dtype=float) * np.ones(grid.size)
                if np.max(np.abs(c)) == 0:
                    continue
                K = K + C[a].conj().T @ sp.diags(c) @ C[b]
    return sp.csr_matrix(K)


def scalar_curvature_nodes(m, grid):
    geo = m.metric_jet(grid.nodes(), 2)
    return np.asarray(geo.r_paper.value, dtype=float) * np.ones(grid.size)


def assemble_hamiltonian(m, A, grid, k=0.0, curvature=None):
    """``-1/2 Lap - A_0 - 1/2 k r`` on ``grid``.

    ``curvature`` may pass precomputed node values of ``r_paper``.
    """
    if A is None:
        from cqmq.operators import GaugePotential

        A = GaugePotential.zero(m.n)
    W = grid.weights
    K = kinetic_form(m, A, grid)
    r = scalar_curvature_nodes(m, grid) if curvature is None else curvature
    V = -np.real(_field_values(A.time, grid.nodes())) - 0.5 * k * r
    H = 0.5 * sp.diags(1.0 / W) @ K + sp.diags(V)
    op = DiscreteOperator(H, grid, W, label=f"H0(k={k:g})")
    op.potential = V
    return op


def assemble_operator(f, m, A, grid, k=0.0):
    """Discretized quantum operator of a special phase function ``f``.

    ``-1/2 f0 Lap - i f^j D_j - i/2 div f + f_scal - 1/2 k f0 r``.  The
    first-order part is built as ``-i/2 (T - T*)`` with ``T = f^j C_j`` and
    ``T*`` its weighted adjoint, which is the discrete counterpart of the
    symmetrized derivative.
    """
    if A is None:
        from cqmq.operators import GaugePotential

        A = GaugePotential.zero(m.n)
    W = grid.weights
    pts = grid.nodes()
    N = grid.size
    H = sp.diags(_field_values(f.f_scal, pts))
    if f.f0:
        H0 = assemble_hamiltonian(m, A, grid, k)
        # drop the -A_0 of H0; f_scal already carries the scalar part
        H = H + f.f0 * (H0.matrix + sp.diags(np.real(_field_values(A.time, pts))))
    up = f.raised(m)
    T = sp.csr_matrix((N, N), dtype=complex)
    for j in range(m.n):
        fj = _field_values(up[j], pts)
        if np.max(np.abs(fj)) == 0:
            continue
        T = T + sp.diags(fj) @ central_difference(grid, A, j)
    if T.nnz:
        Tstar = sp.diags(1.0 / W) @ T.conj().T @ sp.diags(W)
        H = H - 0.5j * (T - Tstar)
    return DiscreteOperator(H, grid, W, label="f^")


# --------------------------------------------------------------------------
# eigensolver


@dataclass
class SpectrumReport:
    k: float
    eigenvalues: np.ndarray
    grid: dict
    residuals: np.ndarray
    seed: int
    iterations: int
    converged: bool = True
    norm_estimate: float = 0.0
    certificate: float = 0.0

    def to_dict(self):
        return {
            "k": float(self.k),
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "grid": self.grid,
            "seed": int(self.seed),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "norm_estimate": float(self.norm_estimate),
            "symmetry_certificate": float(self.certificate),
        }


def lower_bound(H):
    """Lower bound for the spectrum: the potential's minimum if known (kinetic part is PSD)."""
    V = getattr(H, "potential", None)
    if V is not None:
        return float(np.min(V))
    S = H.symmetrized()
    d = np.real(S.diagonal())
    off = np.asarray(abs(S).sum(axis=1)).ravel() - np.abs(d)
    return float(np.min(d - off))


def eigen_spectrum(H, m_count, seed=0, block=None, tol=1e-10, max_iter=None, k=0.0):
    """Lowest ``m_count`` eigenvalues by shift-invert block Lanczos.

    The Krylov space of ``(S - sigma)^-1`` with ``S = W^(1/2) H W^(-1/2)`` is
    built block by block with full (twice repeated) reorthogonalization and
    Rayleigh-Ritz extraction.  ``sigma`` sits below a spectral lower bound so
    the wanted eigenvalues are the dominant ones.  Convergence is declared when
    every wanted Ritz pair has ``||S v - lambda v|| <= tol * ||S||_1``.

    Raises
    ------
    NoConvergence
        If ``max_iter`` block steps do not converge; ``partial`` holds the
        last report with ``converged=False``.
    """
    if H.certificate > HERMITIAN_TOL * max(1.0, _wnorm(H)):
        raise DomainError(f"operator is not self-adjoint (certificate {H.certificate:.3g})")
    S = H.symmetrized()
    S = 0.5 * (S + S.conj().T)
    N = S.shape[0]
    m_count = min(m_count, N)
    block = block or min(N, max(8, m_count // 2 + 4))
    norm = float(spla.norm(S, 1))
    sigma = lower_bound(H) - 0.5 - 1e-3 * abs(lower_bound(H))
    rng = np.random.default_rng(seed)

    if N <= 4 * block + m_count:
        vals, vecs = np.linalg.eigh(S.toarray())
        res = np.linalg.norm(S @ vecs[:, :m_count] - vecs[:, :m_count] * vals[:m_count], axis=0)
        return SpectrumReport(k, vals[:m_count], H.grid.descriptor(), res, seed, 0, True, norm, H.certificate)

    lu = spla.splu(sp.csc_matrix(S - sigma * sp.identity(N, format="csc")))
    Q = np.linalg.qr(rng.standard_normal((N, block)) + 1j * rng.standard_normal((N, block)))[0]
    basis = Q
    images = lu.solve(Q)
    max_iter = max_iter or max(50, 4 * m_count)
    report = None
    for it in range(1, max_iter + 1):
        T = basis.conj().T @ images
        T = 0.5 * (T + T.conj().T)
        theta, Y = np.linalg.eigh(T)
        order = np.argsort(-theta)[:m_count]
        lam = sigma + 1.0 / theta[order]
        V = basis @ Y[:, order]
        res = np.linalg.norm(S @ V - V * lam, axis=0)
        srt = np.argsort(lam)
        report = SpectrumReport(k, lam[srt], H.grid.descriptor(), res[srt], seed, it, False, norm, H.certificate)
        if len(lam) == m_count and np.all(res <= tol * norm):
            report.converged = True
            return report
        Z = images[:, -block:]
        for _ in range(2):
            Z = Z - basis @ (basis.conj().T @ Z)
        Z, R = np.linalg.qr(Z)
        keep = np.abs(np.diag(R)) > 1e-12 * max(1.0, np.abs(R).max())
        if not keep.any() or basis.shape[1] + block > N:
            break
        Z = Z[:, keep]
        basis = np.hstack([basis, Z])
        images = np.hstack([images, lu.solve(Z)])
    raise NoConvergence(f"block Lanczos did not converge in {max_iter} steps", partial=report)


def _wnorm(H):
    WH = sp.diags(H.weights) @ H.matrix
    return float(spla.norm(WH, np.inf))


# --------------------------------------------------------------------------
# k sweep


@dataclass
class SweepTable:
    reports: list
    r_constant: bool
    r_value: float
    shifts: np.ndarray
    expected: np.ndarray
    max_deviation: float

    def to_dict(self):
        return {
            "r_constant": bool(self.r_constant),
            "r_paper": None if self.r_value is None else float(self.r_value),
            "spectra": [r.to_dict() for r in self.reports],
            "shifts": [[float(x) for x in row] for row in self.shifts],
            "expected_shift": None if self.expected is None else [float(x) for x in self.expected],
            "max_shift_deviation": None if self.max_deviation is None else float(self.max_deviation),
        }

    def rows(self):
        """Flat ``(k, j, lambda, shift)`` rows."""
        out = []
        for r, sh in zip(self.reports, self.shifts):
            for j, (lam, s) in enumerate(zip(r.eigenvalues, sh)):
                out.append((float(r.k), j, float(lam), float(s)))
        return out


def k_sweep(m, A, grid, k_values, m_count, seed=0):
    """Spectra for each ``k``; for constant curvature also the uniform-shift check.

    The shift of eigenvalue ``j`` is ``lambda_j(k) - lambda_j(k_0)`` against the
    first ``k`` of the sweep rescaled to ``k = 0``; the expected value is
    ``-1/2 k r``.
    """
    r = scalar_curvature_nodes(m, grid)
    constant = bool(np.ptp(r) <= 1e-9 * max(1.0, np.max(np.abs(r))))
    reports = []
    for k in k_values:
        H = assemble_hamiltonian(m, A, grid, k, curvature=r)
        reports.append(eigen_spectrum(H, m_count, seed=seed, k=k))
    base = reports[0].eigenvalues + 0.5 * k_values[0] * (r[0] if constant else 0.0)
    shifts = np.array([rep.eigenvalues - base for rep in reports])
    if constant:
        expected = np.array([-0.5 * k * r[0] for k in k_values])
        dev = float(np.max(np.abs(shifts - expected[:, None])))
        return SweepTable(reports, True, float(r[0]), shifts, expected, dev)
    return SweepTable(reports, False, None, shifts, None, None)


def spectrum_csv(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "j", "lambda", "shift"])
    for k, j, lam, s in table.rows():
        w.writerow([repr(k), j, repr(lam), repr(s)])
    return buf.getvalue()
