"""Brute-force finite-difference oracles for one- and two-particle problems.

One particle
    Piecewise-linear elements with lumped mass on every edge. The boundary
    values are written as ``F_bv = V y`` with ``V`` an orthonormal basis of
    ``ker P``, which removes the constraint ``P F_bv = 0``. The form is
    ``sum_e int |f'|^2 - <V y, L V y>``. On a uniform interval this is the
    three-point stencil. The pencil ``(K, M)`` is brought to the symmetric
    matrix ``M^{-1/2} K M^{-1/2}`` since ``M`` is block diagonal.

Two particles, hardcore
    Unknowns are ordered node pairs ``a < b`` of the one-particle grid. Each
    pair of edges then gives a rectangle of the dissected configuration space,
    and each single edge gives a triangle. Values on the coincidence set are
    eliminated, i.e. Dirichlet there. The operator is ``A (x) 1 + 1 (x) A``
    restricted to the pair basis ``(e_a e_b - e_b e_a)/sqrt 2``; on an interval
    that is the five-point Laplacian on the triangle. At a vertex the gluing
    carries the exchange sign of the Fermi-Bose map.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .graph_core import MetricGraph, VertexConditions, interval, require_valid, star, vertex_conditions, standard_conditions

DENSE_LIMIT = 2500
PAIR_LIMIT = 2_000_000


class OracleError(RuntimeError):
    pass


@dataclass
class DiscreteOperator:
    """Symmetric matrix whose eigenvalues approximate the graph Laplacian's."""

    matrix: sp.csr_matrix
    h: float
    notes: str
    cells: np.ndarray = field(repr=False)
    n_interior: int = 0

    @property
    def n_dof(self) -> int:
        return self.matrix.shape[0]

    def symmetry_defect(self) -> float:
        A = self.matrix
        d = abs(A - A.conj().T)
        return float(d.max()) / max(float(abs(A).max()), 1.0) if d.nnz else 0.0

    def eigenvalues(self, count: int) -> np.ndarray:
        return _lowest(self.matrix, count)


def _lowest(A, count: int, vectors: bool = False):
    n = A.shape[0]
    if count < 1 or count > n:
        raise OracleError(f"cannot extract {count} eigenvalues from {n} unknowns")
    if n <= DENSE_LIMIT:
        w, v = sla.eigh(A.toarray(), subset_by_index=[0, count - 1])
    else:
        # Gershgorin lower bound keeps the shift below the whole spectrum
        diag = A.diagonal().real
        off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
        sigma = float(np.min(diag - off)) - 1.0
        w, v = eigsh(A.tocsc(), k=count, sigma=sigma, which="LM", tol=1e-13)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    return (w, v) if vectors else w


def discretize_one_particle(g: MetricGraph, c: VertexConditions, h: float) -> DiscreteOperator:
    """Quadratic-form discretization with grid spacing at most ``h`` on every edge."""
    require_valid(c, g)
    lmin = float(g.lengths.min())
    if not 0 < h <= lmin / 16 * (1 + 1e-12):
        raise OracleError(f"h={h!r} must satisfy 0 < h <= l_min/16 = {lmin / 16!r}")
    E = g.n_edges
    cells = np.ceil(g.lengths / h - 1e-9).astype(int)
    he = g.lengths / cells
    V = c.kernel_basis()
    k = V.shape[1]
    n_int = int(np.sum(cells - 1))
    n = n_int + k
    cplx = bool(np.any(np.imag(V) != 0) or np.any(np.imag(c.L) != 0))
    dtype = complex if cplx else float
    V = V if cplx else V.real

    # stiffness triplets; edge e has interior unknowns off .. off + m - 2, its
    # end nodes are the rows e and e + E of V applied to the trailing y block
    rows, cols, vals = [], [], []
    mass_int = np.empty(n_int)
    Kyy = np.zeros((k, k), dtype=dtype)
    Myy = np.zeros((k, k), dtype=dtype)
    yidx = n_int + np.arange(k)
    off = 0
    for e in range(E):
        m, w = int(cells[e]), float(he[e])
        idx = off + np.arange(m - 1)
        rows += [idx, idx[:-1], idx[1:]]
        cols += [idx, idx[1:], idx[:-1]]
        vals += [np.full(m - 1, 2.0 / w), np.full(m - 2, -1.0 / w), np.full(m - 2, -1.0 / w)]
        mass_int[idx] = w
        v0, v1 = V[e], V[e + E]
        Kyy += (np.outer(v0.conj(), v0) + np.outer(v1.conj(), v1)) / w
        Myy += 0.5 * w * (np.outer(v0.conj(), v0) + np.outer(v1.conj(), v1))
        if m == 1:
            Kyy -= (np.outer(v0.conj(), v1) + np.outer(v1.conj(), v0)) / w
        else:
            for node, v in ((idx[0], v0), (idx[-1], v1)):
                rows += [np.full(k, node), yidx]
                cols += [yidx, np.full(k, node)]
                vals += [-v / w, -v.conj() / w]
        off += m - 1
    if k:
        Kyy -= V.conj().T @ c.L @ V if cplx else (V.T @ c.L.real @ V)
        yy = np.repeat(yidx, k), np.tile(yidx, k)
        rows.append(yy[0])
        cols.append(yy[1])
        vals.append(Kyy.ravel())
    K = sp.coo_matrix((np.concatenate(vals).astype(dtype), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()

    # M is diag on interior nodes and a dense Hermitian block on y
    Si = sp.diags(1.0 / np.sqrt(mass_int)) if n_int else sp.csr_matrix((0, 0))
    if k:
        wy, Uy = np.linalg.eigh((Myy + Myy.conj().T) / 2)
        if wy.min() <= 0:
            raise OracleError("constraint elimination left a rank-deficient boundary block")
        Ry = (Uy / np.sqrt(wy)) @ Uy.conj().T
        S = sp.block_diag([Si, sp.csr_matrix(Ry)], format="csr") if n_int else sp.csr_matrix(Ry)
    else:
        S = Si.tocsr()
    A = (S.conj().T @ K @ S).tocsr()
    A = ((A + A.conj().T) * 0.5).tocsr()
    notes = (f"P1 lumped mass, {int(cells.sum())} cells, {n_int} interior nodes, "
             f"{k} boundary unknowns from ker P")
    return DiscreteOperator(A, float(he.max()), notes, cells, n_int)


def one_particle_eigenvalues(g, c, h, count):
    return discretize_one_particle(g, c, h).eigenvalues(count)


# -- two particles -------------------------------------------------------------

@dataclass
class PairResult:
    eigenvalues: np.ndarray
    h: float
    n_pairs: int
    antisymmetry_residual: float
    exchange_residual: float


def _pair_operator(A: sp.csr_matrix):
    n = A.shape[0]
    npairs = n * (n - 1) // 2
    if npairs > PAIR_LIMIT:
        raise OracleError(f"{npairs} pair unknowns exceed the memory guard {PAIR_LIMIT}")
    a, b = np.triu_indices(n, 1)
    r = 1.0 / np.sqrt(2.0)
    col = np.arange(npairs)
    S = sp.csr_matrix((np.r_[np.full(npairs, r), np.full(npairs, -r)],
                       (np.r_[a * n + b, b * n + a], np.r_[col, col])), shape=(n * n, npairs))
    I = sp.identity(n, format="csr")
    full = sp.kron(A, I, format="csr") + sp.kron(I, A, format="csr")
    A2 = (S.T @ full @ S).tocsr()
    return A2, S


def _pair_spectrum(op: DiscreteOperator, count: int) -> PairResult:
    A1 = op.matrix
    if op.symmetry_defect() > 1e-12:
        raise OracleError("one-particle operator not symmetric")
    A2, S = _pair_operator(A1)
    d = abs(A2 - A2.conj().T)
    if d.nnz and d.max() > 1e-12 * max(abs(A2).max(), 1.0):
        raise OracleError("pair gluing produced a non-symmetric operator")
    w, v = _lowest(A2, count, vectors=True)
    n = A1.shape[0]
    psi = (S @ v[:, 0]).reshape(n, n)
    anti = float(np.max(np.abs(psi + psi.T)) / np.max(np.abs(psi)))
    # hardcore boson state: the pair amplitude read off in either order
    a, b = np.triu_indices(n, 1)
    boson = np.zeros((n, n), dtype=psi.dtype)
    boson[a, b] = psi[a, b]
    boson[b, a] = psi[a, b]
    exch = float(np.max(np.abs(boson - boson.T)))
    return PairResult(w, op.h, A2.shape[0], anti, exch)


def two_particle_hardcore_interval(l: float, h: float, count: int,
                                   ends: str = "dirichlet") -> PairResult:
    """Lowest ``count`` levels of two hardcore particles on ``[0, l]``.

    The domain is the triangle ``0 < x1 < x2 < l``, Dirichlet on the diagonal
    and Dirichlet or Neumann on the outer sides.
    """
    if not 0 < h <= l / 64 * (1 + 1e-12):
        raise OracleError(f"h={h!r} must satisfy h <= l/64")
    g = interval(l)
    c = standard_conditions(g, ends)
    return _pair_spectrum(discretize_one_particle(g, c, h), count)


def _star_conditions(g: MetricGraph) -> VertexConditions:
    leaves = [v for v in g.vertices if v != "c"]
    return vertex_conditions(g, dirichlet=leaves)


def two_particle_hardcore_star(legs, h: float, count: int) -> PairResult:
    """Two hardcore particles on a star with Kirchhoff centre and Dirichlet ends."""
    g = star(list(legs))
    if len(g.edges) != 3:
        raise OracleError("a 3-star is expected")
    return _pair_spectrum(discretize_one_particle(g, _star_conditions(g), h), count)


def frozen_slice_spectrum(legs, h: float, count: int) -> np.ndarray:
    """One-particle levels recovered from the two-particle star operator.

    The second particle is frozen in the discrete one-particle ground mode
    ``phi_0``; ``<phi_0| A (x) 1 + 1 (x) A |phi_0>`` is ``A + lambda_0``.
    """
    g = star(list(legs))
    op = discretize_one_particle(g, _star_conditions(g), h)
    A = op.matrix
    n = A.shape[0]
    lam, vec = _lowest(A, 1, vectors=True)
    phi = vec[:, 0]
    full = sp.kron(A, sp.identity(n), format="csr") + sp.kron(sp.identity(n), A, format="csr")
    P = sp.kron(sp.identity(n), sp.csr_matrix(phi.reshape(-1, 1)), format="csr")
    block = (P.conj().T @ full @ P).tocsr()
    return _lowest(block, count) - lam[0]


# -- verification battery --------------------------------------------------------

@dataclass
class Check:
    name: str
    error: float
    tol: float
    ratio: float | None = None

    @property
    def ok(self) -> bool:
        good = np.isfinite(self.error) and self.error <= self.tol
        if self.ratio is not None:
            good = good and 3.2 <= self.ratio <= 4.8
        return bool(good)


def convergence_ratios(exact, coarse, fine) -> np.ndarray:
    exact = np.asarray(exact, dtype=float)
    return np.abs(np.asarray(coarse) - exact) / np.abs(np.asarray(fine) - exact)


def verification_battery() -> list[Check]:
    """Oracle-versus-solver checks used by the ``verify`` command."""
    from .manybody import hardcore_spectrum
    from .spectral import eigenvalues_in

    out = []
    g = interval(np.pi)
    c = standard_conditions(g, "dirichlet")
    exact = np.array([1.0, 4.0, 9.0])
    e1 = one_particle_eigenvalues(g, c, np.pi / 400, 3)
    e2 = one_particle_eigenvalues(g, c, np.pi / 800, 3)
    out.append(Check("dirichlet interval lowest 3", float(np.max(np.abs(e1 - exact))), 1e-3,
                     float(np.min(convergence_ratios(exact, e1, e2)))))

    g = interval(20.0)
    c = standard_conditions(g, "robin", 1.0)
    ref = eigenvalues_in(g, c, (-1.5, 0.0), verify=False).energies[0]
    e1 = one_particle_eigenvalues(g, c, 20 / 4000, 1)
    out.append(Check("robin interval ground state", float(abs(e1[0] - ref)), 1e-3))

    g = star([1.0, 1.3, 1.7])
    c = vertex_conditions(g)
    ref = eigenvalues_in(g, c, (-0.5, 60.0), verify=False).expanded()[:10]
    e1 = one_particle_eigenvalues(g, c, 1 / 128, 10)
    e2 = one_particle_eigenvalues(g, c, 1 / 256, 10)
    r = convergence_ratios(ref[1:], e1[1:], e2[1:])
    out.append(Check("kirchhoff 3-star first 10", float(np.max(np.abs(e1 - ref))), 5e-2,
                     float(np.median(r))))

    exact = np.array([5.0, 10.0, 13.0, 17.0, 20.0])
    p1 = two_particle_hardcore_interval(np.pi, np.pi / 64, 5).eigenvalues
    p2 = two_particle_hardcore_interval(np.pi, np.pi / 128, 5).eigenvalues
    out.append(Check("hardcore pair on interval", float(np.max(np.abs(p1 / exact - 1))), 1e-2,
                     float(np.min(convergence_ratios(exact, p1, p2)))))

    g = star([1.0, 1.0, 1.0])
    one = eigenvalues_in(g, _star_conditions(g), (0.0, 120.0), verify=False)
    fermi = hardcore_spectrum(one, 2).expanded()
    k = 8
    q1 = two_particle_hardcore_star([1, 1, 1], 1 / 32, k).eigenvalues
    q2 = two_particle_hardcore_star([1, 1, 1], 1 / 64, k).eigenvalues
    out.append(Check("hardcore pair on 3-star", float(np.max(np.abs(q1 / fermi[:k] - 1))), 1e-2,
                     float(np.min(convergence_ratios(fermi[:k], q1, q2)))))
    return out
