"""One-particle Laplace spectra on compact metric graphs.

Eigenvalues are bracketed with an exact counting function. Away from the
edge-wise Dirichlet eigenvalues every solution of ``-f'' = E f`` is fixed by
its boundary values ``F_bv`` and ``F'_bv = D(E) F_bv`` with the Dirichlet-to-
Neumann map ``D(E)``. Splitting the form domain into ``H^1_0`` on each edge
plus these extensions gives

    #{eigenvalues < E} = N_Dirichlet(E) + n_-( V^H (-D(E) - L) V ),

with ``V`` an orthonormal basis of ``ker P``. The restricted matrix is strictly
decreasing in ``E`` between Dirichlet poles, so each root is the zero of one
sorted eigenvalue branch and is refined with Brent's method. Every root is
then checked against the secular matrix built from the entire fundamental
system ``C(x; E), S(x; E)``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .graph_core import (TOL, MetricGraph, VertexConditions, m0_matrix, require_valid,
                         standard_conditions, total_length)

KERNEL_RTOL = 1e-8
SERIES_CUTOFF = 1e-2


class SpectralError(RuntimeError):
    """Raised when the solver cannot certify its result."""


class BracketError(SpectralError):
    pass


# -- fundamental system ------------------------------------------------------

def _series_cs(x: np.ndarray, E: float) -> tuple[np.ndarray, np.ndarray]:
    u = -E * x * x
    C = np.ones_like(x)
    S = np.ones_like(x)
    tc = np.ones_like(x)
    ts = np.ones_like(x)
    for n in range(1, 9):
        tc = tc * u / ((2 * n - 1) * (2 * n))
        ts = ts * u / ((2 * n) * (2 * n + 1))
        C = C + tc
        S = S + ts
    return C, x * S


def fundamental_cs(x, E: float) -> tuple[np.ndarray, np.ndarray]:
    """``C(x; E)`` and ``S(x; E)`` solving ``-u'' = E u`` with ``(C, C')(0) = (1, 0)``,
    ``(S, S')(0) = (0, 1)``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(E) * x * x < SERIES_CUTOFF
    C = np.empty_like(x)
    S = np.empty_like(x)
    if np.any(small):
        C[small], S[small] = _series_cs(x[small], E)
    big = ~small
    if np.any(big):
        if E > 0:
            k = np.sqrt(E)
            C[big] = np.cos(k * x[big])
            S[big] = np.sin(k * x[big]) / k
        else:
            kap = np.sqrt(-E)
            C[big] = np.cosh(kap * x[big])
            S[big] = np.sinh(kap * x[big]) / kap
    return C, S


def fundamental_matrices(g: MetricGraph, E: float) -> tuple[np.ndarray, np.ndarray]:
    """``X, Y`` with ``F_bv = X c`` and ``F'_bv = Y c`` for
    ``f_e = a_e C(x; E) + b_e S(x; E)`` and ``c = (a_1..a_E, b_1..b_E)``.

    Entries grow like ``cosh(sqrt(-E) l_e)`` for ``E < 0``; the
    secular matrix uses a basis that cannot overflow.
    """
    n = g.n_edges
    C, S = fundamental_cs(g.lengths, E)
    I = np.eye(n)
    X = np.block([[I, np.zeros((n, n))], [np.diag(C), np.diag(S)]])
    Y = np.block([[np.zeros((n, n)), I], [np.diag(E * S), -np.diag(C)]])
    return X, Y


def _edge_columns(l: np.ndarray, E: float):
    """Boundary data ``(f(0), f(l), inward f'(0), inward f'(l))`` of two solutions per edge.

    ``C, S`` are used where they are well conditioned; for ``E < 0`` on long
    edges they become nearly parallel, so ``exp(-kappa x)`` and
    ``exp(-kappa (l - x))`` are used instead.
    """
    one, zero = np.ones_like(l), np.zeros_like(l)
    with np.errstate(over="ignore", invalid="ignore"):
        # overflowing long-edge entries are replaced below
        C, S = fundamental_cs(l, E)
        a = [one.copy(), C.copy(), zero.copy(), E * S]
        b = [zero.copy(), S.copy(), one.copy(), -C]
    if E < 0:
        kap = np.sqrt(-E)
        t = kap * l
        big = t > 1.0
        if np.any(big):
            d = np.exp(-t[big])
            k = np.full(d.shape, kap)
            for col, vals in ((a, (1.0, d, -k, k * d)), (b, (d, 1.0, k * d, -k))):
                for arr, v in zip(col, vals):
                    arr[big] = v
    return a, b


def secular_matrix(g: MetricGraph, c: VertexConditions, E: float) -> np.ndarray:
    """``(P + L) X(E) + Q Y(E)`` in a coefficient basis where every column of the
    stacked ``[X; Y]`` has unit norm; singular iff ``E`` is an eigenvalue, with
    kernel dimension equal to the multiplicity."""
    n = g.n_edges
    A = c.P + c.L
    B = c.Q
    idx = np.arange(n)
    M = np.empty((2 * n, 2 * n), dtype=complex)
    for j, (v0, vl, d0, dl) in enumerate(_edge_columns(g.lengths, E)):
        norm = np.sqrt(v0 ** 2 + vl ** 2 + d0 ** 2 + dl ** 2)
        M[:, j * n:(j + 1) * n] = (A[:, idx] * v0 + A[:, idx + n] * vl
                                   + B[:, idx] * d0 + B[:, idx + n] * dl) / norm
    return M


def secular_value(g: MetricGraph, c: VertexConditions, E: float) -> tuple[complex, float]:
    """Determinant and smallest singular value of the secular matrix at ``E``."""
    M = secular_matrix(g, c, E)
    sv = np.linalg.svd(M, compute_uv=False)
    return complex(np.linalg.det(M)), float(sv[-1])


def secular_kernel_dim(g: MetricGraph, c: VertexConditions, E: float,
                       rtol: float = KERNEL_RTOL, tol: float = 0.0) -> tuple[int, float]:
    """Number of near-zero singular values of the secular matrix and the smallest one.

    The threshold is ``rtol * ||[P + L, Q]||`` plus ``2 tol ||dM/dE||``, the
    largest singular value a kernel direction can reach when ``E`` is only known
    to within ``tol``. The reference norm bounds ``||M||`` from above and stays
    finite when the whole matrix vanishes at a maximally degenerate eigenvalue.
    """
    sv = np.linalg.svd(secular_matrix(g, c, E), compute_uv=False)
    thresh = rtol * np.linalg.norm(np.hstack([c.P + c.L, c.Q]), 2)
    if tol > 0:
        d = max(tol, 1e-12 * max(1.0, abs(E)))
        slope = np.linalg.norm(secular_matrix(g, c, E + d) - secular_matrix(g, c, E - d), 2) / (2 * d)
        thresh += 2.0 * tol * slope
    return int(np.sum(sv < thresh)), float(sv[-1])


# -- Dirichlet-to-Neumann pencil ---------------------------------------------

def dtn_coefficients(l: np.ndarray, E: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal ``-C/S`` and off-diagonal ``1/S`` of each edge block
    ``(1/S) [[-C, 1], [1, -C]]`` of ``D(E)``; equals ``m_e`` at ``E = 0``."""
    l = np.asarray(l, dtype=float)
    a = np.empty_like(l)
    b = np.empty_like(l)
    small = np.abs(E) * l * l < SERIES_CUTOFF
    if np.any(small):
        C, S = _series_cs(l[small], E)
        a[small] = -C / S
        b[small] = 1.0 / S
    big = ~small
    if np.any(big):
        if E > 0:
            k = np.sqrt(E)
            t = k * l[big]
            st = np.sin(t)
            a[big] = -k * np.cos(t) / st
            b[big] = k / st
        else:
            kap = np.sqrt(-E)
            t = kap * l[big]
            a[big] = -kap / np.tanh(t)
            b[big] = kap * 2.0 * np.exp(-t) / (-np.expm1(-2.0 * t))
    return a, b


def dirichlet_poles(g: MetricGraph, lo: float, hi: float) -> np.ndarray:
    """Sorted distinct edge-wise Dirichlet eigenvalues ``(n pi / l_e)^2`` in ``(lo, hi)``."""
    if hi <= 0:
        return np.empty(0)
    out = []
    for l in g.lengths:
        n0 = max(1, int(np.floor(np.sqrt(max(lo, 0.0)) * l / np.pi)))
        n1 = int(np.ceil(np.sqrt(hi) * l / np.pi)) + 1
        p = (np.arange(n0, n1 + 1) * np.pi / l) ** 2
        out.append(p[(p > lo) & (p < hi)])
    p = np.sort(np.concatenate(out)) if out else np.empty(0)
    if p.size > 1:
        keep = np.concatenate([[True], np.diff(p) > 1e-13 * np.maximum(1.0, p[1:])])
        p = p[keep]
    return p


def _edge_modes(l: np.ndarray, E: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of each edge block of ``D(E)`` on ``(1, 1)`` and ``(1, -1)``.

    The block is ``alpha u u^T + gamma w w^T`` with ``alpha = (1 - C)/S`` and
    ``gamma = -(1 + C)/S``. ``alpha`` blows up at odd Dirichlet poles and
    ``gamma`` at even ones, so at most one of the two is large near any pole.
    """
    l = np.asarray(l, dtype=float)
    if E > 0:
        k = np.sqrt(E)
        h = 0.5 * k * l
        alpha = k * np.tan(h)
        gamma = -k / np.tan(h)
    elif E < 0:
        kap = np.sqrt(-E)
        h = 0.5 * kap * l
        alpha = -kap * np.tanh(h)
        gamma = -kap / np.tanh(h)
    else:
        alpha = np.zeros_like(l)
        gamma = -2.0 / l
    return alpha, gamma


class _Pencil:
    """Counting function ``N(E) = N_D(E) + n_-(H(E))`` with ``H = -V^H D V - V^H L V``.

    Large rank-one terms of ``D`` are bordered instead of added: for
    ``H = H_s - Z diag(sigma) Z^H`` the matrix ``B = [[H_s, Z], [Z^H, diag(1/sigma)]]``
    has Schur complement ``H``, so its inertia is that of ``H`` plus that of
    ``diag(1/sigma)``. ``B`` stays bounded near the poles.
    """

    def __init__(self, g: MetricGraph, c: VertexConditions):
        self.l = g.lengths
        n = g.n_edges
        V = c.kernel_basis()
        self.k = V.shape[1]
        r = 1.0 / np.sqrt(2.0)
        # columns: u_e then w_e, projected onto ker P
        self.Z = r * np.hstack([(V[:n] + V[n:]).conj().T, (V[:n] - V[n:]).conj().T])
        self.HL = V.conj().T @ c.L @ V
        self.HL = (self.HL + self.HL.conj().T) / 2
        self.scale = max(1.0, 2.0 / float(np.min(self.l)))
        self._cache: dict[float, int] = {}

    def _blocks(self, E: float):
        alpha, gamma = _edge_modes(self.l, E)
        sig = np.concatenate([alpha, gamma])
        big = np.abs(sig) > 4.0 * max(self.scale, np.sqrt(abs(E)))
        Zs, Zb = self.Z[:, ~big], self.Z[:, big]
        Hs = -self.HL - (Zs * sig[~big]) @ Zs.conj().T
        if not big.any():
            return Hs, sig[big]
        sb = sig[big]
        B = np.block([[Hs, Zb], [Zb.conj().T, np.diag((1.0 / sb).astype(Hs.dtype))]])
        return B, sb

    def n_dirichlet(self, E: float) -> int:
        if E <= 0:
            return 0
        x = np.sqrt(E) * self.l / np.pi
        return int(np.sum(np.ceil(x) - 1))

    def count(self, E: float) -> int:
        """Number of eigenvalues strictly below ``E`` (``E`` off the Dirichlet poles)."""
        hit = self._cache.get(E)
        if hit is None:
            n = self.n_dirichlet(E)
            if self.k:
                B, sb = self._blocks(E)
                ev = np.linalg.eigvalsh((B + B.conj().T) / 2)
                n += int(np.sum(ev < 0)) - int(np.sum(sb < 0))
            hit = self._cache[E] = n
        return hit

    def det(self, E: float) -> float:
        """Sign of ``det H(E)`` times the geometric mean of its moduli.

        Continuous between poles and changes sign across each simple root.
        """
        if not self.k:
            return 1.0
        B, sb = self._blocks(E)
        sign, logabs = np.linalg.slogdet(B)
        sign = np.real(sign) * np.prod(np.sign(sb))
        logabs = logabs + np.sum(np.log(np.abs(sb)))
        if not np.isfinite(logabs):
            return 0.0
        return float(sign * np.exp(logabs / self.k))


def count_below(g: MetricGraph, c: VertexConditions, E: float) -> int:
    return _Pencil(g, c).count(E)


# -- spectrum container --------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    """Distinct eigenvalues with multiplicities inside a closed window."""

    energies: np.ndarray
    multiplicities: np.ndarray
    window: tuple[float, float]
    total_length: float | None = None
    n_edges: int | None = None
    graph_fp: str = ""
    conditions_fp: str = ""
    complete_below: bool = True
    smin: np.ndarray | None = field(default=None, compare=False)
    kernel_dims: np.ndarray | None = field(default=None, compare=False)

    @classmethod
    def from_levels(cls, levels: Sequence[float], multiplicities: Sequence[int] | None = None,
                    total_length: float | None = None, window=None) -> "Spectrum":
        levels = np.asarray(levels, dtype=float)
        mult = (np.ones(levels.size, dtype=int) if multiplicities is None
                else np.asarray(multiplicities, dtype=int))
        order = np.argsort(levels)
        levels, mult = levels[order], mult[order]
        if window is None:
            window = (float(levels[0]) if levels.size else 0.0,
                      float(levels[-1]) if levels.size else 0.0)
        return cls(levels, mult, tuple(window), total_length)

    def __len__(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def ground_energy(self) -> float:
        if not self.energies.size:
            raise SpectralError("empty spectrum")
        return float(self.energies[0])

    def expanded(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity."""
        return np.repeat(self.energies, self.multiplicities)

    def below(self, E: float) -> "Spectrum":
        keep = self.energies <= E
        return replace(self, energies=self.energies[keep], multiplicities=self.multiplicities[keep],
                       window=(self.window[0], min(E, self.window[1])),
                       smin=None if self.smin is None else self.smin[keep],
                       kernel_dims=None if self.kernel_dims is None else self.kernel_dims[keep])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# window={self.window[0]!r},{self.window[1]!r} graph={self.graph_fp} "
                  f"conditions={self.conditions_fp} total_length={self.total_length!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "energy", "multiplicity"])
        for i, (E, m) in enumerate(zip(self.energies, self.multiplicities)):
            w.writerow([i, f"{E:.17g}", int(m)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "window": list(self.window),
            "graph_fingerprint": self.graph_fp,
            "conditions_fingerprint": self.conditions_fp,
            "total_length": self.total_length,
            "eigenvalues": [{"index": i, "energy": float(E), "multiplicity": int(m)}
                            for i, (E, m) in enumerate(zip(self.energies, self.multiplicities))],
        }, indent=2)


def _merge(roots: list[tuple[float, int]], tol: float) -> list[tuple[float, int]]:
    roots.sort()
    out: list[list[float]] = []
    for E, m in roots:
        if out and E - out[-1][0] <= tol:
            E0, m0 = out[-1]
            out[-1] = [(E0 * m0 + E * m) / (m0 + m), m0 + m]
        else:
            out.append([E, m])
    return [(float(E), int(m)) for E, m in out]


def eigenvalues_in(g: MetricGraph, c: VertexConditions, window: Sequence[float],
                   tol: float = 1e-10, verify: bool = True) -> Spectrum:
    """All eigenvalues in the closed ``window`` to absolute accuracy ``tol``.

    Roots closer than ``tol`` are merged with summed multiplicity. Zero and the
    edge-wise Dirichlet eigenvalues are checked explicitly as candidate roots.
    """
    lo, hi = map(float, window)
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise SpectralError(f"degenerate window [{lo}, {hi}]")
    if tol <= 0:
        raise SpectralError("tol must be positive")
    require_valid(c, g)
    pencil = _Pencil(g, c)
    q = tol / 4
    specials = list(dirichlet_poles(g, lo - q, hi + q))
    if lo - q < 0 < hi + q:
        specials.append(0.0)
    specials = sorted(specials)
    halfw = []
    for i, p in enumerate(specials):
        # keep p +- d resolvable relative to p
        gaps = [max(q, 1e-12 * abs(p))]
        if i > 0:
            gaps.append(0.25 * (p - specials[i - 1]))
        if i + 1 < len(specials):
            gaps.append(0.25 * (specials[i + 1] - p))
        halfw.append(min(gaps))

    a0 = min(lo - q, specials[0] - halfw[0]) if specials else lo - q
    b0 = max(hi + q, specials[-1] + halfw[-1]) if specials else hi + q

    roots: list[tuple[float, int]] = []
    edges = [a0]
    for p, d in zip(specials, halfw):
        edges.extend([p - d, p + d])
    edges.append(b0)

    def solve(a, b, na, nb):
        m = nb - na
        if m < 0:
            raise BracketError(f"non-monotone count on [{a!r}, {b!r}]: {na} -> {nb}")
        if m == 0:
            return
        if b - a <= tol:
            roots.append((0.5 * (a + b), m))
            return
        if m == 1:
            fa, fb = pencil.det(a), pencil.det(b)
            if fa * fb < 0:
                roots.append((brentq(pencil.det, a, b, xtol=q, rtol=1e-15, maxiter=200), 1))
                return
        mid = 0.5 * (a + b)
        nm = pencil.count(mid)
        solve(a, mid, na, nm)
        solve(mid, b, nm, nb)

    # even entries of ``edges`` pair into pole-free segments, odd pairs bracket specials
    for i in range(0, len(edges), 2):
        a, b = edges[i], edges[i + 1]
        solve(a, b, pencil.count(a), pencil.count(b))
        if i + 2 < len(edges):
            p = specials[i // 2]
            d = halfw[i // 2]
            jump = pencil.count(p + d) - pencil.count(p - d)
            if jump < 0:
                raise BracketError(f"negative count jump {jump} across {p!r}")
            if jump:
                roots.append((p, jump))

    roots = [(E, m) for E, m in _merge(roots, tol) if lo - q <= E <= hi + q]
    energies = np.array([E for E, _ in roots])
    mult = np.array([m for _, m in roots], dtype=int)
    smin = kdims = None
    if verify and energies.size:
        pairs = [secular_kernel_dim(g, c, E, tol=tol) for E in energies]
        kdims = np.array([k for k, _ in pairs], dtype=int)
        smin = np.array([s for _, s in pairs])
    lb = spectral_floor(g, c)
    return Spectrum(energies, mult, (lo, hi), total_length(g), g.n_edges, g.fingerprint(),
                    c.fingerprint(), complete_below=lo <= lb, smin=smin, kernel_dims=kdims)


# -- bounds and counts ---------------------------------------------------------

def lower_bound_s(l_min: float, l_max_value: float) -> float:
    """Positive root of ``s tanh(s l_min / 2) = L_max`` by bisection."""
    if l_min <= 0 or l_max_value <= 0:
        raise ValueError("need l_min > 0 and L_max > 0")
    L = l_max_value
    a = L
    b = L / np.tanh(L * l_min / 2)
    f = lambda s: s * np.tanh(s * l_min / 2) - L
    if f(b) < 0:
        b *= 1 + 1e-12
    while True:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if f(m) < 0:
            a = m
        else:
            b = m
    return a if abs(f(a)) <= abs(f(b)) else b


def spectral_floor(g: MetricGraph, c: VertexConditions) -> float:
    """``-s^2`` when ``L`` has a positive eigenvalue on ``ker P``, else 0."""
    lmax = c.l_max()
    if lmax > TOL:
        return -lower_bound_s(float(g.lengths.min()), lmax) ** 2
    return 0.0


def search_floor(g: MetricGraph, c: VertexConditions, tol: float = 1e-10) -> float:
    """Lower end for complete scans, 25 % below the proven floor."""
    return 1.25 * spectral_floor(g, c) - tol


def ground_state_energy(g: MetricGraph, c: VertexConditions, tol: float = 1e-10) -> float:
    require_valid(c, g)
    lo = search_floor(g, c, tol)
    pencil = _Pencil(g, c)
    if pencil.count(lo - tol / 4) != 0:
        raise BracketError(f"eigenvalue found below the lower bound {lo}")
    hi = (np.pi / g.lengths.max()) ** 2
    s = eigenvalues_in(g, c, (lo, hi), tol, verify=False)
    if not s.energies.size:
        raise BracketError(f"no eigenvalue in [{lo}, {hi}]")
    return float(s.energies[0])


def predicted_negative_count(g: MetricGraph, c: VertexConditions) -> int:
    """Positive eigenvalues of ``L + Q M0 Q`` restricted to ``ker P``."""
    V = c.kernel_basis()
    if V.shape[1] == 0:
        return 0
    H = V.conj().T @ (c.L + m0_matrix(g)) @ V
    w = np.linalg.eigvalsh((H + H.conj().T) / 2)
    return int(np.sum(w > TOL * max(1.0, np.abs(w).max())))


def negative_eigenvalues(g: MetricGraph, c: VertexConditions, tol: float = 1e-10) -> Spectrum:
    """Eigenvalues below zero (a zero eigenvalue is excluded)."""
    s = eigenvalues_in(g, c, (search_floor(g, c, tol), 0.0), tol)
    keep = s.energies < 0
    return replace(s, energies=s.energies[keep], multiplicities=s.multiplicities[keep],
                   smin=None if s.smin is None else s.smin[keep],
                   kernel_dims=None if s.kernel_dims is None else s.kernel_dims[keep])


def rayleigh_trial(l_max_value: float, alpha: float, lam: float | None = None,
                   optimal: bool = False) -> float:
    """Rayleigh quotient of the power-law trial function of width ``lam``.

    With ``optimal=True`` the width minimising the quotient is used.
    """
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    L = l_max_value
    if optimal:
        return -(4 * alpha ** 2 - 1) / (4 * alpha ** 2) * L ** 2
    if lam is None or lam <= 0:
        raise ValueError("lam must be positive")
    return (alpha ** 2 / ((2 * alpha - 1) * lam) - L) * (2 * alpha + 1) / lam


def optimal_width(l_max_value: float, alpha: float) -> float:
    return 2 * alpha ** 2 / ((2 * alpha - 1) * l_max_value)


def largest_admissible_alpha(l_min: float, l_max_value: float) -> float | None:
    """Largest ``alpha >= 1`` whose optimal width fits, ``2 lam <= l_min``."""
    x = l_max_value * l_min
    disc = x * x - 4 * x
    if disc < 0:
        return None
    alpha = (x + np.sqrt(disc)) / 4
    return alpha if alpha >= 1 else None


def rayleigh_upper_bound(l_min: float, l_max_value: float) -> tuple[float, float, float]:
    """Best trial-function bound ``(value, alpha, lam)`` with ``2 lam <= l_min``."""
    L = l_max_value
    alpha = largest_admissible_alpha(l_min, L)
    if alpha is not None:
        return rayleigh_trial(L, alpha, optimal=True), alpha, optimal_width(L, alpha)

    def constrained(al):
        lam = min(optimal_width(L, al), l_min / 2)
        return rayleigh_trial(L, al, lam)

    res = minimize_scalar(constrained, bounds=(1.0, 10.0), method="bounded")
    best = min((float(res.fun), float(res.x)), (constrained(1.0), 1.0))
    return best[0], best[1], min(optimal_width(L, best[1]), l_min / 2)


def counting_function(s: Spectrum, K: float) -> int:
    """Multiplicity-weighted number of eigenvalues ``<= K^2``."""
    if K * K > s.window[1] + 1e-12 * max(1.0, abs(s.window[1])):
        raise SpectralError(f"K^2 = {K * K} exceeds the computed window top {s.window[1]}")
    return int(s.multiplicities[s.energies <= K * K].sum())


def weyl_count(total: float, K: float) -> float:
    return total * K / np.pi


def decoupled_spectrum(g: MetricGraph, kind: str, window: Sequence[float]) -> Spectrum:
    """Closed-form union of edge-wise Dirichlet or Neumann spectra."""
    lo, hi = map(float, window)
    levels = []
    for l in g.lengths:
        n_max = int(np.floor(np.sqrt(max(hi, 0.0)) * l / np.pi)) + 1
        n0 = 1 if kind == "dirichlet" else 0
        levels.append((np.arange(n0, n_max + 1) * np.pi / l) ** 2)
    E = np.sort(np.concatenate(levels))
    E = E[(E >= lo) & (E <= hi)]
    if E.size:
        starts = np.concatenate([[True], np.diff(E) > 1e-12 * np.maximum(1.0, E[1:])])
        groups = np.cumsum(starts) - 1
        mult = np.bincount(groups)
        E = E[starts]
    else:
        mult = np.empty(0, dtype=int)
    c = standard_conditions(g, kind)
    return Spectrum(E, mult, (lo, hi), total_length(g), g.n_edges, g.fingerprint(),
                    c.fingerprint(), complete_below=lo <= 0)
