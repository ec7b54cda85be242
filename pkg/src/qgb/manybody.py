"""Free and hardcore many-particle spectra, canonical sums and occupations.

Hardcore bosons are isospectral to free fermions under the Fermi-Bose map, so
their spectrum is built as the fermionic one and relabelled. The map itself is
not constructed; :mod:`qgb.oracle` checks the equality on dissected domains.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .spectral import Spectrum
from .thermo import ThermoError, _spectral_sum, fermi_free_energy_finite

STATISTICS = ("boson", "fermion", "hardcore_boson")
N_MAX = 64


class ManyBodyError(ValueError):
    pass


@dataclass(frozen=True)
class ManyBodySpectrum:
    N: int
    statistics: str
    energies: np.ndarray
    multiplicities: np.ndarray
    ceiling: float

    def __len__(self):
        return int(self.multiplicities.sum())

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    def expanded(self) -> np.ndarray:
        return np.repeat(self.energies, self.multiplicities)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# N={self.N} statistics={self.statistics} complete_below={self.ceiling!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "statistics", "index", "energy", "multiplicity"])
        for i, (E, m) in enumerate(zip(self.energies, self.multiplicities)):
            w.writerow([self.N, self.statistics, i, f"{E:.17g}", int(m)])
        return buf.getvalue()


def _check_n(N):
    if int(N) != N or N < 1:
        raise ManyBodyError(f"N must be a positive integer, got {N!r}")
    return int(N)


def complete_ceiling(s: Spectrum, N: int) -> float:
    """Many-body energy below which every ``N``-particle level is guaranteed present."""
    return float(s.window[1]) + (N - 1) * float(s.energies[0])


def free_spectrum(s: Spectrum, N: int, statistics: str = "fermion",
                  ceiling: float | None = None, merge_tol: float = 1e-9) -> ManyBodySpectrum:
    """All ``N``-particle sums of one-particle levels up to ``ceiling``.

    Bosons take multisets of single-particle states and fermions take sets, with
    degenerate levels contributing one state per multiplicity.
    """
    N = _check_n(N)
    if statistics not in STATISTICS:
        raise ManyBodyError(f"unknown statistics {statistics!r}")
    if not s.energies.size:
        raise ManyBodyError("empty one-particle spectrum")
    safe = complete_ceiling(s, N)
    if ceiling is None:
        ceiling = safe
    elif ceiling > safe + merge_tol * max(1.0, abs(safe)):
        raise ManyBodyError(f"window insufficient: complete only below {safe!r}, "
                            f"requested {ceiling!r}")
    e = s.expanded()
    fermi = statistics != "boson"
    if fermi and N > e.size:
        raise ManyBodyError(f"{N} fermions need {N} states, window holds {e.size}")
    slack = merge_tol * max(1.0, abs(ceiling))
    cum = np.concatenate([[0.0], np.cumsum(e)])
    sums: list[float] = []

    def walk(start, left, acc):
        if left == 0:
            sums.append(acc)
            return
        for i in range(start, e.size - (left - 1 if fermi else 0)):
            least = (cum[i + left] - cum[i]) if fermi else left * e[i]
            if acc + least > ceiling + slack:
                break
            walk(i + 1 if fermi else i, left - 1, acc + e[i])

    walk(0, N, 0.0)
    vals = np.sort(np.array(sums))
    energies, mult = [], []
    for v in vals:
        if energies and v - energies[-1] <= merge_tol * max(1.0, abs(v)):
            mult[-1] += 1
        else:
            energies.append(v)
            mult.append(1)
    label = "hardcore_boson" if statistics == "hardcore_boson" else statistics
    return ManyBodySpectrum(N, label, np.array(energies), np.array(mult, dtype=int), float(ceiling))


def hardcore_spectrum(s: Spectrum, N: int, ceiling: float | None = None) -> ManyBodySpectrum:
    """Tonks-Girardeau spectrum, i.e. the fermionic sums relabelled.

    ``s`` is the one-particle spectrum for the conditions that the Fermi-Bose map
    assigns to the fermionic side.
    """
    r = free_spectrum(s, N, "fermion", ceiling)
    return ManyBodySpectrum(r.N, "hardcore_boson", r.energies, r.multiplicities, r.ceiling)


def hardcore_free_energy_finite(s: Spectrum, length: float | None, beta: float, mu: float,
                                rtol: float = 1e-8) -> float:
    """Grand-canonical free-energy density of hardcore bosons.

    Isospectrality at every particle number makes the grand partition function
    the free-fermion product over one-particle levels.
    """
    return fermi_free_energy_finite(s, length, beta, mu, rtol)


# -- canonical ensemble --------------------------------------------------------

@dataclass(frozen=True)
class CanonicalState:
    N: int
    beta: float
    statistics: str
    log_Z: float
    levels: np.ndarray
    multiplicities: np.ndarray
    occupations: np.ndarray       # per single-particle state of each level
    tail_occupation: float = 0.0

    @property
    def Z(self) -> float:
        return float(np.exp(self.log_Z))

    @property
    def lambda_max(self) -> float:
        return float(self.occupations.max())

    def to_json(self) -> str:
        return json.dumps({
            "N": self.N, "beta": self.beta, "statistics": self.statistics,
            "log_Z": self.log_Z, "lambda_max": self.lambda_max,
            "occupations": [{"energy": float(E), "multiplicity": int(m), "occupation": float(n)}
                            for E, m, n in zip(self.levels, self.multiplicities, self.occupations)],
        }, indent=2)


def _check_canonical(statistics, beta, N):
    if statistics not in STATISTICS:
        raise ManyBodyError(f"unknown statistics {statistics!r}")
    if not (np.isfinite(beta) and beta > 0):
        raise ManyBodyError("beta must be positive")
    if N > N_MAX:
        raise ManyBodyError(f"N={N} above N_max={N_MAX}")


def _power_sums(s: Spectrum, N: int, beta: float, E0: float, rtol: float, tail_only: bool):
    """``z(k beta)`` shifted by ``e^{k beta E0}`` for ``k = 1..N`` (or only its Weyl tail)."""
    z = np.zeros(N + 1)
    for k in range(1, N + 1):
        h = lambda E, k=k: np.exp(-k * beta * (E - E0))
        try:
            r = _spectral_sum(s, h, rtol)
        except ThermoError as exc:
            raise ManyBodyError(str(exc)) from None
        z[k] = r.tail if tail_only else r.value
    return z


def _shifted_partition(s: Spectrum, N: int, beta: float, statistics: str, rtol: float):
    """``Zh[M] = e^{M beta E0} Z_M`` for ``M <= N`` from the particle-number recursion.

    Only used for bosons, where every term of the recursion is positive.
    """
    _check_canonical(statistics, beta, N)
    E0 = float(s.energies[0])
    sign = 1.0 if statistics == "boson" else -1.0
    z = _power_sums(s, N, beta, E0, rtol, tail_only=False)
    Zh = np.empty(N + 1)
    Zh[0] = 1.0
    for M in range(1, N + 1):
        terms = np.array([sign ** (k + 1) * z[k] * Zh[M - k] for k in range(1, M + 1)])
        Zh[M] = terms.sum() / M
        if not Zh[M] > 1e-12 * np.abs(terms).sum() / M:
            raise ManyBodyError(f"Z_{M} lost to cancellation or underflow ({Zh[M]!r})")
    return Zh, E0, sign


def _fermion_tables(s: Spectrum, N: int, beta: float, rtol: float):
    """Shifted fermionic ``Zh[M]`` and per-level occupations from ``prod (1 + x_j t)``.

    The alternating power-sum recursion cancels badly near filling, so the
    explicit levels are multiplied out as polynomials in ``t`` (positive
    coefficients only). The Weyl tail enters as ``exp(sum_k (-1)^{k+1} tau_k t^k / k)``,
    which stays close to 1. The occupation of state ``j`` is
    ``x_j Z_{N-1}(without j) / Z_N``, with the reduced product assembled from
    prefix and suffix tables.
    """
    _check_canonical("fermion", beta, N)
    E0 = float(s.energies[0])
    x = np.exp(-beta * (s.expanded() - E0))
    n = x.size
    tau = _power_sums(s, N, beta, E0, rtol, tail_only=True)
    T = np.zeros(N + 1)
    T[0] = 1.0
    for M in range(1, N + 1):
        T[M] = sum((-1) ** (k + 1) * tau[k] * T[M - k] for k in range(1, M + 1)) / M
    pre = np.zeros((n + 1, N + 1))
    suf = np.zeros((n + 1, N + 1))
    pre[0, 0] = suf[n, 0] = 1.0
    for j in range(n):
        pre[j + 1] = pre[j]
        pre[j + 1, 1:] += x[j] * pre[j, :-1]
        i = n - 1 - j
        suf[i] = suf[i + 1]
        suf[i, 1:] += x[i] * suf[i + 1, :-1]
    # Toeplitz matrix applying the tail series: (p @ toe)[m] = sum_b p[m - b] T[b]
    a, m = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    toe = np.where(m >= a, T[np.clip(m - a, 0, N)], 0.0)
    Zh = pre[n] @ toe
    if not Zh[N] > 0:
        raise ManyBodyError(f"fermionic Z_N vanishes: N={N} exceeds {n} states in window")
    first = np.concatenate([[0], np.cumsum(s.multiplicities)[:-1]])
    rest = suf[first + 1] @ toe
    without = np.sum(pre[first, :N] * rest[:, N - 1::-1], axis=1)
    occ = x[first] * without / Zh[N]
    return Zh, E0, occ


def canonical_partition(s: Spectrum, N: int, beta: float, statistics: str = "boson",
                        rtol: float = 1e-8) -> float:
    """Canonical ``Z_N(beta)``.

    Bosons use ``Z_N = (1/N) sum_k z(k beta) Z_{N-k}``; fermions the
    coefficient of ``t^N`` in ``prod_j (1 + e^{-beta E_j} t)``, which is the
    same quantity without the alternating signs.
    """
    N = _check_n(N)
    if statistics == "boson":
        Zh, E0, _ = _shifted_partition(s, N, beta, statistics, rtol)
    else:
        _check_canonical(statistics, beta, N)
        Zh, E0, _ = _fermion_tables(s, N, beta, rtol)
    return float(Zh[N] * np.exp(-N * beta * E0))


def canonical_state(s: Spectrum, N: int, beta: float, statistics: str = "boson",
                    rtol: float = 1e-8) -> CanonicalState:
    """Partition function and expected occupations of each one-particle state."""
    N = _check_n(N)
    if statistics == "boson":
        Zh, E0, _ = _shifted_partition(s, N, beta, statistics, rtol)
        x = np.exp(-beta * (s.energies - E0))
        occ = np.zeros_like(x)
        xk = np.ones_like(x)
        for k in range(1, N + 1):
            xk = xk * x
            occ += xk * Zh[N - k] / Zh[N]
    else:
        _check_canonical(statistics, beta, N)
        Zh, E0, occ = _fermion_tables(s, N, beta, rtol)
    total = float(np.sum(s.multiplicities * occ))
    rest = N - total
    if abs(rest) > max(1e-10, rtol) * N:
        raise ManyBodyError(f"occupations sum to {total!r}, not {N}")
    log_Z = float(np.log(Zh[N]) - N * beta * E0)
    return CanonicalState(N, float(beta), statistics, log_Z, s.energies.copy(),
                          s.multiplicities.copy(), occ, rest)


def occupation_lambda_max(s: Spectrum, N: int, beta: float, statistics: str = "boson",
                          rtol: float = 1e-8) -> tuple[float, float]:
    """Largest eigenvalue of the one-body density matrix of a free gas, and its ratio to ``N``."""
    st = canonical_state(s, N, beta, statistics, rtol)
    return st.lambda_max, st.lambda_max / st.N


# -- Bose-Fermi ground state on an interval ------------------------------------

@dataclass(frozen=True)
class ModCheck:
    energy: float
    target: float
    symmetry_residual: float
    diagonal_max: float
    tol: float = 1e-3

    @property
    def ok(self) -> bool:
        return (abs(self.energy - self.target) < self.tol and self.symmetry_residual < 1e-12
                and self.diagonal_max < 1e-12)

    def __bool__(self):
        return self.ok


def _p1_rayleigh(u: np.ndarray, h: float) -> float:
    """Rayleigh quotient of the piecewise-linear interpolant of nodal values ``u[i, j]``
    on the triangle ``x_i <= x_j`` (right triangles cut parallel to the diagonal)."""
    n = u.shape[0] - 1
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    grad = 0.0
    mass = 0.0
    area = 0.5 * h * h

    def tri(a, b, c, d1, d2):
        nonlocal grad, mass
        grad += area * np.sum(d1 ** 2 + d2 ** 2)
        mass += area / 6.0 * np.sum(a * a + b * b + c * c + a * b + a * c + b * c)

    # upper triangle (i, j) - (i, j+1) - (i+1, j+1) lies in x1 <= x2 whenever i <= j
    m = i <= j
    a, b, c = u[i, j][m], u[i, j + 1][m], u[i + 1, j + 1][m]
    tri(a, b, c, (c - b) / h, (b - a) / h)
    # lower triangle (i, j) - (i+1, j) - (i+1, j+1) needs i + 1 <= j
    m = i + 1 <= j
    a, b, c = u[i, j][m], u[i + 1, j][m], u[i + 1, j + 1][m]
    tri(a, b, c, (b - a) / h, (c - b) / h)
    return grad / mass


def ground_state_mod_check(length: float = np.pi, n: int = 400) -> ModCheck:
    """Check that ``|psi_F|`` of two Dirichlet fermions is a valid hardcore ground state.

    The Slater determinant of the two lowest modes is sampled on an ``(n+1)^2``
    grid. Its modulus must vanish on ``x1 = x2``, be exchange symmetric, and have
    Rayleigh quotient on the dissected triangle equal to ``E_1 + E_2``.
    """
    if n < 16:
        raise ManyBodyError("grid too coarse")
    x = np.linspace(0.0, length, n + 1)
    h = length / n
    k = np.pi / length
    phi1 = np.sqrt(2 / length) * np.sin(k * x)
    phi2 = np.sqrt(2 / length) * np.sin(2 * k * x)
    psi = np.outer(phi1, phi2) - np.outer(phi2, phi1)
    psi_b = np.abs(psi)
    sym = float(np.max(np.abs(psi_b - psi_b.T)))
    diag = float(np.max(np.abs(np.diag(psi))))
    energy = _p1_rayleigh(psi_b, h)
    if not np.isfinite(energy):
        raise ManyBodyError("quadrature failed")
    return ModCheck(energy, 5.0 * k * k, sym, diag)
