"""Grand-canonical thermodynamics of free particles on a metric graph.

Units are ``hbar^2 / 2m = 1`` and ``k_B = 1``, so a one-particle level is
``E = k^2`` and the Weyl density of states in ``k`` is ``total_length / pi``.

Finite-volume sums run over a computed :class:`~qgb.spectral.Spectrum` and are
completed above the window top by the Weyl integral. The tail estimate comes
with a certificate: any self-adjoint vertex condition moves the counting
function by at most ``2E`` from the Weyl term, which bounds the error of the
continuum replacement by ``4E h(E_top)`` for a monotone summand ``h``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .spectral import Spectrum

Z_MAX = 0.9999


class ThermoError(ValueError):
    pass


class TailError(ThermoError):
    """The spectral window is too short for the requested tail accuracy."""


# -- Bose-Einstein function ----------------------------------------------------

def polylog_half(z: float) -> float:
    """Bose-Einstein function ``g_{1/2}(z) = sum_k z^k / sqrt(k)``.

    Summed in blocks until the geometric tail bound
    ``z^(K+1) / (sqrt(K+1) (1 - z))`` drops below ``1e-15`` of the partial sum.

    Parameters
    ----------
    z : float
        Fugacity in ``[0, 0.9999]``.
    """
    z = float(z)
    if not (0.0 <= z <= Z_MAX):
        raise ThermoError(f"polylog_half needs 0 <= z <= {Z_MAX}, got {z!r}")
    if z == 0.0:
        return 0.0
    total = 0.0
    k0 = 1
    block = 256
    logz = np.log(z)
    while True:
        k = np.arange(k0, k0 + block, dtype=float)
        total += float(np.sum(np.exp(k * logz) / np.sqrt(k)))
        K = k0 + block - 1
        tail = np.exp((K + 1) * logz) / (np.sqrt(K + 1.0) * (1.0 - z))
        if tail < 1e-15 * total:
            return total
        k0 += block
        block *= 2


def bose_function_integral(nu: float, z: float) -> float:
    """Integral representation ``(1/Gamma(nu)) int_0^inf x^(nu-1) / (e^x / z - 1) dx``.

    With ``x = t^2`` the ``nu = 1/2`` integrand loses its endpoint singularity.
    """
    from scipy.special import gamma
    if z == 0.0:
        return 0.0
    if not 0.0 < z < 1.0:
        raise ThermoError("bose_function_integral needs 0 <= z < 1")
    lz = np.log(z)

    def f(t):
        x = t * t
        return 2.0 * t ** (2.0 * nu - 1.0) / np.expm1(x - lz)

    tmax = np.sqrt(-lz + 40.0)
    val, _ = quad(f, 0.0, tmax, epsabs=0.0, epsrel=1e-13, limit=200)
    return val / gamma(nu)


# -- thermodynamic-limit densities --------------------------------------------

def rho_plus(beta: float, mu: float, lmax: float | None = None) -> float:
    """Density of the continuum part, ``g_{1/2}(e^{beta mu}) / sqrt(4 pi beta)``.

    ``mu`` must lie at or below ``-lmax**2`` when a positive ``lmax`` is given,
    and below zero otherwise.
    """
    _check_beta(beta)
    if lmax is not None and lmax > 0 and mu > -lmax * lmax:
        raise ThermoError(f"mu <= -L_max^2 violated: mu={mu!r}, -L_max^2={-lmax * lmax!r}")
    if mu >= 0:
        raise ThermoError(f"mu < 0 violated: mu={mu!r}")
    return polylog_half(np.exp(beta * mu)) / np.sqrt(4.0 * np.pi * beta)


def critical_beta(rho0: float, lmax: float) -> float:
    """Inverse critical temperature solving ``rho0 = rho_plus(beta_c, -lmax^2)``."""
    if not rho0 > 0:
        raise ThermoError("rho0 must be positive")
    if not lmax > 0:
        raise ThermoError("no finite beta_c: gapless spectrum (L_max <= 0)")
    gap = lmax * lmax

    def F(b):
        return rho_plus(b, -gap) - rho0

    b_min = -np.log(Z_MAX) / gap
    hi = max(1.0 / gap, b_min)
    while F(hi) > 0:
        hi *= 2.0
    lo = hi
    while F(lo) < 0:
        lo /= 2.0
        if lo < b_min:
            lo = b_min
            if F(lo) < 0:
                raise ThermoError(f"rho0={rho0!r} needs fugacity above {Z_MAX}")
            break
    if lo == hi:
        return hi
    return brentq(F, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def condensate_fraction(beta: float, beta_c: float, lmax: float) -> float:
    """Relative occupation ``rho_- / rho_0`` of the gap states for ``beta >= beta_c``."""
    _check_beta(beta)
    if beta < beta_c:
        raise ThermoError(f"beta < beta_c: no condensate ({beta!r} < {beta_c!r})")
    gap = lmax * lmax
    r = np.sqrt(beta_c / beta) * polylog_half(np.exp(-beta * gap)) / polylog_half(np.exp(-beta_c * gap))
    return float(min(1.0, max(0.0, 1.0 - r)))


# -- finite-volume spectral sums ----------------------------------------------

@dataclass(frozen=True)
class SpectralSum:
    value: float
    tail: float
    tail_bound: float


def _spectral_sum(s: Spectrum, h: Callable[[np.ndarray], np.ndarray], rtol: float,
                  tail: bool = True) -> SpectralSum:
    """Multiplicity-weighted ``sum h(E_n)`` with a Weyl tail above the window.

    ``h`` must be monotone in magnitude above the window top.
    """
    if not s.complete_below:
        raise ThermoError("spectrum window does not start below the spectral floor")
    with np.errstate(over="ignore"):
        body = float(np.sum(s.multiplicities * h(s.energies)))
    if not tail or s.total_length is None or s.n_edges is None:
        return SpectralSum(body, 0.0, 0.0)
    top = float(s.window[1])
    k_top = np.sqrt(max(top, 0.0))
    def g(k):
        with np.errstate(over="ignore"):
            return h(np.asarray(k * k))

    with warnings.catch_warnings():
        # the quadrature error estimate enters the bound below
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(g, k_top, np.inf, epsabs=1e-300, epsrel=1e-12, limit=200)
    est = s.total_length / np.pi * val
    bound = 4.0 * s.n_edges * abs(float(h(np.asarray(max(top, 0.0))))) + abs(s.total_length / np.pi * err)
    total = body + est
    if bound > rtol * max(abs(total), np.finfo(float).tiny):
        raise TailError(f"window top {top!r} too low: tail bound {bound:.3g} exceeds "
                          f"{rtol:g} of the sum {total:.6g}")
    return SpectralSum(total, est, bound)


def _check_beta(beta):
    if not (np.isfinite(beta) and beta > 0):
        raise ThermoError(f"beta must be positive and finite, got {beta!r}")


def _check_mu_below(s: Spectrum, mu: float):
    if s.energies.size and mu >= s.energies[0]:
        raise ThermoError(f"mu >= E0: occupation diverges (mu={mu!r}, E0={s.energies[0]!r})")


def _length(s: Spectrum, length):
    L = s.total_length if length is None else length
    if L is None or not L > 0:
        raise ThermoError("total length required")
    return float(L)


def bose_number_finite(s: Spectrum, beta: float, mu: float, rtol: float = 1e-8,
                       tail: bool = True) -> float:
    """Expected boson number ``sum_n 1 / (e^{beta (E_n - mu)} - 1)``."""
    _check_beta(beta)
    _check_mu_below(s, mu)
    return _spectral_sum(s, lambda E: 1.0 / np.expm1(beta * (E - mu)), rtol, tail).value


def fermi_number_finite(s: Spectrum, beta: float, mu: float, rtol: float = 1e-8,
                        tail: bool = True) -> float:
    _check_beta(beta)
    return _spectral_sum(s, lambda E: 0.5 * (1.0 - np.tanh(0.5 * beta * (E - mu))), rtol, tail).value


def bose_free_energy_finite(s: Spectrum, length: float | None, beta: float, mu: float,
                            rtol: float = 1e-8, tail: bool = True) -> float:
    """``f_V = (1 / beta L) sum_n log(1 - e^{-beta (E_n - mu)})``."""
    _check_beta(beta)
    _check_mu_below(s, mu)
    L = _length(s, length)
    logs = _spectral_sum(s, lambda E: np.log(-np.expm1(-beta * (E - mu))), rtol, tail)
    return logs.value / (beta * L)


def fermi_free_energy_finite(s: Spectrum, length: float | None, beta: float, mu: float,
                             rtol: float = 1e-8, tail: bool = True) -> float:
    """``f_V = -(1 / beta L) sum_n log(1 + e^{-beta (E_n - mu)})``; any real ``mu``."""
    _check_beta(beta)
    L = _length(s, length)
    logs = _spectral_sum(s, lambda E: np.logaddexp(0.0, -beta * (E - mu)), rtol, tail)
    return -logs.value / (beta * L)


def dirichlet_fermi_free_energy(beta: float, mu: float) -> float:
    """Limiting free-fermion density ``-(1/(pi beta)) int_0^inf log(1 + e^{-beta (k^2 - mu)}) dk``."""
    _check_beta(beta)
    kmax = np.sqrt(max(mu, 0.0) + 40.0 / beta)
    f = lambda k: np.logaddexp(0.0, -beta * (k * k - mu))
    pts = [np.sqrt(mu)] if 0 < mu < kmax * kmax else None
    val, _ = quad(f, 0.0, kmax, points=pts, epsabs=1e-15, epsrel=1e-13, limit=400)
    return -val / (np.pi * beta)


# -- density inversion ---------------------------------------------------------

@dataclass(frozen=True)
class Inversion:
    mu: float
    condensed: bool
    density: float


def invert_density(beta: float, rho0: float, s: Spectrum | None = None, *,
                   length: float | None = None, lmax: float | None = None,
                   rtol: float = 1e-8) -> Inversion:
    """Chemical potential with density ``rho0``.

    With a spectrum the finite-volume density ``N / L`` is inverted on
    ``mu < E0``. Without one the limit density ``rho_plus`` is used, and when
    ``rho0`` exceeds ``rho_plus(beta, -lmax^2)`` the result is pinned at
    ``mu = -lmax^2`` and flagged as condensed.
    """
    _check_beta(beta)
    if not rho0 > 0:
        raise ThermoError("rho0 must be positive")
    gap = 0.0
    if s is not None:
        L = _length(s, length)
        E0 = float(s.energies[0])
        dens = lambda u: bose_number_finite(s, beta, E0 - np.exp(u), rtol) / L
        top = E0
    else:
        gap = lmax * lmax if lmax is not None and lmax > 0 else 0.0
        if gap > 0:
            edge = rho_plus(beta, -gap)
            if rho0 > edge:
                return Inversion(-gap, True, edge)
        top = -gap
        u_min = np.log(-np.log(Z_MAX) / beta)
        dens = lambda u: rho_plus(beta, top - np.exp(u))

    def F(u):
        return dens(u) - rho0

    hi = np.log(1.0 / beta) + 1.0
    while F(hi) > 0:
        hi += 2.0
        if hi > 700:
            raise ThermoError("density bracket not found (mu -> -inf)")
    lo = hi - 2.0
    gapless = s is None and gap == 0
    while True:
        if gapless and lo < u_min:
            lo = u_min
            if F(lo) < 0:
                raise ThermoError(f"rho0 needs fugacity above {Z_MAX} in the gapless limit")
            break
        if F(lo) >= 0:
            break
        lo -= 2.0
        if lo < -700:
            raise ThermoError(f"density bracket not found: [{lo!r}, {hi!r}]")
    u = brentq(F, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    mu = top - np.exp(u)
    return Inversion(float(mu), False, float(dens(u)))


# -- results and smoothness probe ----------------------------------------------

@dataclass(frozen=True)
class ThermoResult:
    kind: str
    beta: float
    mu: float
    rho: float
    f: float
    n_expected: float | None = None
    rho_minus: float | None = None
    rho_plus: float | None = None


def finite_volume(s: Spectrum, beta: float, mu: float, statistics: str = "boson",
                  rtol: float = 1e-8) -> ThermoResult:
    L = _length(s, None)
    if statistics == "boson":
        n = bose_number_finite(s, beta, mu, rtol)
        f = bose_free_energy_finite(s, L, beta, mu, rtol)
    elif statistics in ("fermion", "hardcore_boson"):
        n = fermi_number_finite(s, beta, mu, rtol)
        f = fermi_free_energy_finite(s, L, beta, mu, rtol)
    else:
        raise ThermoError(f"unknown statistics {statistics!r}")
    return ThermoResult("finite_volume", beta, mu, n / L, f, n_expected=n)


def limit_state(beta: float, rho0: float, lmax: float) -> ThermoResult:
    """Thermodynamic-limit state at density ``rho0`` with the condensate split."""
    inv = invert_density(beta, rho0, lmax=lmax)
    rp = rho_plus(beta, inv.mu, lmax)
    return ThermoResult("thermodynamic_limit", beta, inv.mu, rho0, float("nan"),
                        rho_minus=rho0 - rp if inv.condensed else 0.0,
                        rho_plus=rp if inv.condensed else rho0)


def second_derivative_jumps(f: Callable[[float], float], grid, h: float = 1e-3):
    """Central second differences of ``f`` on ``grid`` and their local defects.

    The defect ``|f''_{i-1} - 2 f''_i + f''_{i+1}|`` is of order ``grid step^2``
    for a smooth ``f`` and of order of the jump size at a kink of ``f'``.
    """
    grid = np.asarray(grid, dtype=float)
    f2 = np.array([(f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h) for x in grid])
    jumps = np.abs(f2[:-2] - 2.0 * f2[1:-1] + f2[2:])
    return f2, jumps
