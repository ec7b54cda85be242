"""Thermodynamic-limit sweeps: every edge length is scaled by ``eta`` at fixed topology.

Per-``eta`` points are independent and run on a thread pool of ``workers``
threads (default from ``QGB_THREADS``). Results are collected in grid order,
so repeated runs give identical tables.
"""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import thermo
from .graph_core import MetricGraph, VertexConditions, require_valid, scale
from .spectral import (SpectralError, decoupled_spectrum, eigenvalues_in, ground_state_energy,
                       lower_bound_s, negative_eigenvalues, predicted_negative_count,
                       rayleigh_upper_bound, search_floor)


class ScanError(ValueError):
    pass


def default_eta_grid() -> np.ndarray:
    return 2.0 ** np.arange(11)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("QGB_THREADS", "1")))
    except ValueError:
        return 1


def check_grid(etas: Sequence[float]) -> np.ndarray:
    etas = np.asarray(etas, dtype=float)
    if etas.ndim != 1 or etas.size == 0:
        raise ScanError("empty eta grid")
    if np.any(~np.isfinite(etas)) or np.any(etas <= 0):
        raise ScanError("eta values must be positive")
    if np.any(np.diff(etas) <= 0):
        raise ScanError("eta grid must be strictly increasing")
    return etas


def richardson(etas, values, order: int = 2) -> float:
    """Polynomial extrapolation in ``1/eta`` to ``eta = inf`` through the last ``order + 1`` points."""
    x = 1.0 / np.asarray(etas, dtype=float)
    y = np.asarray(values, dtype=float)
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    m = min(order + 1, x.size)
    if m == 0:
        return float("nan")
    coef = np.polyfit(x[-m:], y[-m:], m - 1)
    return float(coef[-1])


@dataclass
class TLScan:
    kind: str
    etas: np.ndarray
    columns: list[str]
    records: list[dict]
    targets: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r.get(name, np.nan) if r.get("ok", True) else np.nan for r in self.records],
                        dtype=float)

    @property
    def failed(self) -> list[float]:
        return [r["eta"] for r in self.records if not r.get("ok", True)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        head = " ".join(f"{k}={v}" for k, v in self.meta.items())
        buf.write(f"# scan={self.kind} {head}\n")
        if self.targets:
            buf.write("# " + " ".join(f"{k}={_fmt(v)}" for k, v in self.targets.items()) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.records:
            w.writerow([_fmt(r.get(c, "")) for c in self.columns])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _run(fn: Callable[[float], dict], etas, workers) -> list[dict]:
    workers = default_workers() if workers is None else max(1, int(workers))

    def safe(eta):
        try:
            rec = fn(float(eta))
            rec.setdefault("ok", True)
        except (SpectralError, thermo.ThermoError, ValueError, ArithmeticError) as exc:
            rec = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
        rec["eta"] = float(eta)
        return rec

    if workers == 1:
        return [safe(e) for e in etas]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(safe, etas))


def _meta(g, c, **kw):
    return {"graph": g.fingerprint(), "conditions": c.fingerprint(), **kw}


# -- ground state ------------------------------------------------------------------

def scan_ground_state(g: MetricGraph, c: VertexConditions, etas=None, tol: float = 1e-10,
                      workers: int | None = None) -> TLScan:
    """``E0(eta)`` with its lower bound ``-s^2`` and the trial-function upper bound."""
    require_valid(c, g)
    etas = check_grid(default_eta_grid() if etas is None else etas)
    lmax = c.l_max()
    gapped = lmax > 1e-10

    def point(eta):
        gs = scale(g, eta)
        E0 = ground_state_energy(gs, c, tol)
        rec = {"E0": E0}
        if gapped:
            lmin = float(gs.lengths.min())
            lo = -lower_bound_s(lmin, lmax) ** 2
            up, alpha, lam = rayleigh_upper_bound(lmin, lmax)
            rec.update(lower=lo, upper=up, alpha=alpha, sandwich=bool(lo - tol <= E0 <= up + tol),
                       error=abs(E0 + lmax * lmax))
        else:
            rec.update(lower=0.0, upper=np.nan, alpha=np.nan, sandwich=bool(E0 >= -tol), error=abs(E0))
        return rec

    recs = _run(point, etas, workers)
    scan = TLScan("ground-state", etas, ["eta", "E0", "lower", "upper", "alpha", "sandwich", "error", "ok"],
                  recs, meta=_meta(g, c, tol=tol))
    err = scan.column("error")
    good = np.isfinite(err) & (err > 0)
    rate = np.nan
    if good.sum() >= 2:
        i, j = np.flatnonzero(good)[-2:]
        rate = float(np.log(err[j] / err[i]) / np.log(etas[j] / etas[i]))
    scan.targets = {"limit": -lmax * lmax if gapped else 0.0,
                    "final_error": float(err[-1]) if err.size else np.nan,
                    "empirical_rate": rate,
                    "regime": "gap" if gapped else "no-gap"}
    return scan


# -- negative counts -----------------------------------------------------------------

def scan_negative_count(g: MetricGraph, c: VertexConditions, etas=None, tol: float = 1e-10,
                        workers: int | None = None) -> TLScan:
    """Solver count of negative eigenvalues against ``n_+(L + Q M0 Q)`` and ``n_+(L)``."""
    require_valid(c, g)
    etas = check_grid(default_eta_grid() if etas is None else etas)
    n_L = c.n_plus_L()

    def point(eta):
        gs = scale(g, eta)
        neg = negative_eigenvalues(gs, c, tol)
        n_solver = len(neg)
        n_pred = predicted_negative_count(gs, c)
        return {"n_solver": n_solver, "n_predicted": n_pred, "n_plus_L": n_L,
                "match": n_solver == n_pred, "bounded": n_solver <= n_L}

    recs = _run(point, etas, workers)
    return TLScan("counts", etas, ["eta", "n_solver", "n_predicted", "n_plus_L", "match", "bounded", "ok"],
                  recs, targets={"n_plus_L": n_L}, meta=_meta(g, c, tol=tol))


# -- densities and free energies -------------------------------------------------------

def window_top(beta: float, mu: float, n_edges: int, length: float, rtol: float = 1e-8) -> float:
    """Window top at which the Weyl tail certificate of a thermal sum is below ``rtol``."""
    ratio = 4.0 * n_edges * np.sqrt(4 * np.pi * beta) / (rtol * min(length, 1.0))
    return max(mu, 0.0) + (np.log(ratio) + 3.0) / beta


def thermal_spectrum(g: MetricGraph, c: VertexConditions, beta: float, mu: float,
                     rtol: float = 1e-8, tol: float = 1e-10, top: float | None = None):
    if top is None:
        top = window_top(beta, mu, g.n_edges, float(g.lengths.sum()), rtol)
    return eigenvalues_in(g, c, (search_floor(g, c, tol), top), tol, verify=False)


def certified_sum(make: Callable[[float], object], evaluate: Callable[[object], float],
                  top: float, beta: float, attempts: int = 8) -> float:
    """Evaluate a thermal sum, raising the window top until its tail certificate holds."""
    for _ in range(attempts):
        try:
            return evaluate(make(top))
        except thermo.TailError:
            top += 10.0 / beta
    raise thermo.TailError(f"tail certificate not reached below window top {top!r}")


def _sum_on(g, c, kind, beta, mu, rtol, evaluate):
    top = window_top(beta, mu, g.n_edges, float(g.lengths.sum()), rtol)
    if kind is None:
        make = lambda t: thermal_spectrum(g, c, beta, mu, rtol, top=t)
    else:
        make = lambda t: decoupled_spectrum(g, kind, (0.0, t))
    return certified_sum(make, evaluate, top, beta)


def scan_density_convergence(g: MetricGraph, c: VertexConditions, beta: float, mu: float,
                             etas=None, rtol: float = 1e-8, workers: int | None = None) -> TLScan:
    """Finite-volume boson density ``N / L`` along the scan, with Dirichlet and Neumann
    comparators when ``L <= 0``."""
    require_valid(c, g)
    thermo._check_beta(beta)
    etas = check_grid(default_eta_grid() if etas is None else etas)
    bracket = c.l_max() <= 1e-10

    def point(eta):
        gs = scale(g, eta)
        L = float(gs.lengths.sum())
        number = lambda s: thermo.bose_number_finite(s, beta, mu, rtol) / L
        rec = {"rho": _sum_on(gs, c, None, beta, mu, rtol, number)}
        if bracket:
            rec["rho_D"] = _sum_on(gs, c, "dirichlet", beta, mu, rtol, number)
            rec["rho_N"] = _sum_on(gs, c, "neumann", beta, mu, rtol, number)
            rec["bracketed"] = bool(rec["rho_D"] <= rec["rho"] * (1 + 1e-12) and
                                    rec["rho"] <= rec["rho_N"] * (1 + 1e-12))
        return rec

    recs = _run(point, etas, workers)
    cols = ["eta", "rho"] + (["rho_D", "rho_N", "bracketed"] if bracket else []) + ["ok"]
    scan = TLScan("density", etas, cols, recs, meta=_meta(g, c, beta=beta, mu=mu, rtol=rtol))
    target = thermo.rho_plus(beta, mu) if mu < 0 else np.nan
    scan.targets = {"rho_plus": target, "extrapolated": richardson(etas, scan.column("rho"))}
    return scan


def scan_free_energy(g: MetricGraph, c: VertexConditions, beta: float, mu: float, etas=None,
                     statistics: str = "fermion", rtol: float = 1e-8,
                     workers: int | None = None) -> TLScan:
    """Finite-volume free-energy density compared with the free-fermion limit.

    Hardcore bosons use the fermionic spectrum of the same one-particle
    conditions, so their column coincides with the fermionic one.
    """
    from .manybody import hardcore_free_energy_finite
    require_valid(c, g)
    thermo._check_beta(beta)
    if statistics not in ("fermion", "hardcore_boson", "boson"):
        raise ScanError(f"unknown statistics {statistics!r}")
    etas = check_grid(default_eta_grid() if etas is None else etas)

    def point(eta):
        gs = scale(g, eta)
        if statistics == "fermion":
            ev = lambda s: thermo.fermi_free_energy_finite(s, None, beta, mu, rtol)
        elif statistics == "hardcore_boson":
            ev = lambda s: hardcore_free_energy_finite(s, None, beta, mu, rtol)
        else:
            ev = lambda s: thermo.bose_free_energy_finite(s, None, beta, mu, rtol)
        f = _sum_on(gs, c, None, beta, mu, rtol, ev)
        return {"f": f}

    recs = _run(point, etas, workers)
    scan = TLScan("free-energy", etas, ["eta", "f", "ok"], recs,
                  meta=_meta(g, c, beta=beta, mu=mu, statistics=statistics, rtol=rtol))
    fl = thermo.dirichlet_fermi_free_energy(beta, mu) if statistics != "boson" else np.nan
    f = scan.column("f")
    scan.targets = {"f_FD": fl, "extrapolated": richardson(etas, f),
                    "final_rel_error": float(abs(f[-1] / fl - 1)) if np.isfinite(fl) and f.size else np.nan}
    return scan
