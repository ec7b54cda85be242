"""End-to-end acceptance criteria. Each test prints one pass/fail line."""
import itertools
import time

import numpy as np
import pytest

from helpers import random_conditions, random_graph, report
from qgb.graph_core import interval, loop, scale, standard_conditions, star, vertex_conditions
from qgb.manybody import canonical_state, hardcore_spectrum, occupation_lambda_max
from qgb.oracle import (convergence_ratios, one_particle_eigenvalues, two_particle_hardcore_interval,
                        two_particle_hardcore_star)
from qgb.spectral import (Spectrum, eigenvalues_in, negative_eigenvalues, predicted_negative_count,
                          search_floor)
from qgb.tdlimit import scan_density_convergence, scan_free_energy, scan_ground_state, window_top
from qgb.thermo import (condensate_fraction, critical_beta, dirichlet_fermi_free_energy, rho_plus,
                        second_derivative_jumps)


def test_exact_spectra():
    t = time.perf_counter()
    g = interval(np.pi)
    s = eigenvalues_in(g, standard_conditions(g, "dirichlet"), (0.5, 100.5))
    err_d = np.max(np.abs(s.energies - np.arange(1, 11) ** 2))
    ok_d = s.energies.size == 10 and np.all(s.multiplicities == 1)
    g = loop(2 * np.pi)
    s2 = eigenvalues_in(g, standard_conditions(g, "kirchhoff"), (-0.5, 100.5))
    err_l = np.max(np.abs(s2.energies - np.arange(0, 11) ** 2))
    ok_l = s2.energies.size == 11 and list(s2.multiplicities) == [1] + [2] * 10
    dt = time.perf_counter() - t
    ok = bool(ok_d and ok_l and err_d < 1e-10 and err_l < 1e-10 and dt < 1.0)
    report(1, "exact spectra", ok,
           f"interval err {err_d:.1e}, loop err {err_l:.1e}, runtime {dt:.2f} s (< 1 s)")
    assert ok


def test_count_identity():
    rng = np.random.default_rng(20240601)
    t = time.perf_counter()
    n_cases = 240
    mismatch = kernel_bad = fd_bad = fd_done = 0
    for i in range(n_cases):
        g = random_graph(rng)
        c = random_conditions(rng, g.n_edges)
        neg = negative_eigenvalues(g, c)
        if len(neg) != predicted_negative_count(g, c):
            mismatch += 1
        if neg.kernel_dims is not None and np.any(neg.kernel_dims != neg.multiplicities):
            kernel_bad += 1
        if i % 12 == 0:
            # finite-element count on the same conditions, away from near-zero levels
            below = eigenvalues_in(g, c, (search_floor(g, c), 0.5), verify=False).expanded()
            if np.all(np.abs(below) > 0.05):
                h = float(g.lengths.min()) / 200
                fd = one_particle_eigenvalues(g, c, h, min(len(below) + 1, 2 * g.n_edges + 200))
                fd_done += 1
                if int(np.sum(fd < 0)) != int(np.sum(below < 0)):
                    fd_bad += 1
    dt = time.perf_counter() - t
    ok = mismatch == 0 and kernel_bad == 0 and fd_bad == 0 and fd_done >= 10 and dt < 120
    report(2, "negative count identity", ok,
           f"{n_cases} random (P, L): {mismatch} count mismatches, {kernel_bad} kernel-dim "
           f"mismatches, {fd_bad}/{fd_done} FD disagreements, runtime {dt:.1f} s (< 120 s)")
    assert ok


def test_ground_state_convergence():
    t = time.perf_counter()
    cases = []
    g = interval(4.0)
    cases.append(("robin interval", scan_ground_state(g, standard_conditions(g, "robin", 1.0),
                                                      2.0 ** np.arange(11))))
    g = star([4.0, 5.0, 6.0])
    cases.append(("robin 3-star", scan_ground_state(g, standard_conditions(g, "robin", 1.0),
                                                    2.0 ** np.arange(11))))
    dt = time.perf_counter() - t
    parts, ok = [], dt < 60
    for name, sc in cases:
        err = sc.targets["final_error"]
        sand = bool(np.all([r["sandwich"] for r in sc.records]))
        ok = ok and not sc.failed and err < 1e-3 and sand
        parts.append(f"{name} |E0(1024) + 1| = {err:.1e}, sandwich {'held' if sand else 'broken'}")
    report(3, "ground-state convergence", ok, "; ".join(parts) + f", runtime {dt:.1f} s (< 60 s)")
    assert ok


def test_no_condensation_bracketing():
    graphs = []
    g = star([1.0, 1.5, 2.0])
    graphs.append(("kirchhoff star", g, vertex_conditions(g)))
    graphs.append(("repulsive delta star", g, vertex_conditions(g, delta={"c": -2.0})))
    bracketed = total = 0
    for (_, g, c), beta, mu in itertools.product(graphs, (0.5, 1.0, 2.0), (-2.0, -1.0, -0.5)):
        sc = scan_density_convergence(g, c, beta, mu, [1.0, 4.0, 16.0])
        total += len(sc.records)
        bracketed += sum(bool(r.get("bracketed")) for r in sc.records)
    worst = 0.0
    for (_, g, c), (beta, mu) in itertools.product(graphs, ((1.0, -0.5), (2.0, -1.0))):
        sc = scan_density_convergence(g, c, beta, mu, [1000.0])
        r = sc.records[0]
        total += 1
        bracketed += bool(r.get("bracketed"))
        target = rho_plus(beta, mu)
        for key in ("rho", "rho_D", "rho_N"):
            worst = max(worst, abs(r.get(key, np.nan) / target - 1))
    ok = bracketed == total and worst < 1e-2
    report(4, "no-BEC bracketing", ok,
           f"{bracketed}/{total} (beta, mu, eta) points bracketed, worst relative deviation "
           f"from rho_plus at eta = 1000: {worst:.2e} (< 1e-2)")
    assert ok


def test_condensation_formulas():
    bc = critical_beta(1.0, 1.0)
    resid = abs(rho_plus(bc, -1.0) - 1.0)
    betas = np.geomspace(bc, 100 * bc, 50)
    frac = np.array([condensate_fraction(b, bc, 1.0) for b in betas])
    mono = bool(np.all(np.diff(frac) >= 0))
    ok = resid < 1e-10 and frac[0] == 0.0 and frac[-1] > 0.99 and mono
    report(5, "condensation formulas", ok,
           f"beta_c = {bc:.12f} residual {resid:.1e}, fraction {frac[0]:.3g} at beta_c, "
           f"{frac[-1]:.5f} at 100 beta_c, monotone {mono}")
    assert ok


def test_fermi_bose_isospectrality():
    t = time.perf_counter()
    k = 5
    g = interval(np.pi)
    fermi_i = hardcore_spectrum(eigenvalues_in(g, standard_conditions(g, "dirichlet"), (0.5, 60.0)),
                                2).expanded()[:k]
    p1 = two_particle_hardcore_interval(np.pi, np.pi / 64, k).eigenvalues
    p2 = two_particle_hardcore_interval(np.pi, np.pi / 128, k).eigenvalues
    r_i = convergence_ratios(fermi_i, p1, p2)
    g = star([1.0, 1.0, 1.0])
    c = vertex_conditions(g, dirichlet=["v0", "v1", "v2"])
    fermi_s = hardcore_spectrum(eigenvalues_in(g, c, (0.5, 120.0)), 2).expanded()[:k]
    q1 = two_particle_hardcore_star([1, 1, 1], 1 / 32, k).eigenvalues
    q2 = two_particle_hardcore_star([1, 1, 1], 1 / 64, k).eigenvalues
    r_s = convergence_ratios(fermi_s, q1, q2)
    dt = time.perf_counter() - t
    err = max(np.max(np.abs(p2 / fermi_i - 1)), np.max(np.abs(q2 / fermi_s - 1)))
    ratios = np.concatenate([r_i, r_s])
    ok = bool(np.all((ratios >= 3.2) & (ratios <= 4.8)) and err < 1e-2 and dt < 300)
    report(6, "Fermi-Bose isospectrality", ok,
           f"fine-grid relative error {err:.1e}, h-halving ratios in [{ratios.min():.3f}, "
           f"{ratios.max():.3f}] (4 +- 20%), runtime {dt:.1f} s (< 300 s)")
    assert ok


def test_free_energy_coincidence():
    g = star([1.0, 1.5, 2.0])
    c = vertex_conditions(g, dirichlet=["v0", "v1", "v2"])
    worst = 0.0
    for mu in (-0.5, 0.5):
        sc = scan_free_energy(g, c, 1.0, mu, [1000.0], "hardcore_boson")
        worst = max(worst, sc.targets["final_rel_error"])
    grid = np.linspace(-2.0, 2.0, 801)
    _, jumps = second_derivative_jumps(lambda m: dirichlet_fermi_free_energy(1.0, m), grid)
    ok = worst < 5e-3 and float(jumps.max()) < 1e-4
    report(7, "free-energy coincidence", ok,
           f"hardcore f at eta = 1000 within {worst:.2e} of f_FD (< 5e-3), max second-derivative "
           f"jump {jumps.max():.1e} over mu in [-2, 2] (< 1e-4)")
    assert ok


def _enumerate(levels, N, beta, fermi):
    """Brute-force canonical ``Z_N`` and per-state occupations."""
    n = len(levels)
    combos = (itertools.combinations(range(n), N) if fermi
              else itertools.combinations_with_replacement(range(n), N))
    Z = 0.0
    occ = np.zeros(n)
    for cfg in combos:
        w = np.exp(-beta * sum(levels[i] for i in cfg))
        Z += w
        for i in cfg:
            occ[i] += w
    return Z, occ / Z


def test_recursion_matches_enumeration():
    rng = np.random.default_rng(7)
    worst = 0.0
    cases = 0
    for _ in range(30):
        n = int(rng.integers(2, 7))
        levels = np.sort(rng.uniform(-1.0, 3.0, n))
        s = Spectrum.from_levels(levels)
        beta = float(rng.uniform(0.2, 3.0))
        for N in range(1, 5):
            for stats in ("boson", "fermion"):
                if stats == "fermion" and N > n:
                    continue
                Z, occ = _enumerate(levels, N, beta, stats == "fermion")
                st = canonical_state(s, N, beta, stats)
                worst = max(worst, abs(st.Z / Z - 1),
                            float(np.max(np.abs(st.occupations - occ) / np.maximum(occ, 1e-300))))
                cases += 1
    ok = worst < 1e-12
    report(8, "canonical recursion vs enumeration", ok,
           f"{cases} cases, worst relative deviation {worst:.1e} (< 1e-12)")
    assert ok


def test_penrose_onsager_contrast():
    rho0, c1 = 1.0, 0.25
    beta = 2.0 * critical_beta(rho0, 1.0)
    sizes = [8, 16, 32, 64]
    out = {}
    for kind in ("robin", "neumann"):
        vals = []
        for N in sizes:
            g = interval(N / rho0)
            c = standard_conditions(g, kind, 1.0 if kind == "robin" else None)
            top = window_top(beta, 1.0, 1, N / rho0)
            s = eigenvalues_in(g, c, (search_floor(g, c), top), verify=False)
            vals.append(occupation_lambda_max(s, N, beta)[1])
        out[kind] = np.array(vals)
    rob, neu = out["robin"], out["neumann"]
    ok = bool(rob.min() > c1 and np.all(np.diff(neu) < 0) and neu[-1] < rob[-1] / 3)
    report(9, "Penrose-Onsager contrast", ok,
           f"beta = 2 beta_c, lambda_max/N robin {np.round(rob, 3).tolist()} (> {c1}), "
           f"neumann {np.round(neu, 3).tolist()} (decreasing)")
    assert ok
