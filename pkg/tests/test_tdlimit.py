import numpy as np
import pytest

from qgb.graph_core import interval, standard_conditions, star, vertex_conditions
from qgb.tdlimit import (ScanError, certified_sum, check_grid, default_eta_grid, richardson,
                         scan_density_convergence, scan_free_energy, scan_ground_state,
                         scan_negative_count, window_top)
from qgb.thermo import TailError, rho_plus


def test_grids():
    assert default_eta_grid().tolist() == [2.0 ** k for k in range(11)]
    for bad in ([], [1.0, 1.0], [2.0, 1.0], [-1.0, 2.0], [1.0, np.nan]):
        with pytest.raises(ScanError):
            check_grid(bad)


def test_richardson_exact_on_quadratic():
    etas = np.array([1.0, 2.0, 4.0, 8.0])
    vals = 3.0 + 2.0 / etas - 5.0 / etas ** 2
    assert richardson(etas, vals) == pytest.approx(3.0, abs=1e-12)
    assert np.isnan(richardson(etas, np.full(4, np.nan)))


def test_ground_state_scan_gapped():
    g = interval(4.0)
    sc = scan_ground_state(g, standard_conditions(g, "robin", 1.0), [1.0, 2.0, 4.0, 8.0, 16.0])
    E0 = sc.column("E0")
    # E0 rises to -L_max^2 from below
    assert np.all(np.diff(E0) > -1e-12) and np.all(E0 < -1.0 + 1e-10)
    assert sc.targets["regime"] == "gap" and sc.targets["limit"] == -1.0
    assert sc.targets["final_error"] < 1e-10
    assert all(r["sandwich"] for r in sc.records)
    assert np.all(sc.column("lower") <= E0 + 1e-10) and np.all(E0 <= sc.column("upper") + 1e-10)


def test_ground_state_scan_gapless():
    g = star([1.0, 2.0])
    sc = scan_ground_state(g, standard_conditions(g, "kirchhoff"), [1.0, 10.0])
    assert sc.targets["regime"] == "no-gap"
    assert np.allclose(sc.column("E0"), 0.0, atol=1e-10)


def test_negative_count_scan():
    g = interval(0.5)
    sc = scan_negative_count(g, standard_conditions(g, "robin", 1.0), [1.0, 2.0, 4.0, 8.0, 16.0])
    n = sc.column("n_solver")
    assert n.tolist() == [1, 1, 1, 2, 2]
    assert all(r["match"] and r["bounded"] for r in sc.records)
    assert sc.targets["n_plus_L"] == 2


def test_threads_do_not_change_results():
    g = star([1.0, 1.5, 2.0])
    c = vertex_conditions(g, delta={"c": 1.0})
    a = scan_ground_state(g, c, [1.0, 2.0, 4.0, 8.0], workers=1)
    b = scan_ground_state(g, c, [1.0, 2.0, 4.0, 8.0], workers=4)
    assert a.to_csv() == b.to_csv()


def test_window_top_grows_with_precision():
    assert window_top(1.0, -1.0, 3, 10.0, 1e-10) > window_top(1.0, -1.0, 3, 10.0, 1e-6)
    assert window_top(1.0, 2.0, 3, 10.0) - window_top(1.0, -1.0, 3, 10.0) == pytest.approx(2.0)


def test_certified_sum_raises_top():
    tops = []

    def evaluate(t):
        tops.append(t)
        if t < 25.0:
            raise TailError("short")
        return t

    assert certified_sum(lambda t: t, evaluate, 1.0, 1.0) == pytest.approx(31.0)
    with pytest.raises(TailError):
        certified_sum(lambda t: t, lambda t: (_ for _ in ()).throw(TailError("x")), 1.0, 1.0, attempts=2)


def test_density_scan_bracketed():
    g = star([1.0, 1.5, 2.0])
    sc = scan_density_convergence(g, vertex_conditions(g), 1.0, -0.5, [1.0, 10.0, 100.0])
    assert all(r["bracketed"] for r in sc.records)
    rho = sc.column("rho")
    assert abs(rho[-1] / rho_plus(1.0, -0.5) - 1) < 1e-2
    assert sc.targets["rho_plus"] == pytest.approx(rho_plus(1.0, -0.5))


def test_failed_points_are_recorded():
    g = interval(2.0)
    sc = scan_density_convergence(g, standard_conditions(g, "neumann"), 1.0, 0.5, [1.0, 2.0])
    assert sc.failed == [1.0, 2.0]
    assert "ThermoError" in sc.records[0]["error"]
    assert np.all(np.isnan(sc.column("rho")))


def test_free_energy_scan():
    g = interval(1.0)
    c = standard_conditions(g, "dirichlet")
    f = scan_free_energy(g, c, 1.0, 0.5, [10.0, 100.0, 1000.0], "fermion")
    h = scan_free_energy(g, c, 1.0, 0.5, [10.0, 100.0, 1000.0], "hardcore_boson")
    assert np.array_equal(f.column("f"), h.column("f"))
    # boundary correction of order 1 / L
    err = np.abs(f.column("f") / f.targets["f_FD"] - 1)
    assert np.all(np.diff(err) < 0) and f.targets["final_rel_error"] < 5e-3
    with pytest.raises(ScanError):
        scan_free_energy(g, c, 1.0, 0.5, [1.0], "anyon")
    text = f.to_csv().splitlines()
    assert text[0].startswith("# scan=free-energy") and text[2] == "eta,f,ok"
