import json
import subprocess
import sys

import numpy as np
import pytest

from qgb.cli import main, parse_eta


def _write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


def _interval(tmp_path, length=np.pi, kind="dirichlet", params=None):
    cond = {"kind": kind}
    if params:
        cond["params"] = params
    return _write(tmp_path, f"{kind}.json", {"edges": [{"length": length, "from": 0, "to": 1}],
                                             "conditions": cond})


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    head = lines[0].split(",")
    return [dict(zip(head, l.split(","))) for l in lines[1:]]


def test_spectrum_csv_and_json(tmp_path, capsys):
    f = _interval(tmp_path)
    code, out, _ = _run(capsys, "spectrum", "-i", f, "--window", "0", "100")
    assert code == 0
    assert [float(r["energy"]) for r in _rows(out)] == pytest.approx([1, 4, 9, 16, 25, 36, 49, 64, 81, 100])
    code, out, _ = _run(capsys, "spectrum", "-i", f, "--window", "0", "10", "--format", "json")
    assert code == 0 and len(json.loads(out)["eigenvalues"]) == 3


def test_output_is_deterministic(tmp_path, capsys):
    f = _interval(tmp_path, 3.0, "robin", {"c": 1.0})
    a = _run(capsys, "spectrum", "-i", f, "--window", "-2", "20")[1]
    b = _run(capsys, "spectrum", "-i", f, "--window", "-2", "20")[1]
    assert a == b
    assert any(len(r["energy"].replace("-", "").replace(".", "")) >= 15 for r in _rows(a))


def test_output_file(tmp_path, capsys):
    f = _interval(tmp_path)
    out = tmp_path / "out.csv"
    assert _run(capsys, "spectrum", "-i", f, "--window", "0", "5", "-o", str(out))[0] == 0
    assert out.read_text().splitlines()[1] == "index,energy,multiplicity"


@pytest.mark.parametrize("doc, key", [
    ({"edges": [{"length": 1.0, "from": 0}], "conditions": {"kind": "dirichlet"}}, "'to'"),
    ({"edges": [{"length": 1.0, "from": 0, "to": 1}], "conditions": {"kind": "dirichlet"}, "colour": 1},
     "'colour'"),
])
def test_bad_input_names_key(tmp_path, capsys, doc, key):
    code, _, err = _run(capsys, "spectrum", "-i", _write(tmp_path, "bad.json", doc), "--window", "0", "1")
    assert code == 1 and err.startswith("error[INPUT]") and key in err
    assert err.count("\n") == 1


def test_malformed_json_and_missing_file(tmp_path, capsys):
    code, _, err = _run(capsys, "spectrum", "-i", _write(tmp_path, "x.json", "{oops"), "--window", "0", "1")
    assert code == 1 and "malformed" in err
    code, _, err = _run(capsys, "spectrum", "-i", str(tmp_path / "none.json"), "--window", "0", "1")
    assert code == 1 and err.startswith("error[INPUT]")


def test_degenerate_window(tmp_path, capsys):
    code, _, err = _run(capsys, "spectrum", "-i", _interval(tmp_path), "--window", "10", "0")
    assert code == 1 and "degenerate window" in err


def test_usage_errors(capsys):
    code, _, err = _run(capsys, "spectrum")
    assert code == 1 and err.startswith("error[USAGE]")
    assert _run(capsys, "bogus")[0] == 1
    assert _run(capsys, "--threads", "0", "verify")[0] == 1


def test_thermo_condensate(capsys):
    code, out, _ = _run(capsys, "thermo", "--rho", "1", "--lmax", "1", "--beta", "2")
    assert code == 0
    r = _rows(out)[0]
    assert float(r["beta_c"]) == pytest.approx(0.28786456087305681, rel=1e-14)
    assert 0 < float(r["condensate_fraction"]) < 1 and r["condensed"] == "true"


def test_thermo_errors(capsys):
    code, _, err = _run(capsys, "thermo", "--rho", "1", "--lmax", "1", "--beta", "0.1", "--fraction")
    assert code == 1 and "beta < beta_c" in err
    code, _, err = _run(capsys, "thermo", "--mu", "0", "--lmax", "1")
    assert code == 1 and "mu <= -L_max^2 violated" in err
    code, _, err = _run(capsys, "thermo", "--rho", "-1", "--lmax", "1")
    assert code == 1


def test_thermo_rho_plus_and_finite_volume(tmp_path, capsys):
    code, out, _ = _run(capsys, "thermo", "--mu", "-0.5", "--beta", "1", "2")
    assert code == 0 and len(_rows(out)) == 2
    f = _interval(tmp_path, 50.0, "neumann")
    code, out, _ = _run(capsys, "thermo", "-i", f, "--mu", "-0.5", "--beta", "1")
    assert code == 0 and float(_rows(out)[0]["rho"]) > 0


def test_scan_ground_state(tmp_path, capsys):
    f = _interval(tmp_path, 4.0, "robin", {"c": 1.0})
    code, out, _ = _run(capsys, "scan", "ground-state", "-i", f, "--eta", "1:1024")
    assert code == 0
    E0 = np.array([float(r["E0"]) for r in _rows(out)])
    assert E0.size == 11 and np.all(np.diff(E0) >= -1e-12) and abs(E0[-1] + 1) < 1e-3


def test_scan_counts_and_threads(tmp_path, capsys):
    f = _interval(tmp_path, 0.5, "robin", {"c": 1.0})
    code, out, _ = _run(capsys, "--threads", "3", "scan", "counts", "-i", f, "--eta", "1,4,16")
    assert code == 0
    assert [r["match"] for r in _rows(out)] == ["true"] * 3
    assert _run(capsys, "scan", "counts", "-i", f, "--eta", "1,4,16")[1] == out


def test_scan_input_errors(tmp_path, capsys):
    f = _interval(tmp_path, 0.5, "robin", {"c": 1.0})
    assert _run(capsys, "scan", "counts", "-i", f, "--eta", "")[0] == 1
    assert _run(capsys, "scan", "counts", "-i", f, "--eta", "4,2")[0] == 1
    assert _run(capsys, "scan", "density", "-i", f)[0] == 1


def test_parse_eta():
    assert parse_eta("1:8").tolist() == [1, 2, 4, 8]
    assert parse_eta("1:100:10").tolist() == pytest.approx([1, 10, 100])
    assert parse_eta("3, 5").tolist() == [3, 5]


def test_manybody(tmp_path, capsys):
    f = _interval(tmp_path)
    code, out, _ = _run(capsys, "manybody", "-i", f, "-N", "2", "--stats", "hardcore", "--count", "4")
    assert code == 0
    assert [float(r["energy"]) for r in _rows(out)] == pytest.approx([5, 10, 13, 17], abs=1e-9)
    assert _rows(out)[0]["statistics"] == "hardcore_boson"
    code, out, _ = _run(capsys, "manybody", "-i", f, "-N", "3", "--stats", "boson", "--beta", "1")
    assert code == 0 and json.loads(out)["N"] == 3
    code, _, err = _run(capsys, "manybody", "-i", f, "-N", "0")
    assert code == 1 and err.startswith("error[")


def test_verify(capsys):
    code, out, _ = _run(capsys, "verify", "--all")
    assert code == 0
    assert [r["result"] for r in _rows(out)] == ["pass"] * 5


def test_module_entry_point(tmp_path):
    f = _interval(tmp_path)
    r = subprocess.run([sys.executable, "-m", "qgb", "spectrum", "-i", f, "--window", "0", "5"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "1,4,1" in r.stdout.splitlines()
