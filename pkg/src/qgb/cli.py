"""Command-line front end.

Every failure prints one line ``error[CODE]: message`` on stderr. Exit status
is 1 for input errors and 2 for solver failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from . import manybody, oracle, tdlimit, thermo
from .graph_core import GraphError, load_graph, total_length
from .spectral import BracketError, SpectralError, eigenvalues_in, search_floor


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _g17(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _table(header: list[str], rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta:
        buf.write("# " + " ".join(f"{k}={_g17(v)}" for k, v in meta.items()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_g17(v) for v in r])
    return buf.getvalue()


def parse_eta(text: str) -> np.ndarray:
    """``a:b`` (ratio 2), ``a:b:r`` or a comma list."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            a, b = parts[:2]
            r = parts[2] if len(parts) == 3 else 2.0
            if not (a > 0 and r > 1):
                raise InputError(f"bad eta range {text!r}")
            n = int(np.floor(np.log(b / a) / np.log(r) + 1e-9)) + 1 if b >= a else 0
            grid = a * r ** np.arange(max(n, 0))
        else:
            grid = np.array([float(p) for p in text.split(",") if p.strip()])
    except ValueError:
        raise InputError(f"cannot parse eta grid {text!r}") from None
    if grid.size == 0:
        raise InputError("empty eta grid")
    return tdlimit.check_grid(grid)


def _positive(name, v):
    if v is None:
        return None
    if not (np.isfinite(v) and v > 0):
        raise InputError(f"--{name} must be positive and finite")
    return v


def _finite(name, v):
    if v is not None and not np.isfinite(v):
        raise InputError(f"--{name} must be finite")
    return v


def _emit(args, text: str):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------

def cmd_spectrum(args) -> int:
    g, c = load_graph(args.input)
    lo, hi = args.window
    _finite("window", lo), _finite("window", hi)
    s = eigenvalues_in(g, c, (lo, hi), _positive("tol", args.tol))
    _emit(args, s.to_json() + "\n" if args.format == "json" else s.to_csv())
    return 0


def cmd_thermo(args) -> int:
    rho, lmax, mu = _positive("rho", args.rho), args.lmax, _finite("mu", args.mu)
    betas = [_positive("beta", b) for b in (args.beta or [])]
    if args.input:
        if mu is None or not betas:
            raise InputError("finite-volume thermo needs --beta and --mu")
        g, c = load_graph(args.input)
        rows = []
        for b in betas:
            top = tdlimit.window_top(b, mu, g.n_edges, total_length(g))
            make = lambda t: eigenvalues_in(g, c, (search_floor(g, c), t), verify=False)
            res = tdlimit.certified_sum(make, lambda s: thermo.finite_volume(s, b, mu, args.stats),
                                        top, b)
            rows.append([b, mu, res.rho, res.f, res.n_expected])
        _emit(args, _table(["beta", "mu", "rho", "f", "N"], rows,
                           {"graph": g.fingerprint(), "statistics": args.stats}))
        return 0
    if mu is not None:
        if lmax is not None and lmax > 0 and mu > -lmax * lmax:
            raise thermo.ThermoError(f"mu <= -L_max^2 violated: mu={mu!r}, -L_max^2={-lmax * lmax!r}")
        if not betas:
            raise InputError("--mu needs --beta")
        rows = [[b, mu, thermo.rho_plus(b, mu, lmax)] for b in betas]
        _emit(args, _table(["beta", "mu", "rho_plus"], rows, {"lmax": lmax}))
        return 0
    if rho is None or lmax is None:
        raise InputError("thermo needs --rho and --lmax, or --mu with --beta")
    bc = thermo.critical_beta(rho, lmax)
    rows = []
    for b in betas or [bc]:
        if args.fraction and b < bc:
            raise thermo.ThermoError(f"beta < beta_c: no condensate ({b!r} < {bc!r})")
        inv = thermo.invert_density(b, rho, lmax=lmax)
        frac = thermo.condensate_fraction(b, bc, lmax) if b >= bc else 0.0
        rp = thermo.rho_plus(b, inv.mu, lmax)
        rows.append([b, inv.mu, rho, rp, bc, frac, inv.condensed])
    _emit(args, _table(["beta", "mu", "rho0", "rho_plus", "beta_c", "condensate_fraction", "condensed"],
                       rows, {"lmax": lmax}))
    return 0


def cmd_scan(args) -> int:
    g, c = load_graph(args.input)
    etas = parse_eta(args.eta) if args.eta is not None else tdlimit.default_eta_grid()
    w = args.threads
    if args.kind in ("density", "free-energy"):
        if args.beta is None or args.mu is None:
            raise InputError(f"scan {args.kind} needs --beta and --mu")
        _positive("beta", args.beta), _finite("mu", args.mu)
    if args.kind == "ground-state":
        scan = tdlimit.scan_ground_state(g, c, etas, args.tol, workers=w)
    elif args.kind == "counts":
        scan = tdlimit.scan_negative_count(g, c, etas, args.tol, workers=w)
    elif args.kind == "density":
        scan = tdlimit.scan_density_convergence(g, c, args.beta, args.mu, etas, workers=w)
    else:
        scan = tdlimit.scan_free_energy(g, c, args.beta, args.mu, etas, args.stats, workers=w)
    _emit(args, scan.to_csv())
    if scan.failed:
        for r in scan.records:
            if not r["ok"]:
                sys.stderr.write(f"warning: eta={r['eta']!r}: {r['error']}\n")
    if args.kind == "counts" and not all(r.get("match", False) for r in scan.records):
        raise BracketError("solver and predicted negative counts differ")
    return 0


def cmd_manybody(args) -> int:
    if args.N < 1:
        raise InputError("-N must be a positive integer")
    g, c = load_graph(args.input)
    top = args.one_particle_top
    if top is None:
        top = ((args.N + 8) * np.pi / float(g.lengths.min())) ** 2
    s = eigenvalues_in(g, c, (search_floor(g, c), top), verify=False)
    stats = "hardcore_boson" if args.stats == "hardcore" else args.stats
    if stats == "hardcore_boson":
        mb = manybody.hardcore_spectrum(s, args.N, args.ceiling)
    else:
        mb = manybody.free_spectrum(s, args.N, stats, args.ceiling)
    if args.beta is not None:
        st = manybody.canonical_state(s, args.N, _positive("beta", args.beta),
                                      "fermion" if stats == "hardcore_boson" else stats)
        _emit(args, st.to_json() + "\n")
        return 0
    if args.count is not None:
        mb = manybody.ManyBodySpectrum(mb.N, mb.statistics, mb.energies[:args.count],
                                       mb.multiplicities[:args.count], mb.ceiling)
    _emit(args, mb.to_csv())
    return 0


def cmd_verify(args) -> int:
    checks = oracle.verification_battery()
    rows = [[ch.name, ch.error, ch.tol, "" if ch.ratio is None else ch.ratio,
             "pass" if ch.ok else "fail"] for ch in checks]
    _emit(args, _table(["check", "error", "tol", "h_ratio", "result"], rows))
    if not all(ch.ok for ch in checks):
        sys.stderr.write("error[VERIFY]: oracle battery failed\n")
        return 2
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qgb", description="Quantum graph spectra and Bose gas thermodynamics")
    p.add_argument("--threads", type=int, default=None, help="worker cap (env QGB_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, need_input=True):
        if need_input:
            q.add_argument("-i", "--input", required=True, help="graph JSON file")
        q.add_argument("-o", "--output", help="output file (default stdout)")

    q = sub.add_parser("spectrum", help="one-particle eigenvalues in a window")
    common(q)
    q.add_argument("--window", nargs=2, type=float, required=True, metavar=("LO", "HI"))
    q.add_argument("--tol", type=float, default=1e-10)
    q.add_argument("--format", choices=("csv", "json"), default="csv")
    q.set_defaults(func=cmd_spectrum)

    q = sub.add_parser("thermo", help="densities, critical beta, condensate fraction")
    q.add_argument("-i", "--input", help="graph JSON for finite-volume values")
    q.add_argument("-o", "--output")
    q.add_argument("--rho", type=float)
    q.add_argument("--lmax", type=float)
    q.add_argument("--beta", type=float, nargs="+")
    q.add_argument("--mu", type=float)
    q.add_argument("--fraction", action="store_true", help="require a condensate fraction")
    q.add_argument("--stats", choices=("boson", "fermion", "hardcore_boson"), default="boson")
    q.set_defaults(func=cmd_thermo)

    q = sub.add_parser("scan", help="thermodynamic-limit scans")
    q.add_argument("kind", choices=("ground-state", "counts", "density", "free-energy"))
    common(q)
    q.add_argument("--eta", help="grid a:b[:ratio] or comma list (default 1:1024)")
    q.add_argument("--beta", type=float)
    q.add_argument("--mu", type=float)
    q.add_argument("--tol", type=float, default=1e-10)
    q.add_argument("--stats", choices=("boson", "fermion", "hardcore_boson"), default="fermion")
    q.set_defaults(func=cmd_scan)

    q = sub.add_parser("manybody", help="N-particle spectra and canonical occupations")
    common(q)
    q.add_argument("-N", type=int, required=True)
    q.add_argument("--stats", choices=("boson", "fermion", "hardcore"), default="fermion")
    q.add_argument("--ceiling", type=float)
    q.add_argument("--count", type=int)
    q.add_argument("--one-particle-top", type=float)
    q.add_argument("--beta", type=float, help="emit canonical occupations as JSON")
    q.set_defaults(func=cmd_manybody)

    q = sub.add_parser("verify", help="oracle battery")
    common(q, need_input=False)
    q.add_argument("--all", action="store_true", help="run every check (the default)")
    q.set_defaults(func=cmd_verify)
    return p


INPUT_ERRORS = (InputError, GraphError, thermo.ThermoError, manybody.ManyBodyError,
                tdlimit.ScanError, OSError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except InputError as exc:
        sys.stderr.write(f"error[USAGE]: {exc}\n")
        return 1
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    threads = args.threads
    if threads is None:
        threads = tdlimit.default_workers()
    elif threads < 1:
        sys.stderr.write("error[INPUT]: --threads must be positive\n")
        return 1
    os.environ["QGB_THREADS"] = str(threads)
    args.threads = threads
    try:
        return args.func(args)
    except BracketError as exc:
        sys.stderr.write(f"error[SOLVER]: {exc}\n")
        return 2
    except thermo.TailError as exc:
        sys.stderr.write(f"error[SOLVER]: {exc}\n")
        return 2
    except SpectralError as exc:
        sys.stderr.write(f"error[INPUT]: {exc}\n")
        return 1
    except INPUT_ERRORS as exc:
        sys.stderr.write(f"error[INPUT]: {exc}\n")
        return 1
    except (oracle.OracleError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        sys.stderr.write(f"error[SOLVER]: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
