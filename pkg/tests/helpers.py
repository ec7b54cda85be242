"""Shared generators for the test suite."""
import numpy as np

from qgb.graph_core import Edge, MetricGraph, VertexConditions

TOPOLOGIES = {
    1: [[(0, 1)], [(0, 0)]],
    2: [[(0, 1), (1, 2)], [(0, 1), (0, 1)], [(0, 0), (0, 1)]],
    3: [[(0, 1), (0, 2), (0, 3)], [(0, 1), (0, 1), (0, 1)], [(0, 1), (1, 2), (2, 0)]],
    4: [[(0, 1), (0, 2), (0, 3), (0, 4)], [(0, 1), (1, 2), (2, 3), (3, 0)],
        [(0, 1), (1, 2), (1, 2), (2, 3)]],
}


def random_graph(rng, n_edges=None, lo=0.5, hi=2.0) -> MetricGraph:
    n = int(rng.integers(1, 5)) if n_edges is None else n_edges
    topo = TOPOLOGIES[n][int(rng.integers(len(TOPOLOGIES[n])))]
    lengths = rng.uniform(lo, hi, size=n)
    return MetricGraph([Edge(i, float(l), a, b) for i, (l, (a, b)) in enumerate(zip(lengths, topo))])


def random_conditions(rng, n_edges: int, complex_ok=True, scale=3.0) -> VertexConditions:
    """Random projector ``P`` of random rank and random Hermitian ``L`` on ``ker P``."""
    d = 2 * n_edges
    r = int(rng.integers(0, d + 1))
    cplx = complex_ok and rng.random() < 0.5
    X = rng.standard_normal((d, d)) + (1j * rng.standard_normal((d, d)) if cplx else 0)
    U, _ = np.linalg.qr(X)
    P = U[:, :r] @ U[:, :r].conj().T
    W = U[:, r:]
    H = rng.standard_normal((d - r, d - r)) + (1j * rng.standard_normal((d - r, d - r)) if cplx else 0)
    H = scale * rng.uniform(0.2, 1.0) * (H + H.conj().T) / 2
    L = W @ H @ W.conj().T
    return VertexConditions((P + P.conj().T) / 2, (L + L.conj().T) / 2)


ACCEPTANCE: dict[int, str] = {}


def report(number: int, title: str, ok: bool, detail: str) -> None:
    """Print and record one pass/fail line for an acceptance criterion."""
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
