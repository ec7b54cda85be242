"""Compact metric graphs, vertex conditions and edge-length scaling.

Boundary values of a function ``F = (f_1, ..., f_E)`` are stored in the slot
order ``(f_1(0), ..., f_E(0), f_1(l_1), ..., f_E(l_E))``; derivatives use the
inward convention ``(f_1'(0), ..., -f_E'(l_E))``. Every ``2E x 2E`` matrix in
this package (``P``, ``L``, ``M0``) uses that layout.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

TOL = 1e-10


class GraphError(ValueError):
    """Invalid graph or vertex-condition input."""


@dataclass(frozen=True)
class Edge:
    id: Hashable
    length: float
    start: Hashable
    end: Hashable


@dataclass(frozen=True)
class MetricGraph:
    """A finite metric graph; loops and multi-edges are allowed."""

    edges: tuple[Edge, ...]
    vertices: tuple[Hashable, ...]

    def __init__(self, edges: Iterable[Edge | tuple], vertices: Sequence | None = None,
                 allow_disconnected: bool = False):
        edges = tuple(e if isinstance(e, Edge) else Edge(*e) for e in edges)
        if not edges:
            raise GraphError("graph needs at least one edge")
        for e in edges:
            if not np.isfinite(e.length) or e.length <= 0:
                raise GraphError(f"edge {e.id!r}: length must be positive, got {e.length}")
        ids = [e.id for e in edges]
        if len(set(ids)) != len(ids):
            raise GraphError("edge ids must be unique")
        if vertices is None:
            seen: dict = {}
            for e in edges:
                seen.setdefault(e.start, None)
                seen.setdefault(e.end, None)
            vertices = tuple(seen)
        vertices = tuple(vertices)
        known = set(vertices)
        for e in edges:
            if e.start not in known or e.end not in known:
                raise GraphError(f"edge {e.id!r} references an unknown vertex")
        object.__setattr__(self, "edges", tuple(Edge(e.id, float(e.length), e.start, e.end)
                                                for e in edges))
        object.__setattr__(self, "vertices", vertices)
        if not allow_disconnected and not self.is_connected():
            raise GraphError("graph is disconnected (pass allow_disconnected=True to override)")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges])

    def is_connected(self) -> bool:
        parent = {v: v for v in self.vertices}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for e in self.edges:
            parent[find(e.start)] = find(e.end)
        return len({find(v) for v in self.vertices}) == 1

    def vertex_slots(self) -> dict[Hashable, list[int]]:
        """Boundary slots incident to each vertex (a loop contributes two)."""
        E = self.n_edges
        slots: dict = {v: [] for v in self.vertices}
        for i, e in enumerate(self.edges):
            slots[e.start].append(i)
            slots[e.end].append(i + E)
        return slots

    def fingerprint(self) -> str:
        payload = [(repr(e.id), repr(float(e.length)), repr(e.start), repr(e.end))
                   for e in self.edges]
        return hashlib.sha256(json.dumps(payload).encode()).hexdigest()[:16]


def interval(length: float) -> MetricGraph:
    return MetricGraph([Edge(0, length, 0, 1)])


def loop(length: float) -> MetricGraph:
    return MetricGraph([Edge(0, length, 0, 0)])


def star(lengths: Sequence[float]) -> MetricGraph:
    """Star graph; every edge starts at the centre vertex ``"c"``."""
    return MetricGraph([Edge(i, l, "c", f"v{i}") for i, l in enumerate(lengths)])


def total_length(g: MetricGraph) -> float:
    return float(np.sum(g.lengths))


def scale(g: MetricGraph, eta: float) -> MetricGraph:
    """Multiply every edge length by ``eta``; connectivity is unchanged."""
    if not np.isfinite(eta) or eta <= 0:
        raise GraphError(f"scaling factor must be positive, got {eta}")
    return MetricGraph([Edge(e.id, e.length * eta, e.start, e.end) for e in g.edges],
                       g.vertices, allow_disconnected=True)


# -- boundary ordering -------------------------------------------------------

def slot(g: MetricGraph, edge_index: int, endpoint: int) -> int:
    """Slot of ``edge_index`` at endpoint 0 (x = 0) or 1 (x = l_e)."""
    if endpoint not in (0, 1) or not 0 <= edge_index < g.n_edges:
        raise IndexError("no such boundary point")
    return edge_index + endpoint * g.n_edges


def slot_to_endpoint(g: MetricGraph, s: int) -> tuple[int, int]:
    if not 0 <= s < 2 * g.n_edges:
        raise IndexError("no such slot")
    return s % g.n_edges, s // g.n_edges


# -- vertex conditions -------------------------------------------------------

@dataclass(frozen=True)
class VertexConditions:
    """Projector ``P`` and self-adjoint ``L`` on ``ker P`` acting on boundary values."""

    P: np.ndarray
    L: np.ndarray
    label: str = field(default="custom", compare=False)

    def __post_init__(self):
        P = np.array(self.P, dtype=complex)
        L = np.array(self.L, dtype=complex)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape != L.shape or P.shape[0] % 2:
            raise GraphError(f"P and L must be equal square 2E x 2E matrices, got {P.shape}, {L.shape}")
        P.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "L", L)

    @property
    def dim(self) -> int:
        return self.P.shape[0]

    @property
    def Q(self) -> np.ndarray:
        return np.eye(self.dim) - self.P

    def kernel_basis(self) -> np.ndarray:
        """Orthonormal columns spanning ``ker P``."""
        w, v = np.linalg.eigh((self.P + self.P.conj().T) / 2)
        return v[:, w < 0.5]

    def restricted_L(self) -> np.ndarray:
        V = self.kernel_basis()
        return V.conj().T @ self.L @ V

    def l_max(self) -> float:
        """Largest eigenvalue of ``L`` on ``ker P`` (``-inf`` when ``ker P = 0``)."""
        H = self.restricted_L()
        if H.size == 0:
            return -np.inf
        return float(np.linalg.eigvalsh(H)[-1])

    def n_plus_L(self) -> int:
        H = self.restricted_L()
        if H.size == 0:
            return 0
        return int(np.sum(np.linalg.eigvalsh(H) > TOL))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.round(self.P, 12).tobytes())
        h.update(np.round(self.L, 12).tobytes())
        return h.hexdigest()[:16]


@dataclass
class ValidationReport:
    ok: bool
    failures: list[str]
    defects: dict[str, float]

    def __bool__(self) -> bool:
        return self.ok


def validate_conditions(c: VertexConditions, tol: float = TOL) -> ValidationReport:
    P, L = c.P, c.L
    defects = {
        "P = P†": float(np.linalg.norm(P - P.conj().T)),
        "P² = P": float(np.linalg.norm(P @ P - P)),
        "L = L†": float(np.linalg.norm(L - L.conj().T)),
        "PL = 0": float(np.linalg.norm(P @ L)),
        "LP = 0": float(np.linalg.norm(L @ P)),
    }
    failures = [f"{name} failed" for name, d in defects.items() if d > tol]
    return ValidationReport(not failures, failures, defects)


def require_valid(c: VertexConditions, g: MetricGraph | None = None) -> None:
    if g is not None and c.dim != 2 * g.n_edges:
        raise GraphError(f"conditions act on {c.dim} slots, graph has {2 * g.n_edges}")
    report = validate_conditions(c)
    if not report:
        raise GraphError("invalid vertex conditions: " + ", ".join(report.failures))


def vertex_conditions(g: MetricGraph, dirichlet: Iterable = (),
                      delta: Mapping[Hashable, float] | None = None) -> VertexConditions:
    """Continuity plus current conservation at every vertex.

    Vertices listed in ``dirichlet`` get ``f = 0`` on all incident slots. A vertex
    ``v`` in ``delta`` carries the form term ``-gamma |f(v)|^2``, i.e. the sum of
    inward derivatives equals ``-gamma f(v)``; ``gamma > 0`` is attractive.
    """
    n = 2 * g.n_edges
    delta = dict(delta or {})
    dirichlet = set(dirichlet)
    unknown = (dirichlet | set(delta)) - set(g.vertices)
    if unknown:
        raise GraphError(f"unknown vertices {sorted(map(repr, unknown))}")
    Q = np.zeros((n, n), dtype=complex)
    L = np.zeros((n, n), dtype=complex)
    for v, slots in g.vertex_slots().items():
        if v in dirichlet or not slots:
            continue
        u = np.zeros(n)
        u[slots] = 1.0 / np.sqrt(len(slots))
        Q += np.outer(u, u)
        gamma = delta.get(v, 0.0)
        if gamma:
            L += (gamma / len(slots)) * np.outer(u, u)
    label = "kirchhoff"
    if dirichlet or delta:
        label += f"(dirichlet={sorted(map(repr, dirichlet))}, delta={ {repr(k): v for k, v in delta.items()} })"
    return VertexConditions(np.eye(n) - Q, L, label)


def standard_conditions(g: MetricGraph, kind: str, c: float | None = None) -> VertexConditions:
    """``dirichlet``, ``neumann``, ``robin`` (with constant ``c``) or ``kirchhoff``."""
    n = 2 * g.n_edges
    kind = kind.lower()
    if kind == "dirichlet":
        return VertexConditions(np.eye(n), np.zeros((n, n)), "dirichlet")
    if kind == "neumann":
        return VertexConditions(np.zeros((n, n)), np.zeros((n, n)), "neumann")
    if kind == "robin":
        if c is None:
            raise GraphError("robin conditions need a constant c")
        return VertexConditions(np.zeros((n, n)), c * np.eye(n), f"robin({c})")
    if kind == "kirchhoff":
        return vertex_conditions(g)
    raise GraphError(f"unknown condition kind {kind!r}")


def robin(g: MetricGraph, coefficients: Sequence[float]) -> VertexConditions:
    """``P = 0`` and ``L = diag(coefficients)`` in slot order."""
    n = 2 * g.n_edges
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape != (n,):
        raise GraphError(f"need {n} Robin coefficients")
    return VertexConditions(np.zeros((n, n)), np.diag(coefficients),
                            f"robin({coefficients.tolist()})")


def m0_matrix(g: MetricGraph) -> np.ndarray:
    """Block matrix with ``(1/l_e) [[-1, 1], [1, -1]]`` on slots ``(e, e + E)``."""
    E = g.n_edges
    M = np.zeros((2 * E, 2 * E))
    inv = 1.0 / g.lengths
    idx = np.arange(E)
    M[idx, idx] = -inv
    M[idx + E, idx + E] = -inv
    M[idx, idx + E] = inv
    M[idx + E, idx] = inv
    return M


# -- JSON input --------------------------------------------------------------

def _complex_matrix(rows: Any, key: str) -> np.ndarray:
    try:
        out = []
        for row in rows:
            out.append([complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x)
                        for x in row])
        return np.array(out, dtype=complex)
    except (TypeError, ValueError, IndexError) as exc:
        raise GraphError(f"key {key!r}: entries must be numbers or [re, im] pairs") from exc


def _complex_json(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)]


def graph_from_dict(data: Mapping) -> tuple[MetricGraph, VertexConditions]:
    if not isinstance(data, Mapping):
        raise GraphError("top level must be an object")
    extra = set(data) - {"edges", "vertices", "conditions", "allow_disconnected"}
    if extra:
        raise GraphError(f"unknown key {sorted(extra)[0]!r}")
    if "edges" not in data:
        raise GraphError("missing key 'edges'")
    edges = []
    for i, item in enumerate(data["edges"]):
        if not isinstance(item, Mapping):
            raise GraphError(f"edges[{i}]: must be an object")
        extra = set(item) - {"id", "length", "from", "to"}
        if extra:
            raise GraphError(f"edges[{i}]: unknown key {sorted(extra)[0]!r}")
        for key in ("length", "from", "to"):
            if key not in item:
                raise GraphError(f"edges[{i}]: missing key {key!r}")
        try:
            length = float(item["length"])
        except (TypeError, ValueError) as exc:
            raise GraphError(f"edges[{i}]: key 'length' is not a number") from exc
        edges.append(Edge(item.get("id", i), length, item["from"], item["to"]))
    g = MetricGraph(edges, data.get("vertices"),
                    allow_disconnected=bool(data.get("allow_disconnected", False)))
    if "conditions" not in data:
        raise GraphError("missing key 'conditions'")
    cond = data["conditions"]
    if not isinstance(cond, Mapping):
        raise GraphError("key 'conditions' must be an object")
    extra = set(cond) - {"kind", "params", "P", "L"}
    if extra:
        raise GraphError(f"conditions: unknown key {sorted(extra)[0]!r}")
    if "P" in cond or "L" in cond:
        for key in ("P", "L"):
            if key not in cond:
                raise GraphError(f"conditions: missing key {key!r}")
        c = VertexConditions(_complex_matrix(cond["P"], "P"), _complex_matrix(cond["L"], "L"))
    elif "kind" in cond:
        params = dict(cond.get("params", {}))
        kind = str(cond["kind"]).lower()
        if kind == "robin":
            if "c" in params:
                c = standard_conditions(g, "robin", float(params["c"]))
            elif "coefficients" in params:
                c = robin(g, params["coefficients"])
            else:
                raise GraphError("conditions.params: missing key 'c'")
        elif kind == "kirchhoff":
            c = vertex_conditions(g, params.get("dirichlet", ()),
                                  {k: float(v) for k, v in params.get("delta", {}).items()})
        else:
            c = standard_conditions(g, kind)
    else:
        raise GraphError("conditions: need 'kind' or explicit 'P' and 'L'")
    require_valid(c, g)
    return g, c


def graph_to_dict(g: MetricGraph, c: VertexConditions) -> dict:
    return {
        "edges": [{"id": e.id, "length": e.length, "from": e.start, "to": e.end} for e in g.edges],
        "conditions": {"P": _complex_json(c.P), "L": _complex_json(c.L)},
    }


def load_graph(path: str | Path) -> tuple[MetricGraph, VertexConditions]:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}: malformed JSON ({exc})") from exc
    return graph_from_dict(data)
