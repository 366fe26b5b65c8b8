"""Finite connected weighted graphs and the weighted Laplacian.

A graph is a triple (X, b, m): a finite vertex set X, a symmetric edge
weight b with zero diagonal, and a strictly positive vertex measure m.
The Laplacian acts on vertex functions by

    Lu(x) = (1/m(x)) * sum_y b(x, y) * (u(x) - u(y))

and the associated energy form is Q(u) = (1/2) sum_{x,y} b(x,y) (u(x)-u(y))^2.
Vertex functions are plain float64 numpy arrays aligned with ``g.vertices``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    Disconnected,
    DuplicateVertex,
    GraphFormatError,
    NonPositiveMeasure,
    NonPositiveWeight,
    ProblemFormatError,
    SelfLoop,
    SymmetryViolation,
    ZeroH,
)

__all__ = [
    "WeightedGraph",
    "ProblemInstance",
    "validate_graph",
    "graph_from_edges",
    "graph_to_doc",
    "load_graph",
    "problem_from_doc",
    "load_problem",
    "as_vertex_function",
    "apply_laplacian",
    "energy",
    "energy_bilinear",
    "inner_m",
    "norm_m",
    "mean_m",
    "sup_norm",
    "pos_part",
    "neg_part",
    "chain_energy_bound",
]


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    a = np.array(values, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WeightedGraph:
    """Validated connected weighted graph.

    Edges are stored once per unordered pair, with ``edge_index[e] = (i, j)``,
    ``i < j``, sorted lexicographically, and ``edge_weight[e] = b(i, j) > 0``.
    Instances should be built through :func:`validate_graph` or
    :func:`graph_from_edges`, which enforce all structural invariants.
    """

    vertices: tuple[str, ...]
    edge_index: np.ndarray = field(repr=False)
    edge_weight: np.ndarray = field(repr=False)
    measure: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @cached_property
    def index(self) -> Mapping[str, int]:
        return {name: i for i, name in enumerate(self.vertices)}

    @cached_property
    def total_measure(self) -> float:
        return float(self.measure.sum())

    @cached_property
    def weighted_degree(self) -> np.ndarray:
        """deg(x) = sum_y b(x, y)."""
        deg = np.zeros(self.n)
        if len(self.edge_weight):
            np.add.at(deg, self.edge_index[:, 0], self.edge_weight)
            np.add.at(deg, self.edge_index[:, 1], self.edge_weight)
        deg.setflags(write=False)
        return deg


def _check_positive(values: np.ndarray, what, exc) -> None:
    bad = ~np.isfinite(values) | (values <= 0)
    if bad.any():
        k = int(np.argmax(bad))
        raise exc(f"{what} must be finite and positive, got {values[k]!r}",
                  position=k)


def _connected(n: int, edge_index: np.ndarray) -> bool:
    if n <= 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edge_index:
        adj[i].append(j)
        adj[j].append(i)
    seen = np.zeros(n, dtype=bool)
    queue = deque([0])
    seen[0] = True
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = True
                queue.append(y)
    return bool(seen.all())


def validate_graph(doc: Mapping) -> WeightedGraph:
    """Build a :class:`WeightedGraph` from a raw description, checking every invariant.

    ``doc`` has the shape of the on-disk format::

        {"vertices": [...names...],
         "measure": {name: m > 0, ...},
         "edges": [{"u": name, "v": name, "w": weight > 0}, ...]}

    Each undirected edge is listed once; repeating a pair with a conflicting
    weight raises :class:`SymmetryViolation`, an exact repeat collapses silently.
    """
    if not isinstance(doc, Mapping):
        raise GraphFormatError("graph description must be a mapping")
    for key in ("vertices", "measure", "edges"):
        if key not in doc:
            raise GraphFormatError(f"graph description missing {key!r}")

    names = [str(v) for v in doc["vertices"]]
    if not names:
        raise GraphFormatError("graph needs at least one vertex")
    seen: set[str] = set()
    for name in names:
        if name in seen:
            raise DuplicateVertex(f"vertex {name!r} listed twice")
        seen.add(name)
    index = {name: i for i, name in enumerate(names)}

    measure_doc = doc["measure"]
    if not isinstance(measure_doc, Mapping):
        raise GraphFormatError("measure must map vertex names to positive reals")
    missing = seen - set(map(str, measure_doc))
    if missing:
        raise GraphFormatError(f"measure missing vertices {sorted(missing)}")
    unknown = set(map(str, measure_doc)) - seen
    if unknown:
        raise GraphFormatError(f"measure lists unknown vertices {sorted(unknown)}")
    m = np.array([float(measure_doc[name]) for name in names])
    _check_positive(m, "vertex measure", NonPositiveMeasure)

    weights: dict[tuple[int, int], float] = {}
    for entry in doc["edges"]:
        try:
            u, v, w = str(entry["u"]), str(entry["v"]), float(entry["w"])
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphFormatError(f"bad edge entry {entry!r}") from exc
        if u not in index or v not in index:
            raise GraphFormatError(f"edge ({u!r}, {v!r}) references unknown vertex")
        if u == v:
            raise SelfLoop(f"self loop at vertex {u!r}")
        if not np.isfinite(w) or w <= 0:
            raise NonPositiveWeight(f"edge ({u!r}, {v!r}) has weight {w!r}")
        i, j = sorted((index[u], index[v]))
        old = weights.get((i, j))
        if old is not None and old != w:
            raise SymmetryViolation(
                f"edge ({u!r}, {v!r}) listed with conflicting weights {old} and {w}")
        weights[(i, j)] = w

    pairs = sorted(weights)
    edge_index = np.array(pairs, dtype=np.intp).reshape(len(pairs), 2)
    edge_weight = np.array([weights[p] for p in pairs])
    if not _connected(len(names), edge_index):
        raise Disconnected("graph is not connected")

    return WeightedGraph(
        vertices=tuple(names),
        edge_index=_frozen_array(edge_index, dtype=np.intp),
        edge_weight=_frozen_array(edge_weight),
        measure=_frozen_array(m),
    )


def graph_from_edges(vertices: Sequence[str],
                     edges: Iterable[tuple[str, str, float]],
                     measure: Mapping[str, float] | float = 1.0) -> WeightedGraph:
    """Convenience constructor; ``measure`` may be a constant."""
    if not isinstance(measure, Mapping):
        measure = {str(v): float(measure) for v in vertices}
    doc = {
        "vertices": list(vertices),
        "measure": dict(measure),
        "edges": [{"u": u, "v": v, "w": w} for u, v, w in edges],
    }
    return validate_graph(doc)


def graph_to_doc(g: WeightedGraph) -> dict:
    """Canonical serializable description; inverse of :func:`validate_graph`."""
    return {
        "vertices": list(g.vertices),
        "measure": {name: float(g.measure[i]) for i, name in enumerate(g.vertices)},
        "edges": [
            {"u": g.vertices[i], "v": g.vertices[j], "w": float(w)}
            for (i, j), w in zip(g.edge_index, g.edge_weight)
        ],
    }


def load_graph(path) -> WeightedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"graph file is not valid JSON: {exc}") from exc
    return validate_graph(doc)


# ---------------------------------------------------------------------------
# vertex functions

def as_vertex_function(g: WeightedGraph, values) -> np.ndarray:
    """Coerce ``values`` to a float64 array aligned with ``g.vertices``."""
    u = np.asarray(values, dtype=np.float64)
    if u.shape != (g.n,):
        raise DimensionMismatch(
            f"expected {g.n} values, got shape {u.shape}")
    if not np.isfinite(u).all():
        raise DimensionMismatch("vertex function has non-finite entries")
    return u


@dataclass(frozen=True)
class ProblemInstance:
    """One equation Lu = h e^u - c on a fixed graph."""

    graph: WeightedGraph
    h: np.ndarray = field(repr=False)
    c: float

    def __post_init__(self):
        h = as_vertex_function(self.graph, self.h)
        if not np.any(h != 0.0):
            raise ZeroH("h vanishes identically")
        c = float(self.c)
        if not np.isfinite(c):
            raise ProblemFormatError(f"c must be finite, got {self.c!r}")
        h = h.copy()
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "c", c)


def problem_from_doc(g: WeightedGraph, doc: Mapping) -> ProblemInstance:
    """Build a :class:`ProblemInstance` from the on-disk problem format.

    ``doc = {"h": {vertex: value, ...}, "c": real}`` where ``h`` covers the
    vertex set exactly.
    """
    if not isinstance(doc, Mapping) or "h" not in doc or "c" not in doc:
        raise ProblemFormatError("problem description needs keys 'h' and 'c'")
    h_doc = doc["h"]
    if not isinstance(h_doc, Mapping):
        raise ProblemFormatError("'h' must map vertex names to reals")
    keys = set(map(str, h_doc))
    names = set(g.vertices)
    if keys != names:
        raise ProblemFormatError(
            f"'h' must cover the vertex set exactly; "
            f"missing {sorted(names - keys)}, unknown {sorted(keys - names)}")
    try:
        h = np.array([float(h_doc[name]) for name in g.vertices])
        c = float(doc["c"])
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"non-numeric entry in problem: {exc}") from exc
    if not np.isfinite(h).all():
        raise ProblemFormatError("'h' has non-finite entries")
    return ProblemInstance(graph=g, h=h, c=c)


def load_problem(g: WeightedGraph, path) -> ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"problem file is not valid JSON: {exc}") from exc
    return problem_from_doc(g, doc)


# ---------------------------------------------------------------------------
# operations

def apply_laplacian(g: WeightedGraph, u) -> np.ndarray:
    """Lu(x) = (1/m(x)) sum_y b(x,y) (u(x) - u(y)); O(edges)."""
    u = as_vertex_function(g, u)
    out = np.zeros(g.n)
    if len(g.edge_weight):
        i, j = g.edge_index[:, 0], g.edge_index[:, 1]
        flow = g.edge_weight * (u[i] - u[j])
        out = (np.bincount(i, weights=flow, minlength=g.n)
               - np.bincount(j, weights=flow, minlength=g.n))
    return out / g.measure


def energy(g: WeightedGraph, u) -> float:
    """Q(u) = (1/2) sum_{x,y} b(x,y) (u(x)-u(y))^2, i.e. one term per edge."""
    u = as_vertex_function(g, u)
    if not len(g.edge_weight):
        return 0.0
    d = u[g.edge_index[:, 0]] - u[g.edge_index[:, 1]]
    return float(np.dot(g.edge_weight, d * d))


def energy_bilinear(g: WeightedGraph, u, v) -> float:
    u = as_vertex_function(g, u)
    v = as_vertex_function(g, v)
    if not len(g.edge_weight):
        return 0.0
    du = u[g.edge_index[:, 0]] - u[g.edge_index[:, 1]]
    dv = v[g.edge_index[:, 0]] - v[g.edge_index[:, 1]]
    return float(np.dot(g.edge_weight, du * dv))


def inner_m(g: WeightedGraph, u, v) -> float:
    """<u, v> = sum_x u(x) v(x) m(x)."""
    u = as_vertex_function(g, u)
    v = as_vertex_function(g, v)
    return float(np.dot(u * g.measure, v))


def norm_m(g: WeightedGraph, u) -> float:
    u = as_vertex_function(g, u)
    # rescale so u*u cannot underflow or overflow for extreme amplitudes
    s = float(np.max(np.abs(u)))
    if s == 0.0:
        return 0.0
    w = u / s
    return s * float(np.sqrt(np.dot(w * w, g.measure)))


def mean_m(g: WeightedGraph, u) -> float:
    """Weighted mean <u, 1>/m(X)."""
    u = as_vertex_function(g, u)
    return float(np.dot(u, g.measure) / g.total_measure)


def sup_norm(u) -> float:
    return float(np.max(np.abs(np.asarray(u, dtype=np.float64))))


def pos_part(u) -> np.ndarray:
    return np.maximum(np.asarray(u, dtype=np.float64), 0.0)


def neg_part(u) -> np.ndarray:
    """Negative part as a nonnegative function: u = pos_part(u) - neg_part(u)."""
    return np.maximum(-np.asarray(u, dtype=np.float64), 0.0)


def chain_energy_bound(g: WeightedGraph, u, f, lip_sq: float,
                       tol: float = 1e-12) -> bool:
    """Check Q(f(u)) <= lip_sq * Q(u) for a scalar map f applied pointwise.

    ``lip_sq`` is a bound for sup |f'|^2 on [min u, max u]; the inequality
    then follows edgewise from the mean value theorem.
    """
    u = as_vertex_function(g, u)
    fu = as_vertex_function(g, np.asarray([f(x) for x in u], dtype=np.float64))
    qu = energy(g, u)
    qfu = energy(g, fu)
    return qfu <= float(lip_sq) * qu + tol * (1.0 + qu)
