"""Graph validation, serialization, and the weighted Laplacian."""

import json

import numpy as np
import pytest

from kwgraph import (
    ProblemInstance,
    apply_laplacian,
    energy,
    graph_from_edges,
    load_graph,
    load_problem,
    validate_graph,
)
from kwgraph.errors import (
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
from kwgraph.graph_core import (
    as_vertex_function,
    chain_energy_bound,
    energy_bilinear,
    graph_to_doc,
    inner_m,
    mean_m,
    neg_part,
    norm_m,
    pos_part,
    problem_from_doc,
    sup_norm,
)
from helpers import k2, random_connected_graph, triangle


def doc_of(vertices, edges, measure):
    return {"vertices": list(vertices),
            "measure": dict(measure),
            "edges": [{"u": u, "v": v, "w": w} for u, v, w in edges]}


def test_valid_graph_builds_and_canonicalizes():
    g = validate_graph(doc_of(
        ["b", "a", "c"],
        [("b", "a", 2.0), ("c", "b", 0.5)],
        {"a": 1.0, "b": 2.0, "c": 0.25}))
    assert g.vertices == ("b", "a", "c")
    assert g.n == 3
    # edges stored once per pair with i < j in listing order
    assert g.edge_index.tolist() == [[0, 1], [0, 2]]
    assert g.edge_weight.tolist() == [2.0, 0.5]
    assert g.total_measure == pytest.approx(3.25)
    assert g.weighted_degree.tolist() == [2.5, 2.0, 0.5]


def test_exact_repeat_edge_collapses_but_conflict_raises():
    g = validate_graph(doc_of(
        ["a", "b"], [("a", "b", 1.5), ("b", "a", 1.5)], {"a": 1, "b": 1}))
    assert len(g.edge_weight) == 1
    with pytest.raises(SymmetryViolation):
        validate_graph(doc_of(
            ["a", "b"], [("a", "b", 1.5), ("b", "a", 2.0)], {"a": 1, "b": 1}))


def test_structural_rejections():
    good_m = {"a": 1, "b": 1}
    with pytest.raises(DuplicateVertex):
        validate_graph(doc_of(["a", "a"], [], {"a": 1}))
    with pytest.raises(SelfLoop):
        validate_graph(doc_of(["a", "b"], [("a", "a", 1.0)], good_m))
    with pytest.raises(NonPositiveWeight):
        validate_graph(doc_of(["a", "b"], [("a", "b", -1.0)], good_m))
    with pytest.raises(NonPositiveWeight):
        validate_graph(doc_of(["a", "b"], [("a", "b", 0.0)], good_m))
    with pytest.raises(NonPositiveMeasure):
        validate_graph(doc_of(["a", "b"], [("a", "b", 1.0)], {"a": 1, "b": 0}))
    with pytest.raises(Disconnected):
        validate_graph(doc_of(["a", "b", "c"], [("a", "b", 1.0)],
                              {"a": 1, "b": 1, "c": 1}))
    with pytest.raises(GraphFormatError):
        validate_graph(doc_of(["a", "b"], [("a", "zz", 1.0)], good_m))
    with pytest.raises(GraphFormatError):
        validate_graph({"vertices": ["a"], "measure": {"a": 1}})
    with pytest.raises(GraphFormatError):
        validate_graph(doc_of([], [], {}))
    with pytest.raises(GraphFormatError):
        validate_graph(doc_of(["a", "b"], [("a", "b", 1.0)], {"a": 1}))


def test_single_vertex_graph_is_connected():
    g = graph_from_edges(["only"], [], {"only": 3.0})
    assert g.n == 1
    assert len(g.edge_weight) == 0
    assert apply_laplacian(g, [5.0]).tolist() == [0.0]


def test_doc_round_trip():
    g = graph_from_edges(["x", "y", "z"],
                         [("x", "y", 1.25), ("y", "z", 0.75)],
                         {"x": 1.0, "y": 2.0, "z": 0.5})
    g2 = validate_graph(graph_to_doc(g))
    assert g2.vertices == g.vertices
    assert np.array_equal(g2.edge_index, g.edge_index)
    assert np.array_equal(g2.edge_weight, g.edge_weight)
    assert np.array_equal(g2.measure, g.measure)


def test_load_graph_and_problem_files(tmp_path):
    gpath = tmp_path / "g.json"
    ppath = tmp_path / "p.json"
    gpath.write_text(json.dumps(doc_of(
        ["a", "b"], [("a", "b", 1.0)], {"a": 1, "b": 2})))
    ppath.write_text(json.dumps({"h": {"a": 1.0, "b": -2.0}, "c": 0.5}))
    g = load_graph(gpath)
    p = load_problem(g, ppath)
    assert p.h.tolist() == [1.0, -2.0]
    assert p.c == 0.5

    gpath.write_text("{ not json")
    with pytest.raises(GraphFormatError):
        load_graph(gpath)
    ppath.write_text("[1, 2")
    with pytest.raises(ProblemFormatError):
        load_problem(g, ppath)


def test_problem_requires_exact_h_coverage():
    g = k2()
    with pytest.raises(ProblemFormatError):
        problem_from_doc(g, {"h": {"a": 1.0}, "c": 0.0})
    with pytest.raises(ProblemFormatError):
        problem_from_doc(g, {"h": {"a": 1.0, "b": 1.0, "zz": 1.0}, "c": 0.0})
    with pytest.raises(ProblemFormatError):
        problem_from_doc(g, {"h": {"a": 1.0, "b": "x"}, "c": 0.0})
    with pytest.raises(ProblemFormatError):
        problem_from_doc(g, {"h": {"a": 1.0, "b": 1.0}})


def test_problem_instance_invariants():
    g = k2()
    with pytest.raises(ZeroH):
        ProblemInstance(graph=g, h=np.zeros(2), c=0.0)
    with pytest.raises(ProblemFormatError):
        ProblemInstance(graph=g, h=np.array([1.0, -1.0]), c=float("nan"))
    p = ProblemInstance(graph=g, h=np.array([1.0, -1.0]), c=0.0)
    with pytest.raises(ValueError):
        p.h[0] = 5.0  # frozen array


def test_as_vertex_function_rejects_bad_shapes():
    g = triangle()
    with pytest.raises(DimensionMismatch):
        as_vertex_function(g, [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        as_vertex_function(g, [1.0, np.inf, 0.0])


def test_laplacian_matches_dense_definition():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 20))
        g = random_connected_graph(rng, n)
        u = rng.normal(0, 2, n)
        dense = np.zeros((n, n))
        for (i, j), w in zip(g.edge_index, g.edge_weight):
            dense[i, j] -= w
            dense[j, i] -= w
            dense[i, i] += w
            dense[j, j] += w
        expected = dense @ u / g.measure
        assert np.allclose(apply_laplacian(g, u), expected, atol=1e-12)


def test_laplacian_annihilates_constants_and_sums_to_zero():
    rng = np.random.default_rng(1)
    g = random_connected_graph(rng, 12)
    assert sup_norm(apply_laplacian(g, np.full(12, 3.7))) <= 1e-12
    u = rng.normal(0, 1, 12)
    # <Lu, 1> = 0: the Laplacian's range is mean-zero
    assert abs(inner_m(g, apply_laplacian(g, u), np.ones(12))) <= 1e-12


def test_greens_identity():
    # <Lu, v> = (1/2) sum b(x,y)(u(x)-u(y))(v(x)-v(y)) = energy_bilinear(u, v)
    rng = np.random.default_rng(2)
    for _ in range(30):
        n = int(rng.integers(2, 25))
        g = random_connected_graph(rng, n)
        u = rng.normal(0, 2, n)
        v = rng.normal(0, 2, n)
        lhs = inner_m(g, apply_laplacian(g, u), v)
        rhs = energy_bilinear(g, u, v)
        assert abs(lhs - rhs) <= 1e-9 * (1 + abs(rhs))


def test_energy_is_the_diagonal_of_the_bilinear_form():
    rng = np.random.default_rng(3)
    g = random_connected_graph(rng, 10)
    u = rng.normal(0, 1, 10)
    v = rng.normal(0, 1, 10)
    assert energy(g, u) == pytest.approx(energy_bilinear(g, u, u))
    # polarization
    q = 0.25 * (energy(g, u + v) - energy(g, u - v))
    assert q == pytest.approx(energy_bilinear(g, u, v), abs=1e-10)
    assert energy(g, np.full(10, 2.0)) == 0.0


def test_weighted_norms_and_parts():
    g = k2()  # measures (1, 1)
    u = np.array([3.0, -4.0])
    assert inner_m(g, u, u) == pytest.approx(25.0)
    assert norm_m(g, u) == pytest.approx(5.0)
    assert mean_m(g, u) == pytest.approx(-0.5)
    assert sup_norm(u) == 4.0
    assert pos_part(u).tolist() == [3.0, 0.0]
    assert neg_part(u).tolist() == [0.0, 4.0]
    assert np.array_equal(pos_part(u) - neg_part(u), u)


def test_chain_energy_bound_for_contractions():
    rng = np.random.default_rng(4)
    for _ in range(10):
        g = random_connected_graph(rng, int(rng.integers(2, 15)))
        u = rng.normal(0, 2, g.n)
        assert chain_energy_bound(g, u, np.tanh, 1.0)
        assert chain_energy_bound(g, u, lambda x: 0.5 * x, 0.25)
