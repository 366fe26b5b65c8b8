"""Brute force enumeration on one, two, and three vertices."""

import math

import numpy as np
import pytest

from kwgraph import ProblemInstance, brute_force_solve
from kwgraph.errors import BoxTooSmall, TooManyVertices
from kwgraph.graph_core import apply_laplacian, graph_from_edges
from kwgraph.oracle import single_vertex_root
from helpers import k2, star3, triangle


def residual(p, u):
    return float(np.max(np.abs(
        apply_laplacian(p.graph, u) + p.c - p.h * np.exp(u))))


def test_single_vertex_closed_form():
    assert single_vertex_root(2.0, 3.0) == pytest.approx(math.log(1.5))
    assert single_vertex_root(-1.5, -2.0) == pytest.approx(math.log(4.0 / 3.0))
    assert single_vertex_root(1.0, -1.0) is None
    assert single_vertex_root(-1.0, 1.0) is None
    assert single_vertex_root(0.0, 1.0) is None
    assert single_vertex_root(1.0, 0.0) is None


def test_single_vertex_agrees_with_the_grid():
    g = graph_from_edges(["a"], [], {"a": 1.5})
    p = ProblemInstance(graph=g, h=np.array([2.0]), c=3.0)
    res = brute_force_solve(p, (-4.0, 4.0))
    assert len(res.roots) == 1
    assert res.roots[0][0] == pytest.approx(math.log(1.5), abs=1e-10)
    none = brute_force_solve(
        ProblemInstance(graph=g, h=np.array([2.0]), c=-3.0), (-4.0, 4.0))
    assert none.roots == ()


def test_k2_c_zero_has_the_known_root():
    p = ProblemInstance(graph=k2(), h=np.array([1.0, -2.0]), c=0.0)
    res = brute_force_solve(p, (-8.0, 3.0))
    expected = np.array([math.log(math.log(2.0)), math.log(math.log(2.0) / 2.0)])
    assert len(res.roots) == 1
    assert np.max(np.abs(res.roots[0] - expected)) <= 1e-9


def test_k2_negative_c_root_pair_appears_and_vanishes():
    # just above the threshold two roots coexist; far below there are none
    h = np.array([1.0, -2.0])
    two = brute_force_solve(
        ProblemInstance(graph=k2(), h=h, c=-0.05), (-9.0, 3.0))
    assert len(two.roots) == 2
    gone = brute_force_solve(
        ProblemInstance(graph=k2(), h=h, c=-0.1), (-9.0, 3.0))
    assert gone.roots == ()
    for root in two.roots:
        assert residual(ProblemInstance(graph=k2(), h=h, c=-0.05),
                        root) <= 1e-10


def test_roots_are_sorted_verified_and_distinct():
    p = ProblemInstance(graph=triangle(), h=np.array([1.0, -1.0, -2.0]), c=0.0)
    res = brute_force_solve(p, (-9.0, 3.0), grid=120)
    assert len(res.roots) >= 1
    for root in res.roots:
        assert residual(p, root) <= 1e-10
    as_tuples = [tuple(r) for r in res.roots]
    assert as_tuples == sorted(as_tuples)
    for i in range(len(res.roots)):
        for j in range(i + 1, len(res.roots)):
            assert np.max(np.abs(res.roots[i] - res.roots[j])) > 1e-6


def test_per_vertex_boxes():
    p = ProblemInstance(graph=k2(), h=np.array([1.0, -2.0]), c=0.0)
    res = brute_force_solve(p, [(-3.0, 2.0), (-4.0, 1.0)], grid=100)
    assert len(res.roots) == 1
    assert res.search_box == ((-3.0, 2.0), (-4.0, 1.0))


def test_box_too_small_is_detected():
    g = graph_from_edges(["a"], [], {"a": 1.0})
    p = ProblemInstance(graph=g, h=np.array([1.0]), c=1.0)  # root at 0
    with pytest.raises(BoxTooSmall):
        brute_force_solve(p, (-0.05, 4.0), grid=50)


def test_input_validation():
    with pytest.raises(TooManyVertices):
        brute_force_solve(
            ProblemInstance(graph=star3(), h=np.ones(4), c=1.0), (-2.0, 2.0))
    p = ProblemInstance(graph=k2(), h=np.array([1.0, -2.0]), c=0.0)
    with pytest.raises(ValueError):
        brute_force_solve(p, (-2.0, 2.0), grid=4)
    with pytest.raises(ValueError):
        brute_force_solve(p, (2.0, -2.0))
    with pytest.raises(ValueError):
        brute_force_solve(p, [(-2.0, 2.0)])
