"""Shared generators and small fixture graphs for the test suite."""

import numpy as np

from kwgraph import graph_from_edges


def random_connected_graph(rng, n, w_range=(0.5, 2.0), m_range=(0.5, 2.0)):
    """Random connected graph on n vertices: a random spanning tree plus up
    to n extra edges, with weights and measures drawn from the given ranges."""
    names = [f"v{i}" for i in range(n)]
    edges = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append((names[i], names[j], float(rng.uniform(*w_range))))
    have = {(min(names.index(u), names.index(v)), max(names.index(u), names.index(v)))
            for u, v, _ in edges}
    for _ in range(n):
        i, j = sorted(rng.integers(0, n, 2).tolist())
        if i != j and (i, j) not in have:
            edges.append((names[i], names[j], float(rng.uniform(*w_range))))
            have.add((i, j))
    measure = {nm: float(rng.uniform(*m_range)) for nm in names}
    return graph_from_edges(names, edges, measure)


def mean_m(g, v):
    return float(np.dot(np.asarray(v, float), g.measure) / g.total_measure)


def sign_changing_h(rng, g, scale=2.0, margin=0.05):
    """h with weighted mean < -margin and a positive entry > margin."""
    n = g.n
    while True:
        h = rng.uniform(-scale, scale, n)
        h[int(rng.integers(0, n))] = rng.uniform(scale / 4, scale)
        if mean_m(g, h) < -margin and float(np.max(h)) > margin:
            return h


def k2():
    return graph_from_edges(["a", "b"], [("a", "b", 1.0)], 1.0)


def triangle():
    return graph_from_edges(
        ["a", "b", "c"],
        [("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)], 1.0)


def path3():
    return graph_from_edges(
        ["a", "b", "c"], [("a", "b", 1.0), ("b", "c", 1.0)], 1.0)


def star3():
    """Star with three leaves, unit weights and measures."""
    return graph_from_edges(
        ["hub", "l1", "l2", "l3"],
        [("hub", "l1", 1.0), ("hub", "l2", 1.0), ("hub", "l3", 1.0)], 1.0)
