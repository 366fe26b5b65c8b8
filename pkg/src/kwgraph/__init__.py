"""Kazdan-Warner equation Lu = h e^u - c on finite connected weighted graphs.

Graph model and Laplacian in :mod:`kwgraph.graph_core`, eigendecompositions
and discrete functional inequalities in :mod:`kwgraph.spectral`, the three
regime solvers in :mod:`kwgraph.solvers`, sharp solvability classification
and threshold search in :mod:`kwgraph.solvability`, and a brute force
cross-check in :mod:`kwgraph.oracle`.
"""

__version__ = "0.1.0"

from .errors import KWError, NoConvergence, NotSolvable
from .graph_core import (
    ProblemInstance,
    WeightedGraph,
    apply_laplacian,
    energy,
    graph_from_edges,
    load_graph,
    load_problem,
    validate_graph,
)
from .oracle import OracleResult, brute_force_solve
from .solvability import (
    SolvabilityVerdict,
    ThresholdEstimate,
    Verdict,
    classify,
    estimate_threshold,
)
from .solvers import (
    Method,
    SolveReport,
    monotone_solve,
    newton_solve,
    residual_floor,
    solve,
    solve_c_negative,
    solve_c_positive,
    solve_c_zero,
    verify_solution,
)
from .spectral import SpectralReport, eigen_decompose

__all__ = [
    "__version__",
    "KWError",
    "NoConvergence",
    "NotSolvable",
    "ProblemInstance",
    "WeightedGraph",
    "apply_laplacian",
    "energy",
    "graph_from_edges",
    "load_graph",
    "load_problem",
    "validate_graph",
    "OracleResult",
    "brute_force_solve",
    "SolvabilityVerdict",
    "ThresholdEstimate",
    "Verdict",
    "classify",
    "estimate_threshold",
    "Method",
    "SolveReport",
    "monotone_solve",
    "newton_solve",
    "residual_floor",
    "solve",
    "solve_c_negative",
    "solve_c_positive",
    "solve_c_zero",
    "verify_solution",
    "SpectralReport",
    "eigen_decompose",
]
