"""Brute force root enumeration for very small instances.

Independent of the solver stack on purpose: residuals are assembled from
the dense Laplacian directly and candidates are polished with a local
Newton loop written here, so agreement between this module and the solvers
is meaningful evidence rather than circular.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import BoxTooSmall, TooManyVertices
from .graph_core import ProblemInstance
from .spectral import laplacian_matrix

__all__ = ["OracleResult", "brute_force_solve", "single_vertex_root"]

MAX_ORACLE_N = 3
ROOT_TOL = 1e-10
DEDUPE_TOL = 1e-6


@dataclass(frozen=True)
class OracleResult:
    """All roots found in the box, sorted lexicographically.

    Every root satisfies sup |Lu + c - h e^u| <= 1e-10; distinct roots
    differ by more than 1e-6 in sup norm.
    """

    roots: tuple = field(repr=False)
    search_box: tuple
    grid_resolution: float


def single_vertex_root(h: float, c: float) -> float | None:
    """Root of h e^u = c on a single vertex: log(c/h) when c/h > 0, else none."""
    if h == 0 or c / h <= 0:
        return None
    return float(np.log(c / h))


def _polish(a: np.ndarray, m: np.ndarray, h: np.ndarray, c: float,
            x0: np.ndarray) -> np.ndarray | None:
    """Local damped Newton; returns the root or None."""
    u = x0.astype(np.float64).copy()
    for _ in range(80):
        with np.errstate(over="ignore"):
            eu = np.exp(u)
        f = a @ u / m + c - h * eu
        if not np.isfinite(f).all():
            return None
        r = float(np.max(np.abs(f)))
        if r <= 1e-13:
            break
        jac = a / m[:, None] - np.diag(h * eu)
        try:
            d = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            jac = jac + 1e-10 * np.eye(len(u))
            try:
                d = np.linalg.solve(jac, -f)
            except np.linalg.LinAlgError:
                return None
        if not np.isfinite(d).all():
            return None
        s = 1.0
        fn = float(np.linalg.norm(f))
        while s > 2.0 ** -30:
            cand = u + s * d
            with np.errstate(over="ignore"):
                f_new = a @ cand / m + c - h * np.exp(cand)
            if np.isfinite(f_new).all() and float(np.linalg.norm(f_new)) < fn:
                u = cand
                break
            s *= 0.5
        else:
            return None
    with np.errstate(over="ignore"):
        f = a @ u / m + c - h * np.exp(u)
    if np.isfinite(f).all() and float(np.max(np.abs(f))) <= ROOT_TOL:
        return u
    return None


def brute_force_solve(p: ProblemInstance, box, grid: int = 200) -> OracleResult:
    """Enumerate the roots of Lu + c = h e^u inside a coordinate box.

    ``box`` is either a single (lo, hi) pair applied to every vertex or a
    sequence of per-vertex pairs.  The residual is evaluated on a full
    ``grid``-point lattice; cells where every residual component changes
    sign are polished by Newton.  Roots landing within one grid cell of the
    box boundary raise BoxTooSmall, since further roots may hide outside.
    """
    g = p.graph
    n = g.n
    if n > MAX_ORACLE_N:
        raise TooManyVertices(
            f"brute force enumeration supports up to {MAX_ORACLE_N} vertices, "
            f"got {n}")
    if grid < 8:
        raise ValueError("grid must be at least 8")

    pairs = _normalize_box(box, n)
    a = laplacian_matrix(g)
    m = g.measure
    h = p.h
    axes = [np.linspace(lo, hi, grid) for lo, hi in pairs]
    spacing = [float(ax[1] - ax[0]) for ax in axes]

    mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
    corner = [slice(0, grid - 1), slice(1, grid)]
    candidate = np.ones((grid - 1,) * n, dtype=bool)
    for row in range(n):
        linear = sum(a[row, col] * mesh[col] for col in range(n)) / m[row]
        f_row = np.broadcast_to(
            linear + p.c - h[row] * np.exp(mesh[row]), (grid,) * n)
        sign = np.sign(f_row).astype(np.int8)
        views = [sign[tuple(corner[o] for o in offs)]
                 for offs in product((0, 1), repeat=n)]
        lo = np.minimum.reduce(views)
        hi = np.maximum.reduce(views)
        candidate &= (lo <= 0) & (hi >= 0)
        if not candidate.any():
            break

    roots: list[np.ndarray] = []
    for idx in np.argwhere(candidate):
        center = np.array([axes[d][i] + 0.5 * spacing[d]
                           for d, i in enumerate(idx)])
        root = _polish(a, m, h, p.c, center)
        if root is None:
            continue
        if any(root[d] < pairs[d][0] or root[d] > pairs[d][1] for d in range(n)):
            continue
        if any(np.max(np.abs(root - seen)) <= DEDUPE_TOL for seen in roots):
            continue
        roots.append(root)

    for root in roots:
        for d in range(n):
            if (root[d] < pairs[d][0] + spacing[d]
                    or root[d] > pairs[d][1] - spacing[d]):
                raise BoxTooSmall(
                    f"root near the box boundary in coordinate {d}; "
                    "enlarge the search box",
                    coordinate=d, value=float(root[d]))

    roots.sort(key=tuple)
    frozen = []
    for root in roots:
        root.setflags(write=False)
        frozen.append(root)
    return OracleResult(roots=tuple(frozen),
                        search_box=tuple((float(lo), float(hi)) for lo, hi in pairs),
                        grid_resolution=max(spacing))


def _normalize_box(box, n: int) -> list[tuple[float, float]]:
    box = list(box)
    if len(box) == 2 and np.isscalar(box[0]):
        pairs = [(float(box[0]), float(box[1]))] * n
    else:
        pairs = [(float(lo), float(hi)) for lo, hi in box]
        if len(pairs) != n:
            raise ValueError(f"box needs {n} (lo, hi) pairs, got {len(pairs)}")
    for lo, hi in pairs:
        if not lo < hi:
            raise ValueError(f"empty box interval ({lo}, {hi})")
    return pairs
