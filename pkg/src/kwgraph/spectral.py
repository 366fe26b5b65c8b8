"""Spectral decomposition, discrete functional inequalities, and linear solves.

Everything here works with the dense symmetric form of the Laplacian.  With
M = diag(m) and A the weighted adjacency Laplacian (A = D - B, one row per
vertex), the operator is L = M^{-1} A and the eigenproblem A phi = lam M phi
is solved through the symmetric matrix S = M^{-1/2} A M^{-1/2}.  Dense
decompositions are intended for n up to about 2000.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.special

from .errors import (
    GraphTooLarge,
    NonPositiveShift,
    NotMeanZero,
    NumericalFailure,
)
from .graph_core import (
    WeightedGraph,
    apply_laplacian,
    as_vertex_function,
    energy,
    inner_m,
    mean_m,
    norm_m,
)

__all__ = [
    "SpectralReport",
    "laplacian_matrix",
    "eigen_decompose",
    "poincare_check",
    "embedding_constant",
    "mean_zero_embedding_constant",
    "trudinger_moser_constant",
    "trudinger_moser_check",
    "solve_on_complement",
    "solve_shifted",
    "shifted_solver",
    "maximum_principle_check",
]

MAX_DENSE_N = 2000


def _check_size(g: WeightedGraph) -> None:
    if g.n > MAX_DENSE_N:
        raise GraphTooLarge(
            f"dense spectral routines support at most {MAX_DENSE_N} vertices, "
            f"got {g.n}")


def laplacian_matrix(g: WeightedGraph) -> np.ndarray:
    """Dense matrix A with (Au)(x) = sum_y b(x,y)(u(x) - u(y)) = m(x) (Lu)(x)."""
    _check_size(g)
    a = np.zeros((g.n, g.n))
    for (i, j), w in zip(g.edge_index, g.edge_weight):
        a[i, j] -= w
        a[j, i] -= w
        a[i, i] += w
        a[j, j] += w
    return a


@dataclass(frozen=True)
class SpectralReport:
    """Eigenvalues of L sorted ascending with m-orthonormal eigenvectors.

    ``eigenvectors[:, k]`` belongs to ``eigenvalues[k]``;
    ``poincare_constant`` equals 1/lambda_2 and is the best constant in
    ||u - mean(u)||^2 <= C Q(u); ``embedding_constant`` is the best C in
    sup |u| <= C (Q(u) + ||u||^2)^(1/2).
    """

    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    poincare_constant: float
    embedding_constant: float


def eigen_decompose(g: WeightedGraph) -> SpectralReport:
    """Solve A phi = lam M phi by symmetrizing with M^(1/2).

    The first eigenvalue of a connected graph is 0 with constant
    eigenvector; both facts are verified a posteriori along with the
    eigen residuals.
    """
    _check_size(g)
    a = laplacian_matrix(g)
    root_m = np.sqrt(g.measure)
    s = a / np.outer(root_m, root_m)
    s = 0.5 * (s + s.T)
    lam, y = scipy.linalg.eigh(s)
    phi = y / root_m[:, None]

    # deterministic sign: largest-magnitude entry of each eigenvector positive
    for k in range(g.n):
        idx = int(np.argmax(np.abs(phi[:, k])))
        if phi[idx, k] < 0:
            phi[:, k] = -phi[:, k]

    if abs(lam[0]) > 1e-9:
        raise NumericalFailure(f"lowest eigenvalue should vanish, got {lam[0]!r}")
    if g.n >= 2 and lam[1] <= 1e-12:
        raise NumericalFailure(
            f"spectral gap collapsed (lambda_2 = {lam[1]!r}) on a connected graph")
    for k in range(g.n):
        resid = norm_m(g, apply_laplacian(g, phi[:, k]) - lam[k] * phi[:, k])
        if resid > 1e-8:
            raise NumericalFailure(
                f"eigenpair {k} residual {resid:.3e} exceeds 1e-8")

    poincare = 1.0 / float(lam[1]) if g.n >= 2 else np.inf
    lam.setflags(write=False)
    phi.setflags(write=False)
    return SpectralReport(
        eigenvalues=lam,
        eigenvectors=phi,
        poincare_constant=poincare,
        embedding_constant=embedding_constant(g),
    )


def poincare_check(g: WeightedGraph, u, report: SpectralReport | None = None,
                   slack: float = 1e-10) -> bool:
    """Verify ||u - mean(u)||^2 <= (1/lambda_2) Q(u) on a concrete u."""
    if report is None:
        report = eigen_decompose(g)
    u = as_vertex_function(g, u)
    w = u - mean_m(g, u)
    lhs = inner_m(g, w, w)
    rhs = report.poincare_constant * energy(g, u)
    return lhs <= rhs + slack * (1.0 + abs(rhs))


def embedding_constant(g: WeightedGraph) -> float:
    """Best constant in sup_x |u(x)| <= C (Q(u) + ||u||^2)^(1/2).

    By duality C^2 = max_x w_x(x) where (A + M) w_x = e_x, so C is read off
    the diagonal of (A + M)^{-1}.
    """
    _check_size(g)
    b = laplacian_matrix(g) + np.diag(g.measure)
    try:
        cho = scipy.linalg.cho_factor(b)
        inv = scipy.linalg.cho_solve(cho, np.eye(g.n))
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailure(f"form matrix not positive definite: {exc}") from exc
    return float(np.sqrt(np.max(np.diag(inv))))


def mean_zero_embedding_constant(g: WeightedGraph,
                                 report: SpectralReport | None = None) -> float:
    """Best constant in sup |u| <= C (Q(u) + ||u||^2)^(1/2) over mean-zero u.

    Expanding u in the m-orthonormal eigenbasis above the kernel gives
    C^2 = max_x sum_{k>=2} phi_k(x)^2 / (lambda_k + 1).
    """
    if report is None:
        report = eigen_decompose(g)
    if g.n == 1:
        return 0.0
    phi = report.eigenvectors[:, 1:]
    lam = report.eigenvalues[1:]
    return float(np.sqrt(np.max((phi * phi / (lam + 1.0)).sum(axis=1))))


def trudinger_moser_constant(g: WeightedGraph,
                             report: SpectralReport | None = None) -> float:
    """Constant C' with (u(x) - mean(u))^2 <= C' Q(u) for all u and x.

    Combines the mean-zero embedding with the Poincare inequality:
    ||u - mean||_Q^2 <= (1 + 1/lambda_2) Q(u).
    """
    if report is None:
        report = eigen_decompose(g)
    if g.n == 1:
        return 0.0
    c0 = mean_zero_embedding_constant(g, report)
    return c0 * c0 * (1.0 + report.poincare_constant)


def trudinger_moser_check(g: WeightedGraph, u, beta: float,
                          report: SpectralReport | None = None,
                          slack: float = 1e-10) -> bool:
    """Verify sum_x exp(beta (u - mean)^2) m(x) <= m(X) exp(C' |beta| Q(u)).

    Compared in log space so large exponents cannot overflow.
    """
    if report is None:
        report = eigen_decompose(g)
    u = as_vertex_function(g, u)
    w = u - mean_m(g, u)
    cprime = trudinger_moser_constant(g, report)
    log_lhs = float(scipy.special.logsumexp(beta * w * w + np.log(g.measure)))
    log_rhs = np.log(g.total_measure) + cprime * abs(beta) * energy(g, u)
    return log_lhs <= log_rhs + slack * (1.0 + abs(log_rhs))


def solve_on_complement(g: WeightedGraph, f) -> np.ndarray:
    """Solve Lu = f with mean(u) = 0 for mean-zero f.

    The kernel of L on a connected graph is spanned by the constants, so the
    system is solved on their orthogonal complement by the rank-one
    augmentation A + (m m^T)/m(X), which is positive definite.
    """
    _check_size(g)
    f = as_vertex_function(g, f)
    scale = norm_m(g, f)
    if scale == 0.0:
        return np.zeros(g.n)
    fbar = mean_m(g, f)
    if abs(fbar) * g.total_measure ** 0.5 > 1e-10 * scale:
        raise NotMeanZero(
            f"right hand side has weighted mean {fbar!r}; Lu = f needs mean zero")
    f0 = f - fbar
    m = g.measure
    b = laplacian_matrix(g) + np.outer(m, m) / g.total_measure
    try:
        cho = scipy.linalg.cho_factor(b)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailure(f"augmented Laplacian not SPD: {exc}") from exc
    u = scipy.linalg.cho_solve(cho, m * f0)
    u -= mean_m(g, u)
    resid = norm_m(g, apply_laplacian(g, u) - f0)
    if resid > 1e-9 * scale:
        raise NumericalFailure(f"complement solve residual {resid:.3e} too large")
    return u


def shifted_solver(g: WeightedGraph, k):
    """Factor A + M diag(k) once; returns a solver for (L + k) u = f.

    k >= 0 with k > 0 somewhere makes the operator bijective.
    """
    _check_size(g)
    k = as_vertex_function(g, k)
    if np.any(k < 0) or not np.any(k > 0):
        raise NonPositiveShift(
            "shift k must be nonnegative and strictly positive somewhere")
    b = laplacian_matrix(g) + np.diag(g.measure * k)
    try:
        cho = scipy.linalg.cho_factor(b)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailure(f"shifted operator not SPD: {exc}") from exc

    def solve(f: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(cho, g.measure * f)

    return solve


def solve_shifted(g: WeightedGraph, k, f) -> np.ndarray:
    """Solve (L + k) u = f for a nonnegative shift k positive somewhere."""
    k = as_vertex_function(g, k)
    f = as_vertex_function(g, f)
    u = shifted_solver(g, k)(f)
    resid = norm_m(g, apply_laplacian(g, u) + k * u - f)
    if resid > 1e-9 * (norm_m(g, f) + 1.0):
        raise NumericalFailure(f"shifted solve residual {resid:.3e} too large")
    return u


def maximum_principle_check(g: WeightedGraph, k, u,
                            premise_tol: float = 1e-12,
                            conclusion_tol: float = 1e-9) -> bool:
    """Truth of the implication ((L + k) u <= 0 pointwise) => (u <= 0 pointwise).

    Vacuously true when the premise fails.
    """
    k = as_vertex_function(g, k)
    u = as_vertex_function(g, u)
    lhs = apply_laplacian(g, u) + k * u
    if np.max(lhs) > premise_tol:
        return True
    return bool(np.max(u) <= conclusion_tol)
