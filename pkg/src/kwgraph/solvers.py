"""Solvers for Lu = h e^u - c on a finite connected weighted graph.

Three regimes, three strategies:

* c = 0: minimize the energy Q(v) over the constraint set
  {<h e^v, 1> = 0, <v, 1> = 0}; the minimizer w solves 2Lw = lam h e^w + mu
  with lam > 0 and u = w + log(lam/2) solves the equation.
* c > 0: minimize J(v) = Q(v)/2 + c <v, 1> over {<h e^v, 1> = c m(X)};
  here the multiplier is forced to equal 1 and the minimizer itself solves
  the equation.
* c < 0: build a subsolution and a supersolution and run the classical
  monotone iteration u_{j+1} = (L + k)^{-1}(h e^{u_j} - c + k u_j) from the
  top of the bracket; where no supersolution is available fall back to
  damped Newton from several starts.

Constrained minimization uses an augmented Lagrangian with exact gradients
and Hessians and a damped Newton inner loop, followed by a Newton polish on
the original equation, so certified residuals do not depend on the
minimizer's loose tolerances.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.linalg

from .errors import (
    ConstructionFailed,
    MeanNotNegative,
    MonotonicityViolated,
    MultiplierSignError,
    MultiplierValueError,
    NoConvergence,
    NotSolvable,
    SingularJacobian,
)
from .graph_core import (
    ProblemInstance,
    apply_laplacian,
    as_vertex_function,
    energy,
    inner_m,
    mean_m,
    neg_part,
    norm_m,
    sup_norm,
)
from .spectral import (
    laplacian_matrix,
    shifted_solver,
    solve_on_complement,
    trudinger_moser_constant,
)

__all__ = [
    "Method",
    "SolveReport",
    "verify_solution",
    "newton_solve",
    "variational_start_c_zero",
    "variational_start_c_positive",
    "solve_c_zero",
    "solve_c_positive",
    "check_coercivity",
    "build_lower_solution",
    "UpperAnalysis",
    "upper_solution_analysis",
    "build_upper_solution",
    "SubSuperPair",
    "build_sub_super_pair",
    "monotone_solve",
    "solve_c_negative",
    "solve",
]

log = logging.getLogger(__name__)

STEP_FLOOR = 2.0 ** -40


def _solve_sym(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Symmetric-indefinite solve; conditioning warnings are expected while
    the Levenberg escalation probes shifts, and direction quality is judged
    by descent, not by the factorization's opinion."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        return scipy.linalg.solve(mat, rhs, assume_a="sym")


class Method(str, enum.Enum):
    VARIATIONAL_C0 = "VariationalC0"
    VARIATIONAL_CPOS = "VariationalCPos"
    MONOTONE_CNEG = "MonotoneCNeg"
    NEWTON = "Newton"


@dataclass(frozen=True)
class SolveReport:
    """A certified solution u together with how it was obtained.

    ``residual_inf`` is sup |Lu + c - h e^u| recomputed from u;
    ``integral_identity_gap`` is |<h e^u, 1> - c m(X)|, which vanishes for
    exact solutions by summing the equation against the measure.
    """

    u: np.ndarray = field(repr=False)
    residual_inf: float
    integral_identity_gap: float
    method: Method
    iterations: int
    multipliers: Mapping[str, float] | None = None
    trace: tuple = field(default=(), repr=False)


def verify_solution(p: ProblemInstance, u) -> tuple[float, float]:
    """Recompute (sup-norm residual, integral identity gap) for a candidate u."""
    g = p.graph
    u = as_vertex_function(g, u)
    with np.errstate(over="ignore"):
        he = p.h * np.exp(u)
    res = apply_laplacian(g, u) + p.c - he
    gap = abs(float(np.dot(he, g.measure)) - p.c * g.total_measure)
    return float(np.max(np.abs(res))), float(gap)


def residual_floor(p: ProblemInstance, u) -> float:
    """Evaluation noise floor of the residual at u.

    Recomputing Lu + c - h e^u rounds each row at a few eps times the sum
    of the magnitudes involved before cancellation, and u itself is only
    representable to eps * |u|, so no certificate below that level is
    meaningful; weak edges under strong forcing give genuine solutions of
    amplitude c m / b where this floor exceeds the usual tolerances.
    """
    g = p.graph
    u = as_vertex_function(g, u)
    with np.errstate(over="ignore"):
        scale = np.abs(p.c) + np.abs(p.h) * np.exp(u)
    if len(g.edge_weight):
        i, j = g.edge_index[:, 0], g.edge_index[:, 1]
        flow = g.edge_weight * (np.abs(u[i]) + np.abs(u[j]))
        scale = scale + (np.bincount(i, weights=flow, minlength=g.n)
                         + np.bincount(j, weights=flow, minlength=g.n)) / g.measure
    top = float(np.max(scale))
    if not math.isfinite(top):
        return 0.0
    return 32.0 * np.finfo(float).eps * top


def _finalize(p: ProblemInstance, u: np.ndarray, method: Method,
              iterations: int, tol: float, multipliers=None,
              trace=()) -> SolveReport:
    residual_inf, gap = verify_solution(p, u)
    if residual_inf > max(tol, residual_floor(p, u)):
        raise NoConvergence(
            f"final residual {residual_inf:.3e} exceeds tolerance {tol:.3e}",
            report=None, residual_inf=residual_inf)
    u = u.copy()
    u.setflags(write=False)
    return SolveReport(u=u, residual_inf=residual_inf,
                       integral_identity_gap=gap, method=method,
                       iterations=iterations, multipliers=multipliers,
                       trace=tuple(trace))


# ---------------------------------------------------------------------------
# damped Newton on the equation itself

def newton_solve(p: ProblemInstance, u_init=None, tol: float = 1e-10,
                 max_iter: int = 200, *, degenerate_guard: bool = True,
                 phase: str = "newton") -> SolveReport:
    """Damped Newton iteration on F(u) = Lu + c - h e^u.

    Steps solve the symmetric system (A - diag(m h e^u)) d = -m F with
    Levenberg regularization added when the linearization is singular or
    the direction fails to reduce the m-weighted residual norm; step sizes
    are halved until the residual decreases.

    For c = 0 the equation has a pseudo-solution family: along u = v + t,
    t -> -inf, the residual decays like e^t even when no solution exists.
    Any purely residual-based acceptance would certify these escapes, so
    when c = 0 an iterate is only accepted if sup |h e^u| stays above
    sqrt(tol) * (1 + sup |h|).  Set ``degenerate_guard=False`` to disable.
    """
    g = p.graph
    a = laplacian_matrix(g)
    m = g.measure
    u = np.zeros(g.n) if u_init is None else as_vertex_function(g, u_init).copy()
    degenerate_floor = math.sqrt(tol) * (1.0 + sup_norm(p.h))
    # weak edges under strong forcing produce genuine solutions of very
    # large amplitude, so runaway detection is relative to the start
    diverge_cap = 1e4 + 10.0 * sup_norm(u)

    def residual(vec):
        with np.errstate(over="ignore"):
            return a @ vec / m + p.c - p.h * np.exp(vec)

    def weighted_norm(vec):
        with np.errstate(over="ignore"):
            return float(np.sqrt(np.dot(vec * vec, m)))

    trace = []
    f = residual(u)
    fn = weighted_norm(f)
    best_r = math.inf
    best_u = u.copy()
    for it in range(max_iter + 1):
        r_inf = float(np.max(np.abs(f))) if np.isfinite(f).all() else math.inf
        trace.append({"phase": phase, "iteration": it, "residual_inf": r_inf})
        if r_inf < best_r:
            best_r, best_u = r_inf, u.copy()
        if r_inf <= max(tol, residual_floor(p, u)):
            if p.c == 0.0 and degenerate_guard:
                mass_scale = float(np.max(np.abs(p.h * np.exp(u))))
                if mass_scale < degenerate_floor:
                    raise NoConvergence(
                        "degenerate limit: residual is small only because the "
                        "iterate drifted towards the u -> -inf pseudo-solution "
                        f"family (sup |h e^u| = {mass_scale:.3e})",
                        report=None, sup_h_exp_u=mass_scale)
            return _finalize(p, u, Method.NEWTON, it, tol, trace=trace)
        if it == max_iter:
            break
        if sup_norm(u) > diverge_cap:
            raise NoConvergence("Newton iterates diverged", report=None,
                                sup_u=sup_norm(u))

        with np.errstate(over="ignore"):
            weight = m * p.h * np.exp(u)
        jac = a - np.diag(weight)
        rhs = -(m * f)
        eps = 0.0
        produced_direction = False
        accepted = False
        for _ in range(24):
            try:
                mat = jac if eps == 0.0 else jac + eps * np.diag(m)
                d = _solve_sym(mat, rhs)
            except (scipy.linalg.LinAlgError, ValueError):
                d = None
            if d is not None and np.isfinite(d).all():
                produced_direction = True
                s = 1.0
                while s >= STEP_FLOOR:
                    candidate = u + s * d
                    f_new = residual(candidate)
                    if np.isfinite(f_new).all():
                        fn_new = weighted_norm(f_new)
                        if fn_new <= (1.0 - 1e-4 * s) * fn:
                            u, f, fn = candidate, f_new, fn_new
                            accepted = True
                            break
                    s *= 0.5
                if accepted:
                    break
            eps = 1e-12 * (1.0 + float(np.max(np.abs(jac)))) if eps == 0.0 else eps * 10.0
        if not produced_direction:
            raise SingularJacobian(
                "Newton linearization singular beyond recoverable regularization")
        if not accepted:
            raise NoConvergence(
                f"line search stalled at residual {r_inf:.3e}",
                report=None, residual_inf=r_inf, trace=tuple(trace))
    raise NoConvergence(
        f"no convergence in {max_iter} Newton iterations "
        f"(best residual {best_r:.3e})",
        report=None, residual_inf=best_r, trace=tuple(trace))


# ---------------------------------------------------------------------------
# inner minimizer for the augmented Lagrangian

def _minimize_newton(x0: np.ndarray, value: Callable, value_grad_hess: Callable,
                     gtol: float, max_iter: int = 80,
                     on_accept: Callable | None = None) -> tuple[np.ndarray, int, float]:
    """Damped Newton minimization of a smooth function.

    ``value(x)`` returns the objective (+inf allowed), ``value_grad_hess(x)``
    returns (value, gradient, dense Hessian).  Indefinite Hessians are
    handled by Levenberg shifts; line steps must satisfy an Armijo decrease.
    Returns (x, iterations, final sup-norm of the gradient) and leaves
    convergence policing to the caller.
    """
    x = x0.copy()
    val, grad, hess = value_grad_hess(x)
    iters = 0
    eye = np.eye(len(x))
    for _ in range(max_iter):
        g_inf = float(np.max(np.abs(grad)))
        if g_inf <= gtol:
            break
        eps = 0.0
        moved = False
        for _ in range(30):
            try:
                mat = hess if eps == 0.0 else hess + eps * eye
                d = _solve_sym(mat, -grad)
            except (scipy.linalg.LinAlgError, ValueError):
                d = None
            slope = float(grad @ d) if d is not None and np.isfinite(d).all() else 0.0
            if d is not None and np.isfinite(d).all() and slope < 0.0:
                s = 1.0
                while s >= STEP_FLOOR:
                    candidate = x + s * d
                    v_new = value(candidate)
                    if np.isfinite(v_new) and v_new <= val + 1e-4 * s * slope:
                        x = candidate
                        val, grad, hess = value_grad_hess(x)
                        moved = True
                        break
                    s *= 0.5
                if moved:
                    break
            eps = 1e-10 * (1.0 + float(np.max(np.abs(np.diag(hess))))) if eps == 0.0 else eps * 10.0
        if not moved:
            break
        iters += 1
        if on_accept is not None:
            on_accept(x)
    return x, iters, float(np.max(np.abs(grad)))


# ---------------------------------------------------------------------------
# c = 0: constrained energy minimization

def variational_start_c_zero(p: ProblemInstance) -> np.ndarray:
    """A point of the constraint set {<h e^v, 1> = 0, <v, 1> = 0}.

    Lift the vertex maximizing h by t and recenter: with x0 = argmax h and
    t = log(1 - <h, 1> / (h(x0) m(x0))) > 0, the function
    v = t 1_{x0} - t m(x0)/m(X) satisfies both constraints exactly.
    """
    g = p.graph
    h = p.h
    x0 = int(np.argmax(h))
    ih = float(np.dot(h, g.measure))
    t = math.log1p(-ih / (h[x0] * g.measure[x0]))
    v = np.full(g.n, -t * g.measure[x0] / g.total_measure)
    v[x0] += t
    return v


def _require_c_zero_conditions(p: ProblemInstance) -> None:
    hbar = mean_m(p.graph, p.h)
    hmax = float(np.max(p.h))
    if hbar >= 0 or hmax <= 0:
        raise NotSolvable(
            "c = 0 is solvable exactly when mean(h) < 0 and h changes sign; "
            f"here mean(h) = {hbar:.6g} and max(h) = {hmax:.6g}",
            mean_h=hbar, max_h=hmax)


def _augmented_lagrangian(v0, value_of, kkt_of, constraint_of, update,
                          *, feas_tol, kkt_tol, max_outer, inner_max,
                          trace, phase, on_accept=None, stall_tols=None):
    """Shared LANCELOT-style outer loop.

    ``constraint_of(v)`` returns the vector of constraint values,
    ``value_of(lams, rho)`` and ``kkt_of(v, lams)`` build the closures, and
    ``update`` applies first-order multiplier estimates lam - rho c(v).

    ``stall_tols`` is an optional pair of looser (feasibility, kkt) caps:
    when five consecutive outer rounds bring no real progress toward the
    primary gates but the iterate sits within the caps, it is returned as
    is.  The inner minimizer parks at a geometry-dependent resolution in
    double precision, and escalating the penalty past that point only
    amplifies the parked gradient, so callers that re-certify the result
    downstream opt into this escape instead.
    """
    v = v0
    rho = 10.0
    eta = 0.1
    omega = 1e-4
    lams = update(None, None, None)  # initial multipliers
    total_inner = 0
    best_ratio = math.inf
    stalled = 0
    for outer in range(max_outer):
        value, vgh = value_of(lams, rho)
        v, inner_iters, grad_inf = _minimize_newton(
            v, value, vgh, gtol=omega, max_iter=inner_max, on_accept=on_accept)
        total_inner += inner_iters
        cons = constraint_of(v)
        feas = float(np.max(np.abs(cons)))
        lams_next = update(lams, rho, cons)
        kkt = kkt_of(v, lams_next)
        trace.append({"phase": phase, "outer": outer, "feasibility": feas,
                      "kkt": kkt, "rho": rho, "inner_iterations": inner_iters})
        if feas <= feas_tol and kkt <= kkt_tol:
            return v, lams_next, total_inner
        ratio = max(feas / feas_tol, kkt / kkt_tol)
        if ratio < 0.67 * best_ratio:
            stalled = 0
        else:
            stalled += 1
        best_ratio = min(best_ratio, ratio)
        if (stall_tols is not None and stalled >= 5
                and feas <= stall_tols[0] and kkt <= stall_tols[1]):
            return v, lams_next, total_inner
        if feas <= eta:
            lams = lams_next
            eta = max(eta * rho ** -0.9, 0.1 * feas_tol)
            omega = max(omega / rho, 1e-13)
        else:
            rho = min(rho * 10.0, 1e12)
            eta = max(0.1 * rho ** -0.1, 0.1 * feas_tol)
            omega = max(omega * 0.1, 1e-13)
    raise NoConvergence(
        "augmented Lagrangian failed to reach feasibility and stationarity",
        report=None, feasibility=feas, kkt=kkt)


def solve_c_zero(p: ProblemInstance, tol: float = 1e-10,
                 max_outer: int = 60, inner_max: int = 300) -> SolveReport:
    """Variational solver for Lu = h e^u (c = 0).

    Minimizes Q(v) subject to <h e^v, 1> = 0 and <v, 1> = 0.  The
    Euler-Lagrange equation 2Lw = lam h e^w + mu has mu = 0 after testing
    against constants, and lam = 2 Q(w)/||..|| > 0; shifting by
    sigma = log(lam/2) turns w into a solution of the equation, which a
    Newton polish then certifies at full tolerance.
    """
    if p.c != 0.0:
        raise ValueError("solve_c_zero requires c = 0")
    _require_c_zero_conditions(p)
    g = p.graph
    h = p.h
    a = laplacian_matrix(g)
    m = g.measure
    mh = m * h

    v0 = variational_start_c_zero(p)
    feas_scale = 1.0 + abs(float(np.dot(np.abs(h), m)))
    trace = [{"phase": "start", "feasibility": abs(float(np.dot(mh, np.exp(v0))))}]

    def constraint_of(v):
        with np.errstate(over="ignore"):
            return np.array([float(np.dot(mh, np.exp(v))), float(np.dot(m, v))])

    def value_of(lams, rho):
        lam_h, lam_mean = lams

        def value(v):
            with np.errstate(over="ignore"):
                ev = np.exp(v)
            if not np.isfinite(ev).all():
                return math.inf
            ch = float(np.dot(mh, ev))
            cf = float(np.dot(m, v))
            return (float(v @ (a @ v)) - lam_h * ch - lam_mean * cf
                    + 0.5 * rho * (ch * ch + cf * cf))

        def vgh(v):
            ev = np.exp(v)
            gh = mh * ev
            ch = float(gh.sum())
            cf = float(np.dot(m, v))
            av = a @ v
            val = (float(v @ av) - lam_h * ch - lam_mean * cf
                   + 0.5 * rho * (ch * ch + cf * cf))
            lam_h_eff = lam_h - rho * ch
            lam_mean_eff = lam_mean - rho * cf
            grad = 2.0 * av - lam_h_eff * gh - lam_mean_eff * m
            hess = (2.0 * a + rho * (np.outer(gh, gh) + np.outer(m, m))
                    - lam_h_eff * np.diag(gh))
            return val, grad, hess

        return value, vgh

    def kkt_of(v, lams):
        # stationarity residual in equation form, |2Lw - lam h e^w - mu|,
        # so the gate does not inflate with the measure's scale
        ev = np.exp(v)
        return float(np.max(
            np.abs(2.0 * (a @ v) - lams[0] * mh * ev - lams[1] * m) / m))

    def update(lams, rho, cons):
        if lams is None:
            return (0.0, 0.0)
        return (lams[0] - rho * cons[0], lams[1] - rho * cons[1])

    # gates sized to what inner Newton can park at in double precision; the
    # recovered multipliers feed a polish whose certificates decide the
    # final acceptance
    kkt_scale = 1.0 + sup_norm(h)
    w, _, inner_total = _augmented_lagrangian(
        v0, value_of, kkt_of, constraint_of, update,
        feas_tol=1e-9 * feas_scale, kkt_tol=1e-6 * kkt_scale,
        max_outer=max_outer, inner_max=inner_max, trace=trace, phase="augmented",
        stall_tols=(1e-6 * feas_scale, 1e-4 * kkt_scale))

    hew = h * np.exp(w)
    lw = a @ w / m
    lam = 2.0 * inner_m(g, lw, hew) / inner_m(g, hew, hew)
    if not lam > 0.0:
        raise MultiplierSignError(
            f"energy minimizer produced multiplier lambda = {lam:.6g} <= 0",
            multiplier=lam)
    mu = mean_m(g, 2.0 * lw - lam * hew)
    sigma = math.log(lam / 2.0)

    polish = newton_solve(p, w + sigma, tol=tol, max_iter=60, phase="polish")
    return _finalize(
        p, polish.u, Method.VARIATIONAL_C0, inner_total + polish.iterations, tol,
        multipliers={"lambda": lam, "mu": mu, "sigma": sigma},
        trace=tuple(trace) + polish.trace)


# ---------------------------------------------------------------------------
# c > 0: constrained minimization of J

def variational_start_c_positive(p: ProblemInstance) -> np.ndarray:
    """A point of {<h e^v, 1> = c m(X)} built from the vertex maximizing h.

    With s = (1 + |<h, 1>|)/(h(x0) m(x0)), the lift t = log(1 + s) makes
    K = <h e^{t 1_{x0}}, 1> = 1 + |<h, 1>| + <h, 1> >= 1, and subtracting
    log(K/(c m(X))) rescales the integral to exactly c m(X).
    """
    g = p.graph
    h = p.h
    x0 = int(np.argmax(h))
    ih = float(np.dot(h, g.measure))
    t = math.log1p((1.0 + abs(ih)) / (h[x0] * g.measure[x0]))
    kval = (math.expm1(t)) * h[x0] * g.measure[x0] + ih
    shift = math.log(kval / (p.c * g.total_measure))
    v = np.full(g.n, -shift)
    v[x0] += t
    return v


def solve_c_positive(p: ProblemInstance, tol: float = 1e-10,
                     max_outer: int = 60, inner_max: int = 300) -> SolveReport:
    """Variational solver for c > 0.

    Minimizes J(v) = Q(v)/2 + c <v, 1> over {<h e^v, 1> = c m(X)}.  Testing
    the stationarity equation Lv + c = lam h e^v against the measure forces
    lam = 1, so the minimizer itself solves the equation.  The multiplier
    recovered at the augmented stage must land within 1e-3 of 1 (a basin
    check at that stage's achievable stationarity); after the Newton polish
    the recovery is repeated at the certified minimizer, where it must match
    1 to within 1e-6.

    The constraint enters the augmented Lagrangian in log form,
    log <h e^v, 1> = log(c m(X)).  The raw form saturates as v drifts down
    the constant direction (h e^v -> 0) while the objective term c <v, 1>
    keeps decreasing, leaving the subproblem unbounded below for every
    penalty weight; the log of the integral grows linearly along constants,
    so its quadratic penalty closes exactly that escape, and points with
    <h e^v, 1> <= 0 act as an infinite-value barrier for the line search.
    """
    if not p.c > 0.0:
        raise ValueError("solve_c_positive requires c > 0")
    g = p.graph
    h = p.h
    hmax = float(np.max(h))
    if hmax <= 0:
        raise NotSolvable(
            "c > 0 is solvable exactly when h is positive somewhere; "
            f"here max(h) = {hmax:.6g}", max_h=hmax)
    a = laplacian_matrix(g)
    m = g.measure
    mh = m * h
    target = p.c * g.total_measure
    log_target = math.log(target)

    v0 = variational_start_c_positive(p)
    trace = [{"phase": "start",
              "feasibility": abs(float(np.dot(mh, np.exp(v0))) - target)}]

    def witness(v):
        with np.errstate(over="ignore"):
            ev = np.exp(v)
        if not np.isfinite(ev).all():
            return
        q = float(v @ (a @ v))
        trace.append({"phase": "augmented", "Q": q,
                      "J": 0.5 * q + p.c * float(np.dot(m, v)),
                      "integral": float(np.dot(mh, ev))})

    def constraint_of(v):
        with np.errstate(over="ignore"):
            s = float(np.dot(mh, np.exp(v)))
        if not np.isfinite(s) or s <= 0.0:
            return np.array([math.inf])
        return np.array([math.log(s) - log_target])

    def value_of(lams, rho):
        lam = lams[0]

        def value(v):
            with np.errstate(over="ignore"):
                ev = np.exp(v)
            if not np.isfinite(ev).all():
                return math.inf
            s = float(np.dot(mh, ev))
            if s <= 0.0:
                return math.inf
            ci = math.log(s) - log_target
            return (0.5 * float(v @ (a @ v)) + p.c * float(np.dot(m, v))
                    - lam * ci + 0.5 * rho * ci * ci)

        def vgh(v):
            ev = np.exp(v)
            gh = mh * ev
            s = float(gh.sum())
            ci = math.log(s) - log_target
            gl = gh / s
            av = a @ v
            val = (0.5 * float(v @ av) + p.c * float(np.dot(m, v))
                   - lam * ci + 0.5 * rho * ci * ci)
            lam_eff = lam - rho * ci
            grad = av + p.c * m - lam_eff * gl
            hess = (a + rho * np.outer(gl, gl)
                    - lam_eff * (np.diag(gh) / s - np.outer(gl, gl)))
            return val, grad, hess

        return value, vgh

    def kkt_of(v, lams):
        # stationarity of the original form with the classical multiplier
        # lam_classical = lam_log / s, measured as the equation residual
        # |Lv + c - lam h e^v| so it is directly comparable with the final
        # certificate and independent of the measure's scale
        ev = np.exp(v)
        s = float(np.dot(mh, ev))
        if s <= 0.0:
            return math.inf
        return float(np.max(np.abs(a @ v + p.c * m - (lams[0] / s) * mh * ev) / m))

    def update(lams, rho, cons):
        if lams is None:
            return (target,)  # classical multiplier 1 corresponds to lam_log = c m(X)
        return (lams[0] - rho * cons[0],)

    # The log constraint and the equation-form kkt are both scale-free, so
    # these gates are tight yet reachable; pushing them toward machine
    # precision instead forces rho escalation past what inner Newton can
    # resolve, and the last digits belong to the polish anyway.  The stall
    # caps hand a parked iterate to the polish, whose own certificates
    # decide acceptance.
    kkt_scale = 1.0 + sup_norm(h) + p.c
    v, _, inner_total = _augmented_lagrangian(
        v0, value_of, kkt_of, constraint_of, update,
        feas_tol=1e-9,
        kkt_tol=1e-6 * kkt_scale,
        max_outer=max_outer, inner_max=inner_max, trace=trace, phase="augmented",
        on_accept=witness, stall_tols=(1e-6, 1e-4 * kkt_scale))

    hev = h * np.exp(v)
    lam_coarse = inner_m(g, a @ v / m + p.c, hev) / inner_m(g, hev, hev)
    if abs(lam_coarse - 1.0) > 1e-3:
        raise MultiplierValueError(
            "augmented stage should park near multiplier 1, recovered "
            f"{lam_coarse!r}", multiplier=lam_coarse)

    polish = newton_solve(p, v, tol=tol, max_iter=60, phase="polish")
    hev = h * np.exp(polish.u)
    lam_rec = inner_m(g, a @ polish.u / m + p.c, hev) / inner_m(g, hev, hev)
    if abs(lam_rec - 1.0) > 1e-6:
        raise MultiplierValueError(
            f"constraint multiplier should equal 1, recovered {lam_rec!r}",
            multiplier=lam_rec)
    return _finalize(
        p, polish.u, Method.VARIATIONAL_CPOS, inner_total + polish.iterations,
        tol, multipliers={"lambda": lam_rec, "lambda_augmented": lam_coarse},
        trace=tuple(trace) + polish.trace)


def check_coercivity(p: ProblemInstance, report: SolveReport,
                     slack: float = 1e-9) -> bool:
    """A posteriori coercivity certificate for the c > 0 energy.

    For any v with s = <h e^v, 1> > 0, bounding the mean through
    Cauchy-Schwarz and the pointwise bound (v - mean v)^2 <= C' Q(v) gives

        J(v) >= Q(v)/4 + C_w + c m(X) log(s / (c m(X))),
        C_w  = c m(X) log(c m(X) / (||h|| sqrt(m(X)))) - (c m(X))^2 C',

    where ||h|| is the weighted 2-norm and C' the Trudinger-Moser constant.
    Returns True when every recorded minimization iterate satisfies the
    bound (iterates with s <= 0 make no claim and are skipped).
    """
    g = p.graph
    cmx = p.c * g.total_measure
    if not cmx > 0:
        raise ValueError("coercivity witness applies to c > 0 only")
    cprime = trudinger_moser_constant(g)
    c_w = cmx * math.log(cmx / (norm_m(g, p.h) * math.sqrt(g.total_measure))) \
        - cmx * cmx * cprime
    for entry in report.trace:
        s = entry.get("integral") if isinstance(entry, dict) else None
        if s is None or s <= 0.0:
            continue
        bound = 0.25 * entry["Q"] + c_w + cmx * math.log(s / cmx)
        if entry["J"] < bound - slack * (1.0 + abs(bound)):
            return False
    return True


# ---------------------------------------------------------------------------
# c < 0: sub/supersolutions and the monotone scheme

def _solve_vs_mean(g, f: np.ndarray) -> np.ndarray:
    """L^{-1}(f - mean f) with mean-zero output.

    f - mean(f) in floating point leaves a residue of order eps * |f|; for
    constant f that residue is the entire difference and its mean stays
    comparable to its norm however often it is recentred, so the projection
    is taken to be exactly zero there instead of asking the complement
    solver to chase noise.
    """
    rhs = f - mean_m(g, f)
    if sup_norm(rhs) <= 64.0 * np.finfo(float).eps * sup_norm(f):
        return np.zeros(g.n)
    return solve_on_complement(g, rhs - mean_m(g, rhs))


def build_lower_solution(p: ProblemInstance, beta_min: float | None = None) -> np.ndarray:
    """Subsolution u0 with L u0 <= h e^{u0} - c, valid for any c < 0.

    With h- the negative part of h and alpha = |c| / mean(h-), the function
    w = -alpha L^{-1}(h- - mean(h-)) shifted down by
    beta = sup|w| - log(alpha) + 1 satisfies u0 <= log(alpha) - 1, hence
    alpha >= e^{u0} wherever h < 0, which is exactly what the pointwise
    inequality needs.  ``beta_min`` lets callers push u0 further down.
    """
    if not p.c < 0.0:
        raise ValueError("subsolution construction requires c < 0")
    g = p.graph
    hbar = mean_m(g, p.h)
    if hbar >= 0:
        raise MeanNotNegative(
            f"construction requires mean(h) < 0, got {hbar:.6g}", mean_h=hbar)
    hminus = neg_part(p.h)
    hminus_bar = mean_m(g, hminus)
    alpha = abs(p.c) / hminus_bar
    w = -alpha * _solve_vs_mean(g, hminus)
    beta = sup_norm(w) - math.log(alpha) + 1.0
    if beta_min is not None:
        beta = max(beta, beta_min)
    u0 = w - beta
    slack = 1e-10 * (1.0 + abs(p.c))
    defect = apply_laplacian(g, u0) - p.h * np.exp(u0) + p.c
    if np.max(defect) > slack:
        raise ConstructionFailed(
            f"subsolution inequality violated by {np.max(defect):.3e}",
            violation=float(np.max(defect)))
    return u0


@dataclass(frozen=True)
class UpperAnalysis:
    """How far the supersolution construction reaches for a given (graph, h).

    ``guaranteed`` is a certified lower bound on the solvable range: every
    c < 0 with |c| < guaranteed admits a constructive supersolution.  It is
    infinite when h <= 0.  For sign-changing h the truncation h_N = max(h, -N)
    at the smallest power of two N with mean(h_N) < 0 yields the bound
    C1(alpha) = -2 alpha^2 C N - alpha mean(h_N) with
    C = sup |L^{-1}(h_N - mean(h_N))|, maximized in closed form at
    alpha* = -mean(h_N) / (4 C N).
    """

    branch: str
    guaranteed: float
    truncation: float | None = None
    trunc_mean: float | None = None
    bound: float | None = None
    alpha_star: float | None = None
    base: np.ndarray | None = field(default=None, repr=False)


def upper_solution_analysis(g, h) -> UpperAnalysis:
    h = as_vertex_function(g, h)
    hbar = mean_m(g, h)
    if hbar >= 0:
        raise MeanNotNegative(
            f"construction requires mean(h) < 0, got {hbar:.6g}", mean_h=hbar)
    hmax = float(np.max(h))
    if hmax < 0:
        return UpperAnalysis(branch="negative", guaranteed=math.inf)
    if hmax == 0:
        base = _solve_vs_mean(g, h)
        return UpperAnalysis(branch="nonpositive", guaranteed=math.inf,
                             bound=sup_norm(base), base=base)

    n_trunc = 1.0
    for _ in range(200):
        hn = np.maximum(h, -n_trunc)
        hn_bar = mean_m(g, hn)
        if hn_bar < 0:
            break
        n_trunc *= 2.0
    else:
        raise ConstructionFailed("no truncation level has negative mean")
    base = _solve_vs_mean(g, hn)
    bound = sup_norm(base)
    alpha_star = -hn_bar / (4.0 * bound * n_trunc)
    # factored as -hn_bar/2 * alpha_star: the raw hn_bar^2 underflows for
    # very small h while the product of the two factors is representable
    guaranteed = -0.5 * hn_bar * alpha_star
    return UpperAnalysis(branch="truncated", guaranteed=guaranteed,
                         truncation=n_trunc, trunc_mean=hn_bar, bound=bound,
                         alpha_star=alpha_star, base=base)


def build_upper_solution(p: ProblemInstance,
                         analysis: UpperAnalysis | None = None) -> tuple[np.ndarray | None, UpperAnalysis]:
    """Supersolution u1 with L u1 >= h e^{u1} - c, or None when not certified.

    Three branches:

    * h < 0 everywhere: the constant log(max(c/h)) is already a
      supersolution with equality at the maximizing vertex.
    * h <= 0 with zeros: u1 = alpha (L^{-1}(h - mean h) + sup|..|) + log alpha
      at alpha = c / mean(h); declined (returns None) if that would overflow
      the exponential downstream.
    * sign-changing h: the truncated construction from
      :func:`upper_solution_analysis`, available exactly when
      |c| < analysis.guaranteed; here v = alpha*(base - C) <= 0 and
      u1 = v + log(alpha*).

    Every returned u1 is re-checked pointwise.
    """
    if not p.c < 0.0:
        raise ValueError("supersolution construction requires c < 0")
    g = p.graph
    h = p.h
    if analysis is None:
        analysis = upper_solution_analysis(g, h)

    if analysis.branch == "negative":
        u1 = np.full(g.n, math.log(float(np.max(p.c / h))))
    elif analysis.branch == "nonpositive":
        alpha = p.c / mean_m(g, h)
        u1 = alpha * (analysis.base + analysis.bound) + math.log(alpha)
        if float(np.max(u1)) > 500.0:
            return None, analysis
    else:
        if abs(p.c) >= analysis.guaranteed:
            return None, analysis
        alpha = analysis.alpha_star
        u1 = alpha * (analysis.base - analysis.bound) + math.log(alpha)

    slack = 1e-10 * (1.0 + abs(p.c))
    defect = apply_laplacian(g, u1) - h * np.exp(u1) + p.c
    if np.min(defect) < -slack:
        raise ConstructionFailed(
            f"supersolution inequality violated by {-np.min(defect):.3e}",
            violation=float(-np.min(defect)))
    return u1, analysis


@dataclass(frozen=True)
class SubSuperPair:
    """Bracket u_lower <= u_upper with the shift k certifying monotonicity.

    k = max(1, -h) e^{u_upper} dominates (-h) e^u on the whole bracket, which
    makes v -> h e^v + k v nondecreasing there and (L + k) invertible.
    """

    u_lower: np.ndarray = field(repr=False)
    u_upper: np.ndarray = field(repr=False)
    shift: np.ndarray = field(repr=False)
    guaranteed: float


def build_sub_super_pair(p: ProblemInstance) -> SubSuperPair | None:
    """Assemble the bracket for the monotone scheme, or None if no
    supersolution is certified at this c."""
    u1, analysis = build_upper_solution(p)
    if u1 is None:
        return None
    u0 = build_lower_solution(p, beta_min=None)
    lift = float(np.max(u0) - np.min(u1))
    if lift > 0:
        u0 = u0 - lift
    k = np.maximum(1.0, -p.h) * np.exp(u1)
    if np.any(u0 > u1) or np.any(k < neg_part(p.h) * np.exp(u1)):
        raise ConstructionFailed("bracket ordering failed")
    return SubSuperPair(u_lower=u0, u_upper=u1, shift=k,
                        guaranteed=analysis.guaranteed)


def monotone_solve(p: ProblemInstance, pair: SubSuperPair,
                   tol: float = 1e-10, max_iter: int = 10000,
                   step_tol: float | None = None) -> SolveReport:
    """Monotone iteration u_{j+1} = (L + k)^{-1}(h e^{u_j} - c + k u_j).

    Starting from the supersolution the iterates decrease pointwise and stay
    above the subsolution; both facts are asserted every step with slack
    1e-12 (1 + sup|u_1|).  Because u_{j+1} solves the shifted system exactly,
    its defect is bounded pointwise by the computable quantity

        |L u_{j+1} + c - h e^{u_{j+1}}| <= (k + |h| e^{u_j}) |u_j - u_{j+1}|,

    and the iteration stops once that bound drops below tol/4; the returned
    report certifies the recomputed residual at ``tol``.  This stops far
    earlier than a raw step test when k is small, since the defect carries
    the factor k + |h| e^u.  Pass ``step_tol`` to additionally require
    sup|u_j - u_{j+1}| <= step_tol, which pins the iterate itself near the
    limit on contracting instances.  If the budget runs out, the raised
    NoConvergence carries the last iterate as an uncertified report so
    callers can polish it.
    """
    g = p.graph
    solver = shifted_solver(g, pair.shift)
    k = pair.shift
    u = pair.u_upper.copy()
    slack = 1e-12 * (1.0 + sup_norm(pair.u_upper))
    trace = []
    step = math.inf
    defect = math.inf
    for it in range(1, max_iter + 1):
        ev = np.exp(u)
        u_next = solver(p.h * ev - p.c + k * u)
        rise = float(np.max(u_next - u))
        if rise > slack:
            raise MonotonicityViolated(
                f"iterate increased by {rise:.3e} at step {it}",
                step=it, rise=rise)
        drop = float(np.max(pair.u_lower - u_next))
        if drop > slack:
            raise MonotonicityViolated(
                f"iterate fell {drop:.3e} below the subsolution at step {it}",
                step=it, drop=drop)
        diff = np.abs(u - u_next)
        step = float(np.max(diff))
        defect = float(np.max((k + np.abs(p.h) * ev) * diff))
        u = u_next
        trace.append({"phase": "monotone", "iteration": it, "step": step,
                      "defect_bound": defect})
        if (defect <= max(0.25 * tol, residual_floor(p, u))
                and (step_tol is None or step <= step_tol)):
            return _finalize(p, u, Method.MONOTONE_CNEG, it, tol, trace=trace)
    residual_inf, gap = verify_solution(p, u)
    u = u.copy()
    u.setflags(write=False)
    last = SolveReport(u=u, residual_inf=residual_inf,
                       integral_identity_gap=gap, method=Method.MONOTONE_CNEG,
                       iterations=max_iter, trace=tuple(trace))
    raise NoConvergence(
        f"monotone defect bound {defect:.3e} still above {0.25 * tol:.3e} "
        f"after {max_iter} steps", report=last,
        last_step=step, defect_bound=defect)


def solve_c_negative(p: ProblemInstance, tol: float = 1e-10,
                     max_iter: int = 10000, seed: int = 0,
                     newton_starts: int = 20) -> SolveReport:
    """Pipeline for c < 0: necessity check, bracket, monotone scheme,
    Newton fallback.

    mean(h) < 0 is necessary (test the equation against e^{-u}).  When the
    constructive bracket exists the monotone scheme runs until its defect
    bound certifies the residual at ``tol``; if contraction is too slow for
    the sweep budget, the last bracketed iterate is certified by a Newton
    polish instead.  Without a bracket, damped Newton is tried from the
    subsolution, zero, and seeded random starts.  A Newton certificate is a
    genuine solution either way; failure of all starts raises NoConvergence,
    which is a failure to find, not a proof of nonexistence.
    """
    if not p.c < 0.0:
        raise ValueError("solve_c_negative requires c < 0")
    g = p.graph
    hbar = mean_m(g, p.h)
    if hbar >= 0:
        raise NotSolvable(
            "c < 0 requires mean(h) < 0 (test the equation against e^{-u}); "
            f"here mean(h) = {hbar:.6g}", mean_h=hbar)

    pair = build_sub_super_pair(p)
    if pair is not None:
        try:
            return monotone_solve(p, pair, tol=tol, max_iter=max_iter)
        except NoConvergence as exc:
            if exc.report is None:
                raise
            # slow contraction: the bracketed iterate is close, certify it
            # with a Newton polish instead of burning more sweeps
            log.debug("monotone stalled at residual %.3e, polishing",
                      exc.report.residual_inf)
            polish = newton_solve(p, exc.report.u, tol=tol, max_iter=60,
                                  phase="polish")
            return _finalize(p, polish.u, Method.MONOTONE_CNEG,
                             exc.report.iterations + polish.iterations, tol,
                             trace=exc.report.trace + polish.trace)

    rng = np.random.default_rng(seed)
    center = math.log(abs(p.c) / (1.0 + sup_norm(p.h)))
    starts = [build_lower_solution(p), np.zeros(g.n),
              np.full(g.n, center)]
    while len(starts) < max(3, newton_starts):
        spread = float(rng.choice([0.5, 1.0, 2.0]))
        starts.append(center + spread * rng.standard_normal(g.n))
    failure = None
    for u_init in starts[:max(3, newton_starts)]:
        try:
            return newton_solve(p, u_init, tol=tol, max_iter=200)
        except (NoConvergence, SingularJacobian) as exc:
            failure = exc
    raise NoConvergence(
        f"no solution certified from {max(3, newton_starts)} Newton starts "
        "(outside the constructive range; existence undecided)",
        report=None) from failure


# ---------------------------------------------------------------------------
# dispatcher

def solve(p: ProblemInstance, method: str = "auto", tol: float = 1e-10,
          max_iter: int | None = None, seed: int = 0) -> SolveReport:
    """Solve by regime (``auto``) or by a forced method.

    ``method`` is one of auto, variational, newton, monotone.  ``max_iter``
    defaults to 200 for Newton and 10000 for the monotone scheme.
    """
    if method == "auto":
        if p.c == 0.0:
            return solve_c_zero(p, tol=tol)
        if p.c > 0.0:
            return solve_c_positive(p, tol=tol)
        return solve_c_negative(p, tol=tol,
                                max_iter=max_iter or 10000, seed=seed)
    if method == "variational":
        if p.c == 0.0:
            return solve_c_zero(p, tol=tol)
        if p.c > 0.0:
            return solve_c_positive(p, tol=tol)
        raise ValueError("no variational formulation is provided for c < 0")
    if method == "newton":
        return newton_solve(p, None, tol=tol, max_iter=max_iter or 200)
    if method == "monotone":
        if not p.c < 0.0:
            raise ValueError("the monotone scheme applies to c < 0 only")
        pair = build_sub_super_pair(p)
        if pair is None:
            raise NoConvergence(
                "no constructive supersolution at this c; "
                "use method=auto for the Newton fallback", report=None)
        return monotone_solve(p, pair, tol=tol, max_iter=max_iter or 10000)
    raise ValueError(f"unknown method {method!r}")
