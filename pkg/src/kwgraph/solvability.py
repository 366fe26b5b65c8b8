"""Solvability classification and threshold estimation for Lu = h e^u - c.

The sharp picture over c for fixed (graph, h), h not identically zero:

* c = 0: solvable iff mean(h) < 0 and h changes sign.
* c > 0: solvable iff h is positive somewhere.
* c < 0: mean(h) < 0 is necessary; given that, h <= 0 makes every c < 0
  solvable, while sign-changing h admits a threshold
  c_minus(h) in [-inf, 0) with solvability for c_minus < c < 0 and none
  for c < c_minus.  The classifier reports the certified portion of that
  range; outside it, existence is genuinely undecided here, so the verdict
  is Unknown with a bracket rather than a guess.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstructionFailed,
    MonotonicityViolated,
    MultiplierSignError,
    MultiplierValueError,
    NoConvergence,
    NoSuccessfulProbe,
    NotSolvable,
    NumericalFailure,
    SingularJacobian,
    ThresholdNotApplicable,
)
from .graph_core import ProblemInstance, WeightedGraph, as_vertex_function, mean_m
from .solvers import solve_c_negative, upper_solution_analysis, verify_solution

__all__ = [
    "Verdict",
    "ConditionCheck",
    "SolvabilityVerdict",
    "classify",
    "probe_negative_c",
    "ThresholdEstimate",
    "estimate_threshold",
]

log = logging.getLogger(__name__)


class Verdict(str, enum.Enum):
    SOLVABLE = "Solvable"
    NOT_SOLVABLE = "NotSolvable"
    GUARANTEED_RANGE = "GuaranteedRange"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class ConditionCheck:
    """One inequality that entered the verdict, with its concrete value."""

    name: str
    value: float
    passed: bool


@dataclass(frozen=True)
class SolvabilityVerdict:
    verdict: Verdict
    conditions: tuple[ConditionCheck, ...]
    guaranteed_range: float | None = None
    bracket: tuple[float, float] | None = None
    detail: str = ""


def classify(p: ProblemInstance) -> SolvabilityVerdict:
    """Decide solvability of the instance, or report the certified range.

    Never raises for a well-formed instance; a NotSolvable verdict is a
    return value here, while the solvers raise on it.
    """
    g = p.graph
    h = p.h
    hbar = mean_m(g, h)
    hmax = float(np.max(h))

    if p.c == 0.0:
        conditions = (
            ConditionCheck("mean_h_negative", hbar, hbar < 0),
            ConditionCheck("h_changes_sign", hmax, hbar < 0 and hmax > 0),
        )
        ok = all(c.passed for c in conditions)
        return SolvabilityVerdict(
            verdict=Verdict.SOLVABLE if ok else Verdict.NOT_SOLVABLE,
            conditions=conditions,
            detail="c = 0 is solvable iff mean(h) < 0 and h changes sign")

    if p.c > 0.0:
        cond = ConditionCheck("h_positive_somewhere", hmax, hmax > 0)
        return SolvabilityVerdict(
            verdict=Verdict.SOLVABLE if cond.passed else Verdict.NOT_SOLVABLE,
            conditions=(cond,),
            detail="c > 0 is solvable iff h is positive somewhere")

    mean_cond = ConditionCheck("mean_h_negative", hbar, hbar < 0)
    if not mean_cond.passed:
        return SolvabilityVerdict(
            verdict=Verdict.NOT_SOLVABLE, conditions=(mean_cond,),
            detail="mean(h) < 0 is necessary for c < 0")
    if hmax <= 0:
        return SolvabilityVerdict(
            verdict=Verdict.SOLVABLE,
            conditions=(mean_cond,
                        ConditionCheck("h_nonpositive", hmax, True)),
            detail="h <= 0 (not identically 0) is solvable for every c < 0")

    analysis = upper_solution_analysis(g, h)
    within = ConditionCheck("within_constructive_range",
                            analysis.guaranteed, abs(p.c) < analysis.guaranteed)
    if within.passed:
        return SolvabilityVerdict(
            verdict=Verdict.GUARANTEED_RANGE,
            conditions=(mean_cond, within),
            guaranteed_range=analysis.guaranteed,
            detail="a constructive supersolution certifies this c")
    return SolvabilityVerdict(
        verdict=Verdict.UNKNOWN,
        conditions=(mean_cond, within),
        guaranteed_range=analysis.guaranteed,
        bracket=(p.c, -analysis.guaranteed * (1.0 - 1e-6)),
        detail="c sits below the certified range; the threshold lies in the bracket")


# ---------------------------------------------------------------------------
# threshold estimation

def probe_negative_c(g: WeightedGraph, h, c: float, tol: float = 1e-8,
                     seed: int = 0, newton_starts: int = 12) -> bool:
    """True when a solution at this c < 0 can be found and certified at ``tol``.

    False records a failure to find, never a proof of nonexistence.
    """
    p = ProblemInstance(graph=g, h=h, c=c)
    try:
        report = solve_c_negative(p, tol=min(tol, 1e-9), seed=seed,
                                  newton_starts=newton_starts)
    except (NotSolvable, NoConvergence, SingularJacobian, ConstructionFailed,
            MonotonicityViolated, NumericalFailure, MultiplierSignError,
            MultiplierValueError):
        return False
    residual_inf, _ = verify_solution(p, report.u)
    return residual_inf <= tol


@dataclass(frozen=True)
class ThresholdEstimate:
    """Bisection bracket for the threshold c_minus(h).

    ``bracket = (c_lo, c_hi)`` with a certified solution at c_hi and no
    certificate found at c_lo; ``truncated`` means the search hit the
    configured depth ``c_min`` without ever failing.  ``consistent`` is True
    when every probed failure lies below every probed success.
    """

    bracket: tuple[float, float]
    truncated: bool
    probes: tuple[tuple[float, bool], ...] = field(repr=False)
    consistent: bool = True


def estimate_threshold(g: WeightedGraph, h, *, resolution: float = 1e-3,
                       max_probes: int = 60, c_min: float = -1e6,
                       tol: float = 1e-8, seed: int = 0,
                       newton_starts: int = 12) -> ThresholdEstimate:
    """Bracket the threshold c_minus(h) by bisection on certified probes.

    Applies to mean(h) < 0 with h positive somewhere (for h <= 0 there is
    nothing to estimate: every c < 0 is solvable).  The search starts inside
    the constructive range, expands geometrically until a probe fails or the
    depth cap c_min is reached, then bisects to relative ``resolution``.
    """
    h = as_vertex_function(g, h)
    hbar = mean_m(g, h)
    if hbar >= 0:
        raise ThresholdNotApplicable(
            f"threshold search requires mean(h) < 0, got {hbar:.6g}", mean_h=hbar)
    if float(np.max(h)) <= 0:
        raise ThresholdNotApplicable(
            "h <= 0 has no finite threshold: every c < 0 is solvable")
    if not (0 < resolution < 1):
        raise ValueError("resolution must lie in (0, 1)")
    if not c_min < 0:
        raise ValueError("c_min must be negative")

    analysis = upper_solution_analysis(g, h)
    probes: list[tuple[float, bool]] = []

    def run(c: float) -> bool:
        ok = probe_negative_c(g, h, c, tol=tol, seed=seed,
                              newton_starts=newton_starts)
        probes.append((c, ok))
        log.debug("probe c=%.6g -> %s", c, "success" if ok else "failure")
        return ok

    c_success = None
    c_start = max(-analysis.guaranteed / 2.0, c_min / 2.0)
    for _ in range(6):
        if run(c_start):
            c_success = c_start
            break
        c_start /= 4.0
    if c_success is None:
        raise NoSuccessfulProbe(
            "no certified solution even for c close to 0", last_c=c_start)

    c_fail = None
    c_try = 4.0 * c_success
    while len(probes) < max_probes:
        if c_try <= c_min:
            if run(c_min):
                return _estimate(probes, (c_min, c_min), truncated=True)
            c_fail = c_min
            break
        if run(c_try):
            c_success = c_try
            c_try *= 4.0
        else:
            c_fail = c_try
            break
    if c_fail is None:
        return _estimate(probes, (c_try, c_success), truncated=True)

    while (abs(c_fail - c_success) > resolution * max(1.0, abs(c_fail))
           and len(probes) < max_probes):
        mid = 0.5 * (c_fail + c_success)
        if run(mid):
            c_success = mid
        else:
            c_fail = mid
    return _estimate(probes, (c_fail, c_success), truncated=False)


def _estimate(probes, bracket, truncated) -> ThresholdEstimate:
    fails = [c for c, ok in probes if not ok]
    wins = [c for c, ok in probes if ok]
    consistent = (not fails or not wins) or max(fails) < min(wins)
    return ThresholdEstimate(bracket=bracket, truncated=truncated,
                             probes=tuple(probes), consistent=consistent)
