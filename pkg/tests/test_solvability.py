"""The classifier and the negative-c threshold search."""

import math

import numpy as np
import pytest

from kwgraph import ProblemInstance, Verdict, classify, estimate_threshold, solve
from kwgraph.errors import NoSuccessfulProbe, ThresholdNotApplicable
from kwgraph.solvability import probe_negative_c
from helpers import k2, random_connected_graph, sign_changing_h


def names_of(verdict):
    return [c.name for c in verdict.conditions]


def test_c_zero_verdicts():
    g = k2()
    v = classify(ProblemInstance(graph=g, h=np.array([1.0, -2.0]), c=0.0))
    assert v.verdict is Verdict.SOLVABLE
    assert names_of(v) == ["mean_h_negative", "h_changes_sign"]
    assert all(c.passed for c in v.conditions)

    for h in ([2.0, -1.0], [-1.0, -2.0], [1.0, -1.0]):
        v = classify(ProblemInstance(graph=g, h=np.array(h), c=0.0))
        assert v.verdict is Verdict.NOT_SOLVABLE
        assert not all(c.passed for c in v.conditions)


def test_c_positive_verdicts():
    g = k2()
    v = classify(ProblemInstance(graph=g, h=np.array([1.0, -2.0]), c=0.7))
    assert v.verdict is Verdict.SOLVABLE
    assert names_of(v) == ["h_positive_somewhere"]
    v = classify(ProblemInstance(graph=g, h=np.array([-1.0, -2.0]), c=0.7))
    assert v.verdict is Verdict.NOT_SOLVABLE


def test_c_negative_verdicts():
    g = k2()
    # mean(h) >= 0 is fatal
    v = classify(ProblemInstance(graph=g, h=np.array([2.0, -1.0]), c=-0.5))
    assert v.verdict is Verdict.NOT_SOLVABLE
    assert names_of(v) == ["mean_h_negative"]
    # h <= 0: every c < 0 works
    v = classify(ProblemInstance(graph=g, h=np.array([-1.0, -2.0]), c=-123.0))
    assert v.verdict is Verdict.SOLVABLE
    assert "h_nonpositive" in names_of(v)
    # sign-changing h inside the certified range (range is 1/48 here)
    v = classify(ProblemInstance(graph=g, h=np.array([1.0, -2.0]), c=-0.01))
    assert v.verdict is Verdict.GUARANTEED_RANGE
    assert v.guaranteed_range == pytest.approx(1.0 / 48.0)
    assert abs(-0.01) < v.guaranteed_range
    # below the certified range the verdict is honest about not knowing
    v = classify(ProblemInstance(graph=g, h=np.array([1.0, -2.0]), c=-0.05))
    assert v.verdict is Verdict.UNKNOWN
    assert v.bracket is not None
    lo, hi = v.bracket
    assert lo == -0.05 and lo < hi < 0
    assert hi == pytest.approx(-v.guaranteed_range, rel=1e-5)


def test_classifier_agrees_with_the_solvers():
    rng = np.random.default_rng(30)
    hits = {Verdict.SOLVABLE: 0, Verdict.GUARANTEED_RANGE: 0,
            Verdict.NOT_SOLVABLE: 0}
    for _ in range(30):
        g = random_connected_graph(rng, int(rng.integers(2, 10)))
        h = sign_changing_h(rng, g)
        c = float(rng.choice([0.0, rng.uniform(0.1, 2.0),
                              -rng.uniform(0.001, 0.02)]))
        p = ProblemInstance(graph=g, h=h, c=c)
        v = classify(p)
        if v.verdict in (Verdict.SOLVABLE, Verdict.GUARANTEED_RANGE):
            r = solve(p, seed=2)
            assert r.residual_inf <= 1e-8
            hits[v.verdict] += 1
        elif v.verdict is Verdict.NOT_SOLVABLE:
            hits[v.verdict] += 1
    assert hits[Verdict.SOLVABLE] > 0


def test_classify_handles_extreme_inputs_without_raising():
    g = k2()
    for h, c in [([1e300, -2e300], 0.0), ([1e-300, -2e-300], -1.0),
                 ([1.0, -2.0], -1e308), ([1.0, -1.0 - 1e-15], 0.0)]:
        v = classify(ProblemInstance(graph=g, h=np.array(h), c=c))
        assert isinstance(v.verdict, Verdict)


def test_probe_reports_search_outcome():
    g = k2()
    h = np.array([1.0, -2.0])
    assert probe_negative_c(g, h, -0.01)          # inside certified range
    assert probe_negative_c(g, h, -0.05)          # Newton fallback territory
    assert not probe_negative_c(g, h, -0.5)       # beyond the threshold
    assert not probe_negative_c(g, h, -0.5, newton_starts=3)


def test_threshold_bracket_for_k2():
    est = estimate_threshold(k2(), np.array([1.0, -2.0]), resolution=1e-2,
                             newton_starts=8)
    lo, hi = est.bracket
    assert lo < hi < 0
    assert not est.truncated
    assert est.consistent
    # the found bracket must contain the failure/success transition
    assert any(c == hi and ok for c, ok in est.probes)
    assert any(c == lo and not ok for c, ok in est.probes)
    # bracket width honors the requested relative resolution
    assert abs(lo - hi) <= 1e-2 * max(1.0, abs(lo))
    # the certified constructive range is an inner bound for the threshold
    assert hi <= -1.0 / 48.0 + 1e-9


def test_threshold_truncates_for_nonpositive_like_reach():
    # h barely positive somewhere: threshold is far out, search hits c_min
    est = estimate_threshold(k2(), np.array([1e-9, -2.0]), c_min=-8.0,
                             resolution=0.5, newton_starts=4)
    assert est.truncated
    assert est.bracket == (-8.0, -8.0)
    assert est.consistent


def test_threshold_validation():
    g = k2()
    with pytest.raises(ThresholdNotApplicable):
        estimate_threshold(g, np.array([2.0, -1.0]))
    with pytest.raises(ThresholdNotApplicable):
        estimate_threshold(g, np.array([-1.0, -2.0]))
    with pytest.raises(ValueError):
        estimate_threshold(g, np.array([1.0, -2.0]), resolution=0.0)
    with pytest.raises(ValueError):
        estimate_threshold(g, np.array([1.0, -2.0]), resolution=2.0)
    with pytest.raises(ValueError):
        estimate_threshold(g, np.array([1.0, -2.0]), c_min=1.0)
