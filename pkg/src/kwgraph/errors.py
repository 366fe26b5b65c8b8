"""Exception taxonomy shared across the package.

Every error carries an ``exit_code`` used by the command line front end:
2 means the problem is provably not solvable, 3 means a solver failed to
converge or certify, and 1 covers invalid input of any kind.
"""

from __future__ import annotations


class KWError(Exception):
    """Base class for all package errors."""

    exit_code = 1

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


# ---------------------------------------------------------------------------
# graph and problem validation

class GraphFormatError(KWError):
    """Malformed graph description (missing keys, unknown vertex names, ...)."""


class DuplicateVertex(KWError):
    """A vertex name occurs more than once."""


class SelfLoop(KWError):
    """An edge joins a vertex to itself; b(x, x) > 0 is not allowed."""


class SymmetryViolation(KWError):
    """The same vertex pair is listed with conflicting weights."""


class NonPositiveWeight(KWError):
    """An edge weight is zero, negative, or not finite."""


class NonPositiveMeasure(KWError):
    """A vertex measure is zero, negative, or not finite."""


class Disconnected(KWError):
    """The graph is not connected."""


class DimensionMismatch(KWError):
    """A vertex function does not align with the graph's vertex set."""


class GraphTooLarge(KWError):
    """The graph exceeds the size supported by the dense linear algebra."""


class ZeroH(KWError):
    """The coefficient function h vanishes identically."""


class ProblemFormatError(KWError):
    """Malformed problem description."""


class CLIInputError(KWError):
    """Invalid command line usage."""


# ---------------------------------------------------------------------------
# linear algebra and spectral certificates

class NumericalFailure(KWError):
    """A linear algebra routine produced a result outside its certified tolerance."""

    exit_code = 3


class NotMeanZero(KWError):
    """Right hand side has a nonzero weighted mean, so Lu = f has no solution."""


class NonPositiveShift(KWError):
    """The potential k in L + k must be strictly positive somewhere (and >= 0)."""


# ---------------------------------------------------------------------------
# solvers

class NotSolvable(KWError):
    """The instance violates a necessary solvability condition."""

    exit_code = 2


class NoConvergence(KWError):
    """An iterative solver stopped without certifying a solution.

    The best iterate found, if any, is attached as ``report``.
    """

    exit_code = 3

    def __init__(self, message: str, report=None, **context):
        super().__init__(message, **context)
        self.report = report


class SingularJacobian(KWError):
    """Newton linearization is singular beyond recoverable regularization."""

    exit_code = 3


class MultiplierSignError(KWError):
    """Recovered Lagrange multiplier has the wrong sign."""

    exit_code = 3


class MultiplierValueError(KWError):
    """Recovered Lagrange multiplier is outside its certified range."""

    exit_code = 3


class MeanNotNegative(KWError):
    """Construction requires the weighted mean of h to be negative."""

    exit_code = 2


class ConstructionFailed(KWError):
    """A sub- or supersolution construction failed its pointwise check."""

    exit_code = 3


class MonotonicityViolated(KWError):
    """The monotone iteration left its certified bracket."""

    exit_code = 3


# ---------------------------------------------------------------------------
# oracle and threshold search

class TooManyVertices(KWError):
    """Brute force enumeration only supports very small graphs."""


class BoxTooSmall(KWError):
    """A root was located at the edge of the search box; enlarge the box."""


class NoSuccessfulProbe(KWError):
    """Threshold search found no c < 0 with a certifiable solution."""

    exit_code = 3


class ThresholdNotApplicable(KWError):
    """Threshold search requires mean(h) < 0 and h positive somewhere."""
