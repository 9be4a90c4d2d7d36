"""
Exception types raised throughout the package.

All errors derive from CcSynthError so callers (and the command line
interface) can catch everything the library raises on purpose with a single
except clause.
"""


class CcSynthError(Exception):
    """
    Base class for all errors raised on purpose by cc_synth
    """
    pass


class DimensionMismatch(CcSynthError, ValueError):
    """
    Raised when vectors or matrices have inconsistent shapes
    """
    pass


class QuadratureFailure(CcSynthError):
    """
    Raised when the Fourier inversion quadrature exhausts its panel budget
    before the truncation test passes.
    """
    pass


class BracketFailure(CcSynthError):
    """
    Raised when the inverse CDF search finds no sign change within the
    maximal bracket around the mean.
    """
    pass


class DomainError(CcSynthError):
    """
    Raised when log Phi is requested at a point where Phi is numerically zero
    """
    pass


class NonConcaveInput(CcSynthError):
    """
    Raised by the sandwich algorithm when a chord lies above the function
    """
    pass


class BreakpointFailure(CcSynthError):
    """
    Raised when the slope-matching point cannot be bracketed
    """
    pass


class RowInfeasible(CcSynthError):
    """
    Raised when a polytope row cannot meet its chance constraint even at the
    best admissible input.

    Args:
        row: Index of the offending row.
        message: Human readable reason.
    """
    def __init__(self, row, message=None):
        self.row = row
        if message is None:
            message = "Constraint row {} is infeasible.".format(row)
        super(RowInfeasible, self).__init__(message)


class NotGaussian(CcSynthError):
    """
    Raised when a Gaussian-only construction receives a non-Gaussian law
    """
    pass


class DeltaTooLarge(CcSynthError):
    """
    Raised when the Gaussian one-shot program is requested with Delta > 0.5
    """
    pass


class NumericalBreakdown(CcSynthError):
    """
    Raised when a solver produces non-finite iterates
    """
    pass


class SubproblemFailed(CcSynthError):
    """
    Raised when a QP backend fails inside the convex-concave procedure
    """
    pass


class SchemaError(CcSynthError):
    """
    Raised when a problem file does not follow the schema.

    Args:
        path: Dotted path of the offending entry in the file, e.g.
            `disturbance.per_step[1].scale`.
        reason: Description of what is wrong with the entry.
    """
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super(SchemaError, self).__init__("{}: {}".format(path, reason))
