"""Exception types shared across the package."""


class UromError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(UromError):
    """Vector or matrix shapes disagree with the declared dimension."""


class UnboundedLMOError(UromError):
    """Linear minimization requested on an unbounded set with no radius bound."""


class MetricCompatibilityError(UromError):
    """Set/metric combination without a supported projection (e.g. simplex + dense B)."""


class AssumptionViolatedError(UromError):
    """A structural assumption needed by the requested quantity fails.

    Raised e.g. when inverting a smoothed-curvature profile that is not
    strictly increasing (flat kappa == 0 profile).
    """


class InnerSolveError(UromError):
    """Inner subproblem solver failed to reach the requested residual."""

    def __init__(self, message, best_y=None, residual=None, iters=None):
        super().__init__(message)
        self.best_y = best_y
        self.residual = residual
        self.iters = iters


class LineSearchStalledError(UromError):
    """Regularization line search exhausted its doubling budget."""

    def __init__(self, message, M_last=None, diagnostics=None):
        super().__init__(message)
        self.M_last = M_last
        self.diagnostics = diagnostics or {}


class SamplingError(UromError):
    """Pair sampling for curvature estimation failed (domain too tight for r)."""


class MalformedSpecError(UromError):
    """An instance/config spec string or JSON document cannot be parsed."""
