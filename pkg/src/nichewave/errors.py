"""Exception taxonomy shared across the package."""


class NichewaveError(Exception):
    """Base class for all package errors."""


class ConfigError(NichewaveError):
    """Invalid configuration (bad key, bad value, schema violation)."""


class InvalidKernelError(NichewaveError):
    """Kernel samples are non-finite or structurally unusable."""


class KernelHypothesisError(NichewaveError):
    """A required kernel hypothesis (H1/H2/H5) is violated."""


class InfiniteMomentError(NichewaveError):
    """Requested kernel moment diverges."""


class UnderResolvedKernelError(NichewaveError):
    """Kernel support is finer than the grid spacing."""


class ResourceLimitError(NichewaveError):
    """Requested discretization exceeds configured size limits."""


class IrreducibilityError(NichewaveError):
    """Discrete operator is reducible; Perron iteration inapplicable."""


class NonConvergenceError(NichewaveError):
    """Iteration hit its budget. Carries the last certified bracket."""

    def __init__(self, message, bracket=None, iterations=None):
        super().__init__(message)
        self.bracket = bracket
        self.iterations = iterations


class DiscretizationInconsistencyError(NichewaveError):
    """A structural monotonicity that holds exactly in theory failed
    beyond certified uncertainty; indicates a discretization bug."""


class SupersolutionConstructionError(NichewaveError):
    """No admissible decay exponent found (kernel/growth mismatch)."""


class UniquenessViolationError(NichewaveError):
    """Monotone iterations from below and above disagree."""


class MonotonicityViolationError(NichewaveError):
    """Time iterates violated pointwise comparison beyond slack."""


class StepSizeError(NichewaveError):
    """User time step exceeds the monotone-stability bound."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class NumericalFailureError(NichewaveError):
    """NaN/overflow or a broken certificate mid-run."""
