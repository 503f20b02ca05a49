"""Exception hierarchy shared by every module."""


class CausalBandsError(Exception):
    """Base class for all errors raised by the package."""


class InputError(CausalBandsError, ValueError):
    """Malformed or mismatched input (shapes, names, probabilities)."""


class StructuralError(CausalBandsError, ValueError):
    """The graph violates an ADMG invariant (cycle, self-loop, duplicate edge)."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class CapabilityError(CausalBandsError, NotImplementedError):
    """The request is well formed but outside what the method supports."""


class CapacityError(CausalBandsError):
    """A response-profile space exceeds the configured size cap."""

    def __init__(self, message, component=None, size=None):
        super().__init__(message)
        self.component = component
        self.size = size


class PositivityError(CausalBandsError):
    """A required conditional is defined on a zero-probability event."""


class CompositionError(CausalBandsError):
    """A factorization still holds degenerate factors without an explicit categorical."""


class InfeasibleError(CausalBandsError):
    """The observational constraints admit no compatible model."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SolverError(CausalBandsError, RuntimeError):
    """The LP solver stalled or failed its post-solve verification."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class OptimizationFailure(CausalBandsError, RuntimeError):
    """The relaxed trainer never produced a feasible iterate."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class InvariantError(CausalBandsError, AssertionError):
    """An internal consistency check on aggregated bounds failed."""


class MismatchError(InputError):
    """Graph and data disagree on variable names or cardinalities."""
