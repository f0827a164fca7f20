"""Exception types raised across levilab."""


class ParameterError(ValueError):
    """An argument falls outside the operation's admissible range."""


class DegenerateMapError(ValueError):
    """A 2x2 matrix is (numerically) singular."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge.

    ``diagnostics`` carries whatever the failing routine knew at the time.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ReductionError(RuntimeError):
    """Reduction to the fundamental domain hit its iteration cap."""


class EmptySystemError(RuntimeError):
    """No candidate word produced a valid contraction."""


class NoWitnessError(ValueError):
    """No line bundle L with 4L + K = 2E exists in the numerical lattice."""


class DependencyError(RuntimeError):
    """A required upstream estimate is missing or unusable."""
