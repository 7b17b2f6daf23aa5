"""Exception hierarchy shared by all subpackages."""


class SemitoricError(Exception):
    """Base class for all package errors."""


class DomainError(SemitoricError):
    """A point violates a chart invariant (off the constraint manifold)."""


class IntegrationError(SemitoricError):
    """Adaptive integration failed; carries the last good state."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class NonCompactFiberError(SemitoricError):
    """First-return shooting hit the time cap without closing up."""


class ClassificationUncertainError(SemitoricError):
    """Eigenvalue pattern too close to an axis to classify reliably."""

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class NonClosedFormError(SemitoricError):
    """Plaquette defect of the period form exceeded tolerance."""


class ResolutionInsufficientError(SemitoricError):
    """Least-squares fit residual exceeded the requested tolerance."""


class UndecidableAtDegreeError(SemitoricError):
    """Series truncation too short to apply a fundamental-domain rule."""


class TransportFailureError(SemitoricError):
    """Lattice/period transport produced a non-integer transition."""

    def __init__(self, message, location=None, residual=None):
        super().__init__(message)
        self.location = location
        self.residual = residual


class SolverError(SemitoricError):
    """Eigensolver did not meet its residual contract."""


class ConfigError(SemitoricError):
    """Invalid run configuration (CLI exit code 2)."""
