"""Exception hierarchy shared by every bellgate module."""


class BellgateError(Exception):
    """Base class for all library errors."""


class CapExceeded(BellgateError):
    """Strategy enumeration would exceed the configured cap."""


class ModelInvalid(BellgateError, ValueError):
    """Detection model or noise parameter out of range."""


class ScenarioMismatch(BellgateError, ValueError):
    pass


class SolverFailure(BellgateError):
    """The LP solver broke down numerically (distinct from infeasibility)."""


class NoViolation(BellgateError):
    """Quantum correlations never leave the local polytope."""


class NotUniversal(BellgateError):
    """Inequality's (no-result, no-result) weights do not sum to its bound."""


class NotOnBoundary(BellgateError):
    """The quantum point at the reported efficiency is not on the local boundary."""


class DegenerateFace(BellgateError):
    """No usable normal direction remains after projecting out the face."""


class CertificationFailure(BellgateError):
    """An extracted hyperplane is violated by some deterministic strategy."""
