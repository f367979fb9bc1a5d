"""Exception types shared across the package."""


class KllabError(Exception):
    """Base class for all library failures."""


class DomainError(KllabError):
    """Moduli or hull that do not describe a valid domain."""


class ConvergenceError(KllabError):
    """Collocation residual stayed above tolerance at the largest basis order."""

    def __init__(self, message: str, residual: float = float("nan"), order: int = 0):
        super().__init__(message)
        self.residual = residual
        self.order = order


class PoleProximityError(KllabError):
    """Evaluation point too close to the boundary pole of the field."""


class PoleCollisionError(KllabError):
    """Green function requested with coincident arguments."""


class DegeneratePeriodsError(KllabError):
    """Period matrix failed to be positive definite."""


class StepRejected(KllabError):
    """Chain step refused; the caller should retry with a smaller step."""


class StepCollapse(KllabError):
    """Adaptive step size fell below the configured minimum."""

    def __init__(self, message: str, snapshot: dict | None = None):
        super().__init__(message)
        self.snapshot = snapshot or {}


class LeftDomainError(KllabError):
    """A flowed point left the closed unit disk."""


class TraceUnresolved(KllabError):
    """Trace point failed the round-trip check."""


class BranchFailure(KllabError):
    """Closed-form branch selection did not converge."""


class InsufficientPaths(KllabError):
    """Too few sample paths survived the conditioning event."""


class IncrementUnderflow(KllabError):
    """Conformal-radius increment below solver accuracy."""
