"""Exception types shared across the package."""


class BoltsimError(Exception):
    """Base class for package errors."""


class NonPositiveDuration(BoltsimError):
    """Trajectory duration must be > 0."""


class NoConvergence(BoltsimError):
    """IK iteration budget exhausted without reaching tolerance."""


class JointLimitViolation(BoltsimError):
    """IK solution pinned against a joint limit."""


class UnreachableTarget(BoltsimError):
    """A step trajectory endpoint has no IK solution."""


class NotEngaged(BoltsimError):
    """Teleop motion mapping requested before engagement anchored."""


class InvalidTransition(BoltsimError):
    """Operator/plant event not legal in the current supervisor phase."""


class SpecError(BoltsimError):
    """Scenario file failed schema validation."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class MalformedMessage(BoltsimError):
    """Wire message failed to parse or validate."""


class StaleSequence(BoltsimError):
    """Command envelope with a duplicate or out-of-order sequence number."""


class ClientDisconnected(BoltsimError):
    """Telemetry client went away mid-publish."""
