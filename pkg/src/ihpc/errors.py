"""Exception hierarchy shared by all ihpc subsystems."""


class IhpcError(Exception):
    """Base class for all ihpc errors."""


class ArgumentError(IhpcError, ValueError):
    """A caller-supplied value violates a precondition."""


class SetupError(IhpcError):
    """Environment is not usable (missing/unwritable directory, bad config)."""


class TransportError(IhpcError):
    """A fabric write or read failed at the filesystem level."""


class TimeoutError(IhpcError):
    """A blocking fabric operation did not complete in time."""


class ProtocolError(IhpcError):
    """On-disk message bytes do not match the wire format."""


class CapacityError(IhpcError):
    """Admission denied by the scheduling policy.

    Carries the constraint that bound (``reason``) and the effective cap.
    """

    def __init__(self, reason, cap):
        super().__init__(f"admission held: {reason} (cap={cap})")
        self.reason = reason
        self.cap = cap


class NotFoundError(IhpcError):
    """A referenced job or file does not exist."""


class StateError(IhpcError):
    """Operation invalid for the object's current lifecycle state."""


class NotReadyError(IhpcError):
    """Results requested before the job reached a terminal state."""


class LaunchError(IhpcError):
    """Spawning one or more rank processes failed."""
