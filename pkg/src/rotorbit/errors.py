"""Exception types raised across the package."""


class RotorbitError(Exception):
    """Base class for every error raised by rotorbit."""


class IdentityInput(RotorbitError):
    pass


class NotHyperbolic(RotorbitError):
    pass


class UnsupportedGenus(RotorbitError):
    pass


class BadIndex(RotorbitError):
    pass


class NonConvergence(RotorbitError):
    pass


class TrivialWord(RotorbitError):
    pass


class TangencyDetected(RotorbitError):
    pass


class NoIntersections(RotorbitError):
    pass


class DuplicateCurve(RotorbitError):
    pass


class StripsOverlap(RotorbitError):
    pass


class EmptySpec(RotorbitError):
    pass


class NotAreaPreserving(RotorbitError):
    pass


class NotSupporting(RotorbitError):
    pass


class NotInterior(RotorbitError):
    """Target vector is not interior to the candidate hull.

    ``direction`` is a nonzero vector u with u.(w_i - v) <= 0 for every
    candidate w_i, i.e. a hyperplane through v with all candidates on one side.
    """

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class NotFound(RotorbitError):
    """Periodic point search exhausted its budget. Not a disproof."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(RotorbitError):
    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


class TaskError(RotorbitError):
    def __init__(self, task, cause):
        super().__init__(f"task {task!r} failed: {type(cause).__name__}: {cause}")
        self.task = task
        self.cause = cause


class MissingArtifact(RotorbitError):
    pass
