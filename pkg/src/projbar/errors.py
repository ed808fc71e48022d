"""Exception hierarchy shared by every module."""


class ProjbarError(Exception):
    """Base class for all library errors."""


class DomainError(ProjbarError, ValueError):
    """A scalar argument lies outside the range where a formula is defined."""


class NotInteriorError(ProjbarError, ValueError):
    """A point is not in the open domain of a barrier."""


class ConstructionError(ProjbarError, ValueError):
    """Barrier data do not describe a regular convex set."""


class UnsupportedCapabilityError(ProjbarError, NotImplementedError):
    """The barrier does not provide the requested derivative."""


class DualUndefinedError(ProjbarError, RuntimeError):
    """The dual function could not be evaluated at the requested point."""


class OutsideBijectionError(ProjbarError, ValueError):
    """The point lies outside the domain of the duality map."""


class OutsideModelDomainError(ProjbarError, ValueError):
    """The point lies outside the domain of the projective quadratic model."""


class InfeasibleStepError(ProjbarError, RuntimeError):
    """The projective step equation has no admissible root."""


class NonConvergenceError(ProjbarError, RuntimeError):
    """An iterative method hit its iteration cap.

    The partial trace (if any) is attached as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
