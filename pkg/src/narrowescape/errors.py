"""Exception hierarchy shared by every module of the package."""


class NarrowEscapeError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(NarrowEscapeError, ValueError):
    pass


class OverlappingArcs(GeometryError):
    pass


class DegenerateArc(GeometryError):
    pass


class ArcTooLarge(GeometryError):
    pass


class CoincidentPoints(NarrowEscapeError, ValueError):
    pass


class SingularKernel(NarrowEscapeError, ValueError):
    pass


class ResonantFrequency(NarrowEscapeError, ValueError):
    pass


class RootFindFailure(NarrowEscapeError, RuntimeError):
    pass


class TooCloseToArc(NarrowEscapeError, ValueError):
    pass


class DegenerateSystem(NarrowEscapeError, ValueError):
    pass


class InvalidGap(NarrowEscapeError, ValueError):
    pass


class IllConditioned(NarrowEscapeError, RuntimeError):
    pass


class NonConvergent(NarrowEscapeError, RuntimeError):
    pass


class QuadratureFailure(NarrowEscapeError, RuntimeError):
    pass


class DegenerateEigenvalue(NarrowEscapeError, ValueError):
    pass


class MissingEigenpair(NarrowEscapeError, ValueError):
    pass


class DriftSolveFailure(NarrowEscapeError, RuntimeError):
    pass


class NoRootInWindow(NarrowEscapeError, RuntimeError):
    pass


class MultipleRootsSuspected(NarrowEscapeError, RuntimeError):
    pass


class StepTooLarge(NarrowEscapeError, ValueError):
    pass


class NonAbsorbing(NarrowEscapeError, RuntimeError):
    pass


class UsageError(NarrowEscapeError, ValueError):
    pass
