"""Exception hierarchy shared by all modules."""


class NLSPeaksError(Exception):
    """Base class for every error raised by the package."""


class BracketFailure(NLSPeaksError):
    pass


class ToleranceNotReached(NLSPeaksError):
    pass


class QuadratureDivergence(NLSPeaksError):
    pass


class InadmissibleBeta(NLSPeaksError, ValueError):
    pass


class FitDegenerate(NLSPeaksError):
    pass


class TailUnderflow(NLSPeaksError):
    pass


class FloorViolation(NLSPeaksError, ValueError):
    pass


class SignChange(NLSPeaksError):
    pass


class MissingRho(NLSPeaksError, ValueError):
    pass


class BoundaryMaximizer(NLSPeaksError):
    """The maximum of a reduced energy sits on the window boundary."""

    def __init__(self, message, location=None, value=None):
        super().__init__(message)
        self.location = location
        self.value = value


class BoxTooSmall(NLSPeaksError):
    pass


class NewtonStall(NLSPeaksError):
    pass


class LineSearchFailure(NLSPeaksError):
    pass


class ConstraintRankDeficiency(NLSPeaksError):
    pass


class NonContraction(NLSPeaksError):
    pass


class UnconvergedBase(NLSPeaksError):
    pass


class SingularShift(NLSPeaksError):
    pass


class DomainClipped(NLSPeaksError):
    pass


class InsufficientData(NLSPeaksError):
    pass


class ConfigError(NLSPeaksError):
    """Invalid experiment configuration; ``path`` names the offending key."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class TaskError(NLSPeaksError):
    pass
