"""Exception hierarchy shared by all nomo_lab modules."""


class NomoError(Exception):
    """Base class for every error raised by nomo_lab."""


# -- models -----------------------------------------------------------------

class ModelError(NomoError, ValueError):
    """Invalid harmonic model definition."""


class NegativeSpringError(ModelError):
    pass


class DisconnectedModelError(ModelError):
    pass


class UnstableModelError(ModelError):
    pass


# -- coordinate transforms ---------------------------------------------------

class TransformError(NomoError, ValueError):
    """Invalid absolute <-> internal coordinate transform."""


class BadCmRowError(TransformError):
    pass


class BadInternalRowError(TransformError):
    pass


class SingularTransformError(TransformError):
    pass


class ReferenceIndexError(TransformError, IndexError):
    pass


class FrameMismatchError(NomoError, ValueError):
    """Objects expressed in different coordinate frames were combined."""


class NotTranslationInvariantError(NomoError, ValueError):
    pass


# -- gaussian algebra --------------------------------------------------------

class NotPositiveDefiniteError(NomoError, ValueError):
    pass


class UnsupportedDegreeError(NomoError, ValueError):
    pass


class NotSymmetricPairError(NomoError, ValueError):
    pass


# -- oracles and optimization ------------------------------------------------

class DimensionTooLargeError(NomoError, ValueError):
    pass


class NonConvergentError(NomoError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InfeasibleParamsError(NomoError, ValueError):
    pass


class DidNotConvergeError(NomoError, RuntimeError):
    """Raised only in strict mode; carries the best-so-far result."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
