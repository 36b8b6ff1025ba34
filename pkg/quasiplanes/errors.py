__description__ = \
"""
Exceptions raised by quasiplanes.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"


class QuasiplanesError(Exception):
    """
    Base class for every error raised on purpose by this package.
    """
    pass


class BadConfig(QuasiplanesError, ValueError):
    pass


class BadSpec(QuasiplanesError, ValueError):
    pass


class DegenerateSimplex(QuasiplanesError, ValueError):
    pass


class DegenerateSamples(QuasiplanesError, ValueError):
    pass


class PointNotInSet(QuasiplanesError, ValueError):
    pass


class ScaleBelowResolution(QuasiplanesError, ValueError):
    pass


class MissingSamples(QuasiplanesError, ValueError):
    pass


class NotInjective(QuasiplanesError, ArithmeticError):
    """
    Raised when a sampled map sends two distinct samples to the same point,
    so the weak quasisymmetry constant is infinite.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ZeroLinearPart(QuasiplanesError, ValueError):
    pass


class DomainError(QuasiplanesError, ValueError):
    pass


class UnsupportedDimension(QuasiplanesError, ValueError):
    pass


class EpsilonTooLarge(QuasiplanesError, ValueError):
    pass


class HypothesisViolated(QuasiplanesError, ValueError):
    """
    An inequality check was given inputs outside its hypotheses.  The name of
    the failed precondition is kept on the exception.
    """

    def __init__(self, message, precondition=None):
        super().__init__(message)
        self.precondition = precondition


class ResolutionTooCoarse(QuasiplanesError, ValueError):
    pass


class UnresolvableCube(QuasiplanesError, ValueError):
    pass


class CollarViolation(QuasiplanesError, ValueError):
    pass
