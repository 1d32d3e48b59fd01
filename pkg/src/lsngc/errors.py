"""Exception types raised across the package."""


class LsngcError(Exception):
    """Base class for all package errors."""


# core
class ConstantSeries(LsngcError, ValueError):
    pass


class ParseError(LsngcError, ValueError):
    pass


class RaggedRows(LsngcError, ValueError):
    pass


class TooShort(LsngcError, ValueError):
    pass


class IoError(LsngcError, OSError):
    pass


# embedding
class SeriesTooShort(LsngcError, ValueError):
    pass


class BadIndex(LsngcError, IndexError):
    pass


# grbf
class TooFewPoints(LsngcError, ValueError):
    pass


class DimensionMismatch(LsngcError, ValueError):
    pass


# causality
class ShapeMismatch(LsngcError, ValueError):
    pass


class DegenerateSystem(LsngcError, ArithmeticError):
    pass


class BadDegreesOfFreedom(LsngcError, ValueError):
    pass


class InsufficientSamples(LsngcError, ValueError):
    def __init__(self, message, min_length=None):
        super().__init__(message)
        self.min_length = min_length


# simulate
class DivergedTrajectory(LsngcError, ArithmeticError):
    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed


# evaluate
class DegenerateTruth(LsngcError, ValueError):
    pass


class DegenerateNeighborhood(UserWarning):
    """All nearest neighbours of a state sit at distance zero; uniform weights are used."""
