"""Exception hierarchy.

Every error raised on bad input derives from :class:`CoverageError`, itself a
``ValueError``, so callers can catch either.
"""


class CoverageError(ValueError):
    """Base class for all covmdp input errors."""


# population
class AllZeroWeights(CoverageError):
    pass


class NegativeWeight(CoverageError):
    pass


class NonFiniteWeight(CoverageError):
    pass


class ExponentNotSummable(CoverageError):
    pass


class BadTolerance(CoverageError):
    pass


class NonPositiveRate(CoverageError):
    pass


class ZeroSpecies(CoverageError):
    pass


class TruncationTooLarge(CoverageError):
    """The requested tail tolerance needs more species than ``max_species``."""


# sampling
class ZeroSampleSize(CoverageError):
    pass


class NonPositiveIntensity(CoverageError):
    pass


class DimensionMismatch(CoverageError):
    pass


class WrongMode(CoverageError):
    pass


# moments
class BadOccupancyLevel(CoverageError):
    pass


# scaling
class GammaOutOfRange(CoverageError):
    pass


class NonPositiveVariance(CoverageError):
    pass


class EmptyGrid(CoverageError):
    pass


class ScalingDomainError(CoverageError):
    pass


# conditions
class GridTooSmall(CoverageError):
    pass


# inference
class AlphaOutOfRange(CoverageError):
    pass


class NonPositiveThreshold(CoverageError):
    pass


# simulation
class ZeroReps(CoverageError):
    pass


class TooFewReps(CoverageError):
    pass


class EmptySubset(CoverageError):
    pass


class IndexOutOfRange(CoverageError):
    pass


# cli
class ConfigInvalid(CoverageError):
    pass
