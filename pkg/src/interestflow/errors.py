"""Exception types raised across the pipeline."""


class InterestflowError(Exception):
    """Base class for every error raised by this package."""


class RecordError(InterestflowError, ValueError):
    pass


class MalformedRecord(RecordError):
    """A dump line that is not a valid record object."""


class MissingField(RecordError):
    """A record object lacking a required key."""


class CatalogError(InterestflowError, ValueError):
    pass


class DuplicateEntry(CatalogError):
    pass


class UnknownTopicClass(CatalogError):
    pass


class EmptyInput(InterestflowError, ValueError):
    pass


class InsufficientSupport(InterestflowError, ValueError):
    """Too few nonzero bins for the requested fit."""


class NonConvergence(InterestflowError, RuntimeError):
    pass


class ZeroActivity(InterestflowError, ValueError):
    pass


class DegenerateNormalization(InterestflowError, ArithmeticError):
    """Sparse normalization with a correction term >= 1."""


class ZeroVector(InterestflowError, ValueError):
    pass


class TooFewBins(InterestflowError, ValueError):
    pass


class MisalignedSequences(InterestflowError, ValueError):
    pass


class UncatalogedSubreddit(InterestflowError, KeyError):
    pass


class EmptyPopulation(InterestflowError, ValueError):
    pass


class InvalidSpec(InterestflowError, ValueError):
    pass


class ConfigError(InterestflowError, ValueError):
    pass
