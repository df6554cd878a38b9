"""Exception hierarchy shared across the pipeline.

Everything raised on bad input data or bad runtime state derives from
DataError so the CLI can map it to a single exit code.
"""


class DataError(Exception):
    """Base class for data and runtime errors (CLI exit code 1)."""


# file format / IO
class MalformedHeader(DataError):
    pass


class TruncatedPayload(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class IoFailure(DataError):
    pass


# embedding geometry
class ZeroNormRow(DataError):
    def __init__(self, index: int):
        super().__init__(f"row {index} has zero norm")
        self.index = index


class DimMismatch(DataError):
    pass


class NotNormalized(DataError):
    pass


# sampling / clustering
class TooFewSamples(DataError):
    pass


class NotEnoughPoints(DataError):
    pass


class EmptyCluster(DataError):
    pass


# pseudo-labelling
class DuplicateAnchor(DataError):
    pass


class IndexOutOfRange(DataError):
    pass


class MissingGroundTruth(DataError):
    pass


# semi-supervised sets / losses
class TopKExceedsClasses(DataError):
    pass


class EmptyBatch(DataError):
    pass


# training
class NonFiniteGradient(DataError):
    pass


# synthetic generation
class RejectionBudgetExceeded(DataError):
    pass
