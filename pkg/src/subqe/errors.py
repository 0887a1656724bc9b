"""Exception hierarchy shared across the toolkit."""


class SubqeError(Exception):
    """Base class for all toolkit errors."""


class MalformedTimestamp(SubqeError):
    pass


class MissingIndex(SubqeError):
    pass


class EmptyBlock(SubqeError):
    pass


class DimMismatch(SubqeError):
    pass


class MalformedRow(SubqeError):
    pass


class LengthMismatch(SubqeError):
    pass


class EmptyAfterOov(SubqeError):
    pass


class EmptyMatrix(SubqeError):
    pass


class EmptyLexicon(SubqeError):
    pass


class TooShort(SubqeError):
    pass


class CorpusTooSmall(SubqeError):
    pass


class NoNeighborInWindow(SubqeError):
    pass


class NoEligibleTrigram(SubqeError):
    pass


class SingleClassData(SubqeError):
    pass


class OutOfRangeScore(SubqeError):
    pass


class ShapeMismatch(SubqeError):
    pass


class NonFiniteLoss(SubqeError):
    pass


class NoPositives(SubqeError):
    pass


class ConfigError(SubqeError):
    pass
