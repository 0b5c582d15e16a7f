"""Exception types shared across the package."""


class MaurerError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(MaurerError):
    pass


class UnknownAction(MaurerError):
    pass


class InvalidParams(MaurerError):
    pass


class RangeViolation(MaurerError):
    pass


class ThresholdExceeded(MaurerError):
    """An exhaustive enumeration would visit more states than allowed."""


class SizeExceeded(MaurerError):
    pass


class StepCapExceeded(MaurerError):
    pass


class NonContiguousDomain(MaurerError):
    pass


class MilestoneError(MaurerError, AssertionError):
    """A replayed computation violated one of the expected milestone facts."""

    def __init__(self, index: int, message: str):
        super().__init__(f"milestone {index}: {message}")
        self.index = index
