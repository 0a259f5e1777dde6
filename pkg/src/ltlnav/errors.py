"""Exception classes shared across the package."""


class LtlnavError(Exception):
    """Base class for all package errors."""


class LtlSyntaxError(LtlnavError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class NextUnsupportedError(LtlSyntaxError):
    pass


class CapacityExceededError(LtlnavError):
    pass


class EmptyAutomatonError(LtlnavError):
    pass


class OutOfBoundsError(LtlnavError):
    pass


class NoPathFoundError(LtlnavError):
    pass


class NoAcceptingReachedError(LtlnavError):
    pass


class NoCycleFoundError(LtlnavError):
    pass


class NoPlanFoundError(LtlnavError):
    pass


class UnlabeledSegmentEndError(LtlnavError):
    pass


class RadiusTooLargeError(LtlnavError):
    pass


class ConfigError(LtlnavError):
    pass
