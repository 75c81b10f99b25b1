"""Exception hierarchy shared by all kirinlab modules."""

from __future__ import annotations


class KirinError(ValueError):
    """Base class for input and model errors raised by kirinlab."""


class MalformedLine(KirinError):
    def __init__(self, line_no: int, line: str, reason: str = "malformed line"):
        self.line_no = line_no
        self.line = line
        super().__init__(f"line {line_no}: {reason}: {line!r}")


class ConflictingRelationship(KirinError):
    def __init__(self, line_no: int, pair: tuple[int, int], existing: str, new: str):
        self.line_no = line_no
        self.pair = pair
        super().__init__(
            f"line {line_no}: AS pair {pair[0]}|{pair[1]} already labelled {existing}, got {new}"
        )


class SelfLoop(KirinError):
    def __init__(self, line_no: int, asn: int):
        self.line_no = line_no
        super().__init__(f"line {line_no}: self-loop on AS{asn}")


class InvalidAddress(KirinError):
    def __init__(self, line_no: int, value: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: not an IPv6 address: {value!r}")


class InvalidRange(KirinError):
    pass


class NoCapacity(KirinError):
    pass


class ParameterOutOfRange(KirinError):
    pass


class BigMTooSmall(KirinError):
    pass


class TooLarge(KirinError):
    pass


class IncomparableSweep(KirinError):
    pass


class NonMonotonicTimestamps(KirinError):
    def __init__(self, index: int, previous: int, current: int):
        self.index = index
        super().__init__(f"event {index}: timestamp {current} precedes {previous}")


class UnknownNeighbor(KirinError):
    pass


class MismatchedInputs(KirinError):
    pass
