"""IPv6 prefix arithmetic and sub-prefix enumeration."""

from __future__ import annotations

import enum
import ipaddress
from dataclasses import dataclass
from typing import Iterator

from ..errors import InvalidRange

_ALL = (1 << 128) - 1


def _mask(length: int) -> int:
    return _ALL ^ ((1 << (128 - length)) - 1)


@dataclass(frozen=True, slots=True)
class Ipv6Prefix:
    address: int
    length: int

    def __post_init__(self):
        if not 0 <= self.length <= 128:
            raise ValueError(f"prefix length out of range: {self.length}")
        if not 0 <= self.address <= _ALL:
            raise ValueError("address out of range")
        if self.address & ~_mask(self.length) & _ALL:
            raise ValueError(f"host bits set below /{self.length}")

    @classmethod
    def parse(cls, text: str) -> "Ipv6Prefix":
        net = ipaddress.IPv6Network(text.strip(), strict=True)
        return cls(int(net.network_address), net.prefixlen)

    def __str__(self) -> str:
        return f"{ipaddress.IPv6Address(self.address).compressed}/{self.length}"

    @property
    def sort_key(self) -> tuple[int, int]:
        """Enumeration order: shorter prefixes first, then ascending address."""
        return (self.length, self.address)

    def contains(self, other: "Ipv6Prefix") -> bool:
        return other.length >= self.length and (other.address & _mask(self.length)) == self.address

    def truncate(self, length: int) -> "Ipv6Prefix":
        """The covering prefix of the given (shorter or equal) length."""
        if length > self.length:
            raise ValueError("cannot truncate to a longer prefix")
        return Ipv6Prefix(self.address & _mask(length), length)

    def supernet(self) -> "Ipv6Prefix":
        if self.length == 0:
            raise ValueError("::/0 has no supernet")
        return self.truncate(self.length - 1)

    def sibling(self) -> "Ipv6Prefix":
        if self.length == 0:
            raise ValueError("::/0 has no sibling")
        return Ipv6Prefix(self.address ^ (1 << (128 - self.length)), self.length)


def _check_range(parent: Ipv6Prefix, max_len: int) -> int:
    if not parent.length <= max_len <= 128:
        raise InvalidRange(f"need {parent.length} <= max_len <= 128, got max_len={max_len}")
    return max_len - parent.length


def count_subroutes(parent: Ipv6Prefix, max_len: int = 48) -> int:
    """Distinct routes obtainable from ``parent`` down to ``max_len``: 2^(C+1) - 1."""
    c = _check_range(parent, max_len)
    return (1 << (c + 1)) - 1


def enumerate_subprefixes(parent: Ipv6Prefix, max_len: int = 48) -> Iterator[Ipv6Prefix]:
    """Every sub-prefix of ``parent`` up to ``max_len``, shortest first, addresses ascending."""
    _check_range(parent, max_len)
    for length in range(parent.length, max_len + 1):
        step = 1 << (128 - length)
        for k in range(1 << (length - parent.length)):
            yield Ipv6Prefix(parent.address + k * step, length)


def prefix_from_node(parent: Ipv6Prefix, h: int) -> Ipv6Prefix:
    """Map a 1-based heap index below ``parent`` (root = 1) to its prefix."""
    depth = h.bit_length() - 1
    length = parent.length + depth
    return Ipv6Prefix(parent.address | ((h - (1 << depth)) << (128 - length)), length)


class AggregationKind(enum.Enum):
    SIBLINGS = "siblings"
    COVERING = "covering"
    NONE = "none"


@dataclass(frozen=True)
class Aggregation:
    kind: AggregationKind
    prefix: Ipv6Prefix | None = None

    def __bool__(self) -> bool:
        return self.kind is not AggregationKind.NONE


def can_aggregate(a: Ipv6Prefix, b: Ipv6Prefix) -> Aggregation:
    """Whether two prefixes merge into one (siblings) or one already covers the other."""
    if a == b:
        return Aggregation(AggregationKind.NONE)
    if a.length == b.length and a.length > 0 and a.supernet() == b.supernet():
        return Aggregation(AggregationKind.SIBLINGS, a.supernet())
    if a.contains(b):
        return Aggregation(AggregationKind.COVERING, a)
    if b.contains(a):
        return Aggregation(AggregationKind.COVERING, b)
    return Aggregation(AggregationKind.NONE)
