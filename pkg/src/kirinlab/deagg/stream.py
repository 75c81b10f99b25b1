"""Timed announce/withdraw streams generated from a schedule."""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from ..errors import ParameterOutOfRange
from ..topology import AS_TRANS, MAX_ASN
from .prefixes import Ipv6Prefix
from .schedule import AnnouncementSchedule

MAX_PATH_LEN = 255
MAX_COMMUNITIES = 255
DEFAULT_PATH_LEN = 251
DEFAULT_COMMUNITIES = 251


class Action(enum.Enum):
    ANNOUNCE = "announce"
    WITHDRAW = "withdraw"


class Mode(enum.Enum):
    BEST = "best"
    WORST = "worst"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        key = text.lower().replace("case", "").replace("-", "").replace("_", "")
        return cls(key)


class SegmentKind(enum.Enum):
    SEQUENCE = "sequence"
    SET = "set"


@dataclass(frozen=True, slots=True)
class AsPathSegment:
    kind: SegmentKind
    asns: tuple[int, ...]

    def __post_init__(self):
        if not self.asns:
            raise ValueError("AS path segment must not be empty")
        if self.kind is SegmentKind.SET and len(set(self.asns)) != len(self.asns):
            raise ValueError("AS_SET members must be unique")


@dataclass(frozen=True, slots=True)
class RouteEvent:
    timestamp: int
    session_id: str
    action: Action
    prefix: Ipv6Prefix
    path: tuple[AsPathSegment, ...] = ()
    large_communities: tuple[tuple[int, int, int], ...] = ()
    origin: int | None = None
    atomic_aggregate: bool = False
    aggregator: tuple[int, int] | None = None

    def __post_init__(self):
        if self.action is Action.WITHDRAW and (self.path or self.large_communities):
            raise ValueError("withdraw events carry no path or communities")
        if self.path and self.origin is not None and self.path[-1].asns[-1] != self.origin:
            raise ValueError("origin must equal the last ASN of the path")

    @property
    def path_asn_count(self) -> int:
        return sum(len(seg.asns) for seg in self.path)

    def to_dict(self) -> dict:
        return {
            "ts": self.timestamp,
            "session": self.session_id,
            "action": self.action.value,
            "prefix": str(self.prefix),
            "path": [{"kind": seg.kind.value, "asns": list(seg.asns)} for seg in self.path],
            "large_communities": [list(c) for c in self.large_communities],
            "origin": self.origin,
            "atomic_aggregate": self.atomic_aggregate,
            "aggregator": list(self.aggregator) if self.aggregator else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RouteEvent":
        agg = data.get("aggregator")
        return cls(
            int(data["ts"]),
            str(data["session"]),
            Action(data["action"]),
            Ipv6Prefix.parse(data["prefix"]),
            tuple(AsPathSegment(SegmentKind(s["kind"]), tuple(int(a) for a in s["asns"])) for s in data.get("path") or ()),
            tuple(tuple(int(v) for v in c) for c in data.get("large_communities") or ()),
            data.get("origin"),
            bool(data.get("atomic_aggregate", False)),
            (int(agg[0]), int(agg[1])) if agg else None,
        )


def _filler_asn(rng: random.Random) -> int:
    while True:
        asn = rng.randint(65536, MAX_ASN - 1)
        if asn != AS_TRANS:
            return asn


class _Attributes:
    """Per-origin path and community cache so a large stream shares tuples."""

    def __init__(self, mode: Mode, path_len: int, n_comms: int, seed: int):
        self.mode, self.path_len, self.n_comms, self.seed = mode, path_len, n_comms, seed
        self.salt = random.Random(f"{seed}:communities").getrandbits(32)
        self._cache: dict[int, tuple] = {}

    def __call__(self, origin: int) -> tuple:
        hit = self._cache.get(origin)
        if hit is not None:
            return hit
        if self.mode is Mode.BEST:
            path = (AsPathSegment(SegmentKind.SEQUENCE, (origin,)),)
            comms: tuple = ()
        else:
            rng = random.Random(f"{self.seed}:{origin}")
            hops = tuple(_filler_asn(rng) for _ in range(self.path_len - 1)) + (origin,)
            path = (AsPathSegment(SegmentKind.SEQUENCE, hops),)
            comms = tuple((origin, i, self.salt) for i in range(self.n_comms))
        self._cache[origin] = (path, comms)
        return path, comms


def generate_stream(
    schedule: AnnouncementSchedule,
    mode: Mode | str = Mode.WORST,
    path_len: int = DEFAULT_PATH_LEN,
    n_comms: int = DEFAULT_COMMUNITIES,
    cycles: int = 1,
    seed: int = 0,
    start: int = 0,
) -> Iterator[RouteEvent]:
    """Yield announce/withdraw events group by group.

    Each group announces everything at its start time, withdraws it after
    ``converge_wait`` and hands over to the next group after a further
    ``post_withdraw_wait``. Best case uses the bare origin and no communities.
    """
    if isinstance(mode, str):
        mode = Mode.parse(mode)
    if not 1 <= path_len <= MAX_PATH_LEN:
        raise ParameterOutOfRange(f"path_len must be in 1..{MAX_PATH_LEN}, got {path_len}")
    if not 0 <= n_comms <= MAX_COMMUNITIES:
        raise ParameterOutOfRange(f"n_comms must be in 0..{MAX_COMMUNITIES}, got {n_comms}")
    if cycles < 0:
        raise ParameterOutOfRange(f"cycles must be >= 0, got {cycles}")
    attrs = _Attributes(mode, path_len, n_comms, seed)
    timing = schedule.timing
    t = start
    announce, withdraw = Action.ANNOUNCE, Action.WITHDRAW
    for _ in range(cycles):
        for group in schedule.groups:
            for sid in group:
                for prefix, origin in zip(schedule.assignments.get(sid, ()), schedule.origins.get(sid, ())):
                    path, comms = attrs(origin)
                    yield RouteEvent(t, sid, announce, prefix, path, comms, origin)
            tw = t + timing.converge_wait
            for sid in group:
                for prefix in schedule.assignments.get(sid, ()):
                    yield RouteEvent(tw, sid, withdraw, prefix)
            t = tw + timing.post_withdraw_wait


def write_jsonl(events: Iterable[RouteEvent], fh: IO[str]) -> int:
    n = 0
    for ev in events:
        fh.write(json.dumps(ev.to_dict(), separators=(",", ":")))
        fh.write("\n")
        n += 1
    return n


def read_jsonl(fh: Iterable[str]) -> Iterator[RouteEvent]:
    for line in fh:
        line = line.strip()
        if line:
            yield RouteEvent.from_dict(json.loads(line))
