"""Per-session announcement schedules whose prefixes cannot be aggregated."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import kernels
from ..errors import InvalidRange, NoCapacity
from ..topology import check_role_asn
from .prefixes import Ipv6Prefix, _check_range, _mask

# owner array of 2^(C+1) int32 entries; /24 below the parent is ~128 MB
MAX_SCHEDULE_DEPTH = 24
POLICIES = ("longest-first", "enumerate")


@dataclass(frozen=True)
class Timing:
    converge_wait: int = 1800
    post_withdraw_wait: int = 5400

    @property
    def cycle(self) -> int:
        return self.converge_wait + self.post_withdraw_wait


@dataclass
class AnnouncementSchedule:
    parent: Ipv6Prefix
    max_len: int
    sessions: list[tuple[str, int]]
    assignments: dict[str, list[Ipv6Prefix]]
    origins: dict[str, list[int]]
    origin_pool: list[int]
    groups: list[list[str]]
    timing: Timing = field(default_factory=Timing)
    policy: str = "longest-first"

    @property
    def limits(self) -> dict[str, int]:
        return dict(self.sessions)

    def total(self) -> int:
        return sum(len(p) for p in self.assignments.values())

    def to_dict(self) -> dict:
        return {
            "parent": str(self.parent),
            "max_len": self.max_len,
            "policy": self.policy,
            "origin_pool": list(self.origin_pool),
            "sessions": [
                {
                    "id": sid,
                    "limit": limit,
                    "prefixes": [str(p) for p in self.assignments.get(sid, [])],
                    "origins": list(self.origins.get(sid, [])),
                }
                for sid, limit in self.sessions
            ],
            "groups": [list(g) for g in self.groups],
            "timing": {
                "converge_wait": self.timing.converge_wait,
                "post_withdraw_wait": self.timing.post_withdraw_wait,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnnouncementSchedule":
        sessions = [(s["id"], int(s["limit"])) for s in data["sessions"]]
        assignments = {s["id"]: [Ipv6Prefix.parse(p) for p in s["prefixes"]] for s in data["sessions"]}
        origins = {s["id"]: [int(o) for o in s.get("origins", [])] for s in data["sessions"]}
        pool = [int(o) for o in data.get("origin_pool") or sorted({o for v in origins.values() for o in v})]
        timing = Timing(**data.get("timing", {}))
        parent = Ipv6Prefix.parse(data["parent"])
        return cls(
            parent,
            int(data.get("max_len", 48)),
            sessions,
            assignments,
            origins,
            pool,
            [list(g) for g in data.get("groups") or [[sid for sid, _ in sessions]]],
            timing,
            data.get("policy", "longest-first"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _node_order(placed: np.ndarray, longest_first: bool) -> np.ndarray:
    depth = np.frexp(placed.astype(np.float64))[1] - 1
    if longest_first:
        return placed[np.lexsort((placed, -depth))]
    return placed


def build_schedule(
    parent: Ipv6Prefix,
    sessions: Sequence[tuple[str, int]],
    origin_pool: Sequence[int],
    max_len: int = 48,
    groups: Sequence[Sequence[str]] | None = None,
    policy: str = "longest-first",
) -> AnnouncementSchedule:
    """Greedy round-robin placement of sub-prefixes of ``parent`` onto sessions.

    Candidates are visited level by level (``longest-first``: /max_len upwards;
    ``enumerate``: parent downwards) and each goes to the next session in
    rotation that is not full and holds neither its sibling nor a prefix
    covering it or covered by it. Prefixes are unique within a group and reused
    across groups. Origins rotate through ``origin_pool`` per placed prefix.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; choose from {POLICIES}")
    if not origin_pool:
        raise ValueError("origin_pool must not be empty")
    pool = [check_role_asn(int(o)) for o in origin_pool]
    depth = _check_range(parent, max_len)
    if depth > MAX_SCHEDULE_DEPTH:
        raise InvalidRange(
            f"{parent} to /{max_len} spans {depth} levels; at most {MAX_SCHEDULE_DEPTH} supported"
        )
    ids = [sid for sid, _ in sessions]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate session ids")
    limits = {sid: int(lim) for sid, lim in sessions}
    if any(v < 0 for v in limits.values()):
        raise ValueError("session limits must be >= 0")
    if not any(limits.values()):
        raise NoCapacity("every session limit is zero")
    if groups is None:
        groups = [ids]
    grouped = [sid for g in groups for sid in g]
    if sorted(grouped) != sorted(ids):
        raise ValueError("groups must partition the session ids")

    longest_first = policy == "longest-first"
    assignments: dict[str, list[Ipv6Prefix]] = {sid: [] for sid in ids}
    origins: dict[str, list[int]] = {sid: [] for sid in ids}
    placed_total = 0
    for group in groups:
        owner = kernels.greedy_assign(depth, np.array([limits[s] for s in group], dtype=np.int64), longest_first)
        nodes = np.flatnonzero(owner >= 0)
        for h in _node_order(nodes, longest_first).tolist():
            sid = group[owner[h]]
            d = h.bit_length() - 1
            length = parent.length + d
            prefix = Ipv6Prefix(parent.address | ((h - (1 << d)) << (128 - length)), length)
            assignments[sid].append(prefix)
            origins[sid].append(pool[placed_total % len(pool)])
            placed_total += 1
    return AnnouncementSchedule(
        parent, max_len, [(sid, limits[sid]) for sid in ids], assignments, origins, pool,
        [list(g) for g in groups], Timing(), policy,
    )


@dataclass(frozen=True)
class Violation:
    kind: str  # shared | duplicate | sibling | covering | limit
    session: str
    prefixes: tuple[str, ...]
    other_session: str | None = None


@dataclass
class ScheduleReport:
    ok: bool
    violations: list[Violation]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "session": v.session, "prefixes": list(v.prefixes), "other_session": v.other_session}
                for v in self.violations
            ],
        }


def verify_schedule(schedule: AnnouncementSchedule) -> ScheduleReport:
    """List every violation of the schedule invariants.

    Checks cross-session sharing within a group, duplicates and sibling or
    covering pairs inside a session, and per-session limits.
    """
    violations: list[Violation] = []
    limits = schedule.limits
    for sid, prefixes in schedule.assignments.items():
        if sid in limits and len(prefixes) > limits[sid]:
            violations.append(Violation("limit", sid, (f"{len(prefixes)} > {limits[sid]}",)))
        by_len: dict[int, set[int]] = {}
        for p in prefixes:
            level = by_len.setdefault(p.length, set())
            if p.address in level:
                violations.append(Violation("duplicate", sid, (str(p),)))
            level.add(p.address)
        lengths = sorted(by_len)
        for p in prefixes:
            if p.length > 0:
                sib = p.address ^ (1 << (128 - p.length))
                if sib > p.address and sib in by_len[p.length]:
                    violations.append(Violation("sibling", sid, (str(p), str(Ipv6Prefix(sib, p.length)))))
            for length in lengths:
                if length >= p.length:
                    break
                anc = p.address & _mask(length)
                if anc in by_len[length]:
                    violations.append(Violation("covering", sid, (str(Ipv6Prefix(anc, length)), str(p))))
    for group in schedule.groups:
        owner: dict[tuple[int, int], str] = {}
        for sid in group:
            for p in dict.fromkeys(schedule.assignments.get(sid, [])):
                key = (p.address, p.length)
                if key in owner and owner[key] != sid:
                    violations.append(Violation("shared", sid, (str(p),), owner[key]))
                else:
                    owner[key] = sid
    return ScheduleReport(not violations, violations)
