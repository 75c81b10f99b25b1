"""Stateful ingress filters against de-aggregation floods.

Rules run in a fixed order (per-session limit, dynamic limit, per-origin
limit, per-block limit, delayed acceptance of uncovered prefixes) and the
first rule that fires decides the verdict. A ``warn`` per-session limit only
annotates the decision and lets the remaining rules run.
"""

from __future__ import annotations

import enum
import heapq
import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Iterator

from .deagg.prefixes import Ipv6Prefix
from .deagg.schedule import AnnouncementSchedule
from .deagg.stream import Action, Mode, RouteEvent, generate_stream
from .errors import NonMonotonicTimestamps
from .rib import RibSimulator, RouterProfile, Shedding

log = logging.getLogger(__name__)

RULES = ("per_session", "dynamic", "per_origin", "per_block", "pgbgp")


class LimitMode(enum.Enum):
    WARN = "warn"
    CAP = "cap"
    DROP = "drop"


class Verdict(enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"
    DELAY = "Delay"
    SESSION_DROPPED = "SessionDropped"
    WARNED = "Warned"


@dataclass(frozen=True)
class PerSessionLimit:
    limit: int
    mode: LimitMode = LimitMode.DROP


@dataclass(frozen=True)
class DynamicLimit:
    factor: float = 1.5
    day_length: int = 86400
    floor: int = 100


@dataclass(frozen=True)
class PerBlockLimit:
    block_len: int
    limit: int


@dataclass(frozen=True)
class PgbgpConfig:
    delay: int
    history: tuple[Ipv6Prefix, ...] = ()


@dataclass(frozen=True)
class DefenseConfig:
    per_session_limit: PerSessionLimit | None = None
    dynamic_limit: DynamicLimit | None = None
    per_origin_limit: int | None = None
    per_block_limit: PerBlockLimit | None = None
    pgbgp: PgbgpConfig | None = None

    def __post_init__(self):
        if self.per_session_limit and self.per_session_limit.limit <= 0:
            raise ValueError("per-session limit must be > 0")
        if self.dynamic_limit:
            d = self.dynamic_limit
            if d.factor <= 1 or d.day_length <= 0 or d.floor <= 0:
                raise ValueError("dynamic limit needs factor > 1, day_length > 0 and floor > 0")
        if self.per_origin_limit is not None and self.per_origin_limit <= 0:
            raise ValueError("per-origin limit must be > 0")
        if self.per_block_limit:
            b = self.per_block_limit
            if not 1 <= b.block_len <= 128 or b.limit <= 0:
                raise ValueError("per-block limit needs 1 <= block_len <= 128 and limit > 0")
        if self.pgbgp and self.pgbgp.delay < 0:
            raise ValueError("pgbgp delay must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "DefenseConfig":
        ps = data.get("per_session_limit")
        dyn = data.get("dynamic_limit")
        pb = data.get("per_block_limit")
        pg = data.get("pgbgp")
        return cls(
            PerSessionLimit(int(ps["limit"]), LimitMode(ps.get("mode", "drop").lower())) if ps else None,
            DynamicLimit(**dyn) if dyn is not None else None,
            data.get("per_origin_limit"),
            PerBlockLimit(int(pb["block_len"]), int(pb["limit"])) if pb else None,
            PgbgpConfig(int(pg["delay"]), tuple(Ipv6Prefix.parse(p) for p in pg.get("history", ()))) if pg else None,
        )

    def to_dict(self) -> dict:
        out: dict = {}
        if self.per_session_limit:
            out["per_session_limit"] = {"limit": self.per_session_limit.limit, "mode": self.per_session_limit.mode.value}
        if self.dynamic_limit:
            d = self.dynamic_limit
            out["dynamic_limit"] = {"factor": d.factor, "day_length": d.day_length, "floor": d.floor}
        if self.per_origin_limit is not None:
            out["per_origin_limit"] = self.per_origin_limit
        if self.per_block_limit:
            out["per_block_limit"] = {"block_len": self.per_block_limit.block_len, "limit": self.per_block_limit.limit}
        if self.pgbgp:
            out["pgbgp"] = {"delay": self.pgbgp.delay, "history": [str(p) for p in self.pgbgp.history]}
        return out


@dataclass
class FilterDecision:
    index: int  # position of the triggering event in the input stream
    event: RouteEvent
    verdict: Verdict
    rule: str | None = None
    detail: str = ""
    released: bool = False
    purged: tuple[Ipv6Prefix, ...] = ()

    def to_dict(self) -> dict:
        d = {
            "ts": self.event.timestamp,
            "session": self.event.session_id,
            "action": self.event.action.value,
            "prefix": str(self.event.prefix),
            "verdict": self.verdict.value,
            "rule": self.rule,
        }
        if self.detail:
            d["detail"] = self.detail
        if self.released:
            d["released"] = True
        if self.purged:
            d["purged"] = len(self.purged)
        return d


@dataclass
class DefenseStats:
    announces: int = 0
    withdraws: int = 0
    accepted_routes: int = 0
    warned: int = 0
    rejected: int = 0
    delayed: int = 0
    session_dropped: int = 0
    released: int = 0
    sessions_dropped: int = 0
    peak_distinct_prefixes: int = 0
    per_rule_counts: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        return {
            "announces": self.announces,
            "withdraws": self.withdraws,
            "accepted_routes": self.accepted_routes,
            "warned": self.warned,
            "rejected": self.rejected,
            "delayed": self.delayed,
            "session_dropped": self.session_dropped,
            "released": self.released,
            "sessions_dropped": self.sessions_dropped,
            "peak_distinct_prefixes": self.peak_distinct_prefixes,
            "per_rule_counts": dict(sorted(self.per_rule_counts.items())),
        }


_Key = tuple[int, int]


class DefensePipeline:
    """One filter instance; :meth:`process` takes events in timestamp order."""

    def __init__(self, config: DefenseConfig):
        self.config = config
        self.stats = DefenseStats()
        self.held: dict[str, dict[_Key, int | None]] = {}  # session -> prefix -> origin
        self.dropped: set[str] = set()
        self._prefix_refs: Counter = Counter()
        self._origin_refs: Counter = Counter()  # (origin, key) -> sessions holding it
        self._origin_count: Counter = Counter()
        self._block_refs: Counter = Counter()
        self._block_count: Counter = Counter()
        self._day = 0
        self._prev_day_counts: dict[str, int] = {}
        self._history: dict[int, set[int]] = {}
        if config.pgbgp:
            for p in config.pgbgp.history:
                self._history.setdefault(p.length, set()).add(p.address)
        self._pending: dict[tuple[str, _Key], tuple[int, int, RouteEvent]] = {}
        self._due: list[tuple[int, int, str, _Key]] = []
        self._seq = 0
        self._index = -1
        self._last_ts: int | None = None

    # -- bookkeeping -----------------------------------------------------
    def _block_key(self, key: _Key) -> _Key:
        bl = self.config.per_block_limit.block_len
        addr, length = key
        if length <= bl:
            return key
        return (addr & (((1 << bl) - 1) << (128 - bl)), bl)

    def _add(self, sid: str, key: _Key, origin: int | None) -> None:
        table = self.held.setdefault(sid, {})
        old = table.get(key, None) if key in table else None
        if key in table:
            if old == origin:
                return
            self._unref_origin(old, key)
        else:
            self._prefix_refs[key] += 1
            if self._prefix_refs[key] == 1:
                distinct = len(self._prefix_refs)
                if distinct > self.stats.peak_distinct_prefixes:
                    self.stats.peak_distinct_prefixes = distinct
            if self.config.per_block_limit:
                self._block_refs[key] += 1
                if self._block_refs[key] == 1:
                    self._block_count[self._block_key(key)] += 1
        table[key] = origin
        self._origin_refs[(origin, key)] += 1
        if self._origin_refs[(origin, key)] == 1:
            self._origin_count[origin] += 1

    def _unref_origin(self, origin, key: _Key) -> None:
        self._origin_refs[(origin, key)] -= 1
        if self._origin_refs[(origin, key)] == 0:
            del self._origin_refs[(origin, key)]
            self._origin_count[origin] -= 1

    def _remove(self, sid: str, key: _Key) -> bool:
        table = self.held.get(sid)
        if not table or key not in table:
            return False
        origin = table.pop(key)
        self._unref_origin(origin, key)
        self._prefix_refs[key] -= 1
        if self._prefix_refs[key] == 0:
            del self._prefix_refs[key]
        if self.config.per_block_limit:
            self._block_refs[key] -= 1
            if self._block_refs[key] == 0:
                del self._block_refs[key]
                self._block_count[self._block_key(key)] -= 1
        return True

    def _covered(self, key: _Key) -> bool:
        addr, length = key
        for hlen, addrs in self._history.items():
            if hlen <= length and (addr & (((1 << hlen) - 1) << (128 - hlen))) in addrs:
                return True
        return False

    def _roll_day(self, ts: int) -> None:
        dyn = self.config.dynamic_limit
        day = ts // dyn.day_length
        if day > self._day:
            self._prev_day_counts = {sid: len(t) for sid, t in self.held.items()}
            self._day = day

    def _dynamic_limit(self, sid: str) -> int:
        dyn = self.config.dynamic_limit
        if self._day == 0:
            return dyn.floor
        return max(dyn.floor, int(dyn.factor * self._prev_day_counts.get(sid, 0)))

    # -- rule evaluation -------------------------------------------------
    def _check(self, ev: RouteEvent, key: _Key, skip_pgbgp: bool = False) -> tuple[Verdict, str | None, str]:
        cfg = self.config
        sid = ev.session_id
        table = self.held.get(sid, {})
        new_here = key not in table
        warned = ""
        if cfg.per_session_limit and new_here and len(table) >= cfg.per_session_limit.limit:
            mode = cfg.per_session_limit.mode
            msg = f"{len(table)} prefixes held, limit {cfg.per_session_limit.limit}"
            if mode is LimitMode.CAP:
                return Verdict.REJECT, "per_session", msg
            if mode is LimitMode.DROP:
                return Verdict.SESSION_DROPPED, "per_session", msg
            warned = msg
        if cfg.dynamic_limit and new_here:
            limit = self._dynamic_limit(sid)
            if len(table) >= limit:
                return Verdict.REJECT, "dynamic", f"day {self._day} limit {limit}"
        if cfg.per_origin_limit is not None and ev.origin is not None:
            fresh = (ev.origin, key) not in self._origin_refs
            if fresh and self._origin_count[ev.origin] >= cfg.per_origin_limit:
                return Verdict.REJECT, "per_origin", f"AS{ev.origin} at {cfg.per_origin_limit} prefixes"
        if cfg.per_block_limit and key not in self._block_refs:
            block = self._block_key(key)
            if self._block_count[block] >= cfg.per_block_limit.limit:
                return Verdict.REJECT, "per_block", f"block {Ipv6Prefix(*block)} at {cfg.per_block_limit.limit}"
        if cfg.pgbgp and not skip_pgbgp and new_here and not self._covered(key) and cfg.pgbgp.delay > 0:
            return Verdict.DELAY, "pgbgp", "not covered by a known block"
        if warned:
            return Verdict.WARNED, "per_session", warned
        return Verdict.ACCEPT, None, ""

    def _accept(self, ev: RouteEvent, key: _Key) -> None:
        self._add(ev.session_id, key, ev.origin)
        if self.config.pgbgp:
            self._history.setdefault(key[1], set()).add(key[0])

    def _drop_session(self, sid: str) -> tuple[Ipv6Prefix, ...]:
        table = self.held.get(sid, {})
        purged = tuple(Ipv6Prefix(a, l) for a, l in table)
        for key in list(table):
            self._remove(sid, key)
        self.held.pop(sid, None)
        for pk in [pk for pk in self._pending if pk[0] == sid]:
            del self._pending[pk]
        self.dropped.add(sid)
        self.stats.sessions_dropped += 1
        return purged

    def _release_due(self, now: int) -> list[FilterDecision]:
        out = []
        while self._due and self._due[0][0] <= now:
            due, seq, sid, key = heapq.heappop(self._due)
            pending = self._pending.get((sid, key))
            if pending is None or pending[1] != seq:
                continue  # withdrawn or superseded
            del self._pending[(sid, key)]
            idx, _, ev = pending
            ev = replace(ev, timestamp=due)
            verdict, rule, detail = self._check(ev, key, skip_pgbgp=True)
            if verdict in (Verdict.ACCEPT, Verdict.WARNED):
                self._accept(ev, key)
                self.stats.released += 1
                out.append(FilterDecision(idx, ev, Verdict.ACCEPT, "pgbgp", "released after delay", released=True))
            else:
                self.stats.per_rule_counts[rule] += 1
                out.append(FilterDecision(idx, ev, Verdict.REJECT, rule, detail, released=True))
        return out

    def process(self, ev: RouteEvent) -> list[FilterDecision]:
        """Decisions caused by ``ev``: due releases first, then the event's own verdict."""
        self._index += 1
        if self._last_ts is not None and ev.timestamp < self._last_ts:
            raise NonMonotonicTimestamps(self._index, self._last_ts, ev.timestamp)
        self._last_ts = ev.timestamp
        if self.config.dynamic_limit:
            self._roll_day(ev.timestamp)
        out = self._release_due(ev.timestamp) if self._due else []
        sid = ev.session_id
        key = (ev.prefix.address, ev.prefix.length)
        st = self.stats
        if ev.action is Action.WITHDRAW:
            st.withdraws += 1
            if sid in self.dropped:
                out.append(FilterDecision(self._index, ev, Verdict.SESSION_DROPPED, "per_session", "session down"))
            elif self._remove(sid, key):
                out.append(FilterDecision(self._index, ev, Verdict.ACCEPT))
            elif self._pending.pop((sid, key), None) is not None:
                out.append(FilterDecision(self._index, ev, Verdict.ACCEPT, "pgbgp", "pending route cancelled"))
            else:
                out.append(FilterDecision(self._index, ev, Verdict.ACCEPT, None, "unknown route"))
            return out
        st.announces += 1
        if sid in self.dropped:
            st.session_dropped += 1
            out.append(FilterDecision(self._index, ev, Verdict.SESSION_DROPPED, "per_session", "session down"))
            return out
        verdict, rule, detail = self._check(ev, key)
        if rule:
            st.per_rule_counts[rule] += 1
        purged: tuple[Ipv6Prefix, ...] = ()
        if verdict is Verdict.ACCEPT:
            st.accepted_routes += 1
            self._accept(ev, key)
        elif verdict is Verdict.WARNED:
            st.warned += 1
            self._accept(ev, key)
        elif verdict is Verdict.REJECT:
            st.rejected += 1
        elif verdict is Verdict.SESSION_DROPPED:
            st.session_dropped += 1
            purged = self._drop_session(sid)
        else:
            st.delayed += 1
            if (sid, key) not in self._pending:
                self._seq += 1
                self._pending[(sid, key)] = (self._index, self._seq, ev)
                heapq.heappush(self._due, (ev.timestamp + self.config.pgbgp.delay, self._seq, sid, key))
        out.append(FilterDecision(self._index, ev, verdict, rule, detail, purged=purged))
        return out

    def flush(self, now: int) -> list[FilterDecision]:
        """Release every pending route due by ``now`` without a new event."""
        return self._release_due(now)


def evaluate(stream: Iterable[RouteEvent], config: DefenseConfig) -> tuple[list[FilterDecision], DefenseStats]:
    pipe = DefensePipeline(config)
    decisions: list[FilterDecision] = []
    for ev in stream:
        decisions.extend(pipe.process(ev))
    return decisions, pipe.stats


def iter_decisions(stream: Iterable[RouteEvent], pipe: DefensePipeline) -> Iterator[FilterDecision]:
    for ev in stream:
        yield from pipe.process(ev)


def accepted_events(decisions: Iterable[FilterDecision]) -> Iterator[RouteEvent]:
    """The event stream a router behind the filter would see."""
    for d in decisions:
        ev = d.event
        if d.verdict in (Verdict.ACCEPT, Verdict.WARNED):
            if ev.action is Action.ANNOUNCE or d.detail not in ("unknown route", "pending route cancelled"):
                yield ev
        elif d.verdict is Verdict.SESSION_DROPPED and d.purged:
            for p in d.purged:
                yield RouteEvent(ev.timestamp, ev.session_id, Action.WITHDRAW, p)


@dataclass
class AttackOutcome:
    peak_rib_bytes: int
    exhausted: bool
    accepted_routes: int
    routes_at_exhaustion: int | None
    defense: DefenseStats
    rib: dict

    def to_dict(self) -> dict:
        return {
            "peak_rib_bytes": self.peak_rib_bytes,
            "exhausted": self.exhausted,
            "accepted_routes": self.accepted_routes,
            "routes_at_exhaustion": self.routes_at_exhaustion,
            "defense": self.defense.to_dict(),
            "rib": self.rib,
        }


def attack_vs_defense(
    schedule: AnnouncementSchedule,
    config: DefenseConfig,
    profile: RouterProfile,
    mode: Mode | str = Mode.WORST,
    shedding: Shedding | str = Shedding.NONE,
    seed: int = 0,
    cycles: int = 1,
) -> AttackOutcome:
    """Stream the schedule through the filter into a RIB and report the result."""
    pipe = DefensePipeline(config)
    rib = RibSimulator(profile, shedding)
    stream = generate_stream(schedule, mode, cycles=cycles, seed=seed)
    for ev in accepted_events(iter_decisions(stream, pipe)):
        rib.feed(ev)
    st = pipe.stats
    return AttackOutcome(
        rib.state.peak_bytes,
        rib.state.exhausted,
        st.accepted_routes + st.warned + st.released,
        rib.state.routes_at_exhaustion,
        st,
        rib.state.summary(),
    )


def write_decisions(decisions: Iterable[FilterDecision], fh: IO[str]) -> int:
    n = 0
    for d in decisions:
        fh.write(json.dumps(d.to_dict(), separators=(",", ":")) + "\n")
        n += 1
    return n
