"""RIB memory model, router profiles and the memory-alert state machine."""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from typing import IO, Iterable, Iterator

from .deagg.stream import Action, Mode, RouteEvent
from .errors import NonMonotonicTimestamps

log = logging.getLogger(__name__)

PREFIX_BYTES = 17  # 16-byte address plus 1-byte length
ASN_BYTES = 4
LARGE_COMMUNITY_BYTES = 12
FORMULA_ENTRIES = 255
PROFILE_NAMES = ("mx5_best", "mx5_worst", "xrv9k_best", "xrv9k_worst")


def route_size_lower_bound(path_len: int, n_large_comms: int) -> int:
    if path_len < 0 or n_large_comms < 0:
        raise ValueError("path_len and n_large_comms must be >= 0")
    return PREFIX_BYTES + ASN_BYTES * path_len + LARGE_COMMUNITY_BYTES * n_large_comms


def event_size(ev: RouteEvent) -> int:
    return route_size_lower_bound(ev.path_asn_count, len(ev.large_communities))


class AlertLevel(enum.IntEnum):
    NONE = 0
    MINOR = 1
    SEVERE = 2
    CRITICAL = 3


class Shedding(enum.Enum):
    NONE = "none"  # no graceful degradation: overflow drops everything
    CISCO = "cisco"


@dataclass(frozen=True)
class Thresholds:
    minor: float = 0.85
    severe: float = 0.90
    critical: float = 0.95

    def __post_init__(self):
        if not 0 < self.minor < self.severe < self.critical <= 1.0:
            raise ValueError("need 0 < minor < severe < critical <= 1")


@dataclass(frozen=True)
class RouterProfile:
    name: str
    rib_capacity_bytes: int
    thresholds: Thresholds = field(default_factory=Thresholds)
    per_session_prefix_limit: int | None = None
    baseline_route_count: int = 0
    baseline_route_bytes: int = 0

    def __post_init__(self):
        if self.rib_capacity_bytes <= 0:
            raise ValueError("rib_capacity_bytes must be positive")
        if self.baseline_route_count < 0 or self.baseline_route_bytes < 0:
            raise ValueError("baseline values must be >= 0")
        if self.per_session_prefix_limit is not None and self.per_session_prefix_limit < 0:
            raise ValueError("per_session_prefix_limit must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["thresholds"] = asdict(self.thresholds)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RouterProfile":
        return cls(
            data["name"],
            int(data["rib_capacity_bytes"]),
            Thresholds(**data.get("thresholds", {})),
            data.get("per_session_prefix_limit"),
            int(data.get("baseline_route_count", 0)),
            int(data.get("baseline_route_bytes", 0)),
        )


def calibrated_profile(name: str, observed_routes: int, route_bytes: int, **kw) -> RouterProfile:
    """Capacity chosen so the lower-bound model fills up after ``observed_routes``."""
    return RouterProfile(name, observed_routes * route_bytes, **kw)


def load_profile(name_or_path: str) -> RouterProfile:
    """A shipped profile by name, or a profile JSON file."""
    if name_or_path in PROFILE_NAMES:
        text = resources.files("kirinlab").joinpath("data", "profiles", f"{name_or_path}.json").read_text("utf-8")
    else:
        with open(name_or_path, encoding="utf-8") as fh:
            text = fh.read()
    return RouterProfile.from_dict(json.loads(text))


def capacity_in_routes(profile: RouterProfile, path_len: int, n_large_comms: int) -> int:
    size = route_size_lower_bound(path_len, n_large_comms)
    return max(0, (profile.rib_capacity_bytes - profile.baseline_route_bytes) // size)


def exhaustion_point(
    profile: RouterProfile, mode: Mode | str, path_len: int = 251, n_comms: int = 251
) -> int:
    """Routes held when the RIB is full; the next announce exhausts it."""
    if isinstance(mode, str):
        mode = Mode.parse(mode)
    if mode is Mode.BEST:
        path_len, n_comms = 1, 0
    return capacity_in_routes(profile, path_len, n_comms)


@dataclass
class SessionUsage:
    route_count: int = 0
    byte_usage: int = 0


@dataclass
class TimelineEntry:
    ts: int
    event: str  # alert | shed | exhausted | reject
    detail: dict

    def to_dict(self) -> dict:
        return {"ts": self.ts, "event": self.event, "detail": self.detail}


@dataclass
class RibState:
    per_session: dict[str, SessionUsage]
    total_bytes: int
    alert_level: AlertLevel
    dropped_sessions: list[str]
    event_log: list[TimelineEntry]
    exhausted: bool = False
    routes_at_exhaustion: int | None = None
    peak_bytes: int = 0
    peak_routes: int = 0
    accepted_routes: int = 0
    rejected: int = 0

    @property
    def route_count(self) -> int:
        return sum(s.route_count for s in self.per_session.values())

    def summary(self) -> dict:
        return {
            "total_bytes": self.total_bytes,
            "routes": self.route_count,
            "alert_level": self.alert_level.name,
            "exhausted": self.exhausted,
            "routes_at_exhaustion": self.routes_at_exhaustion,
            "peak_bytes": self.peak_bytes,
            "peak_routes": self.peak_routes,
            "accepted_routes": self.accepted_routes,
            "rejected": self.rejected,
            "dropped_sessions": list(self.dropped_sessions),
        }


class RibSimulator:
    """Incremental RIB occupancy; feed events one by one or via :meth:`run`."""

    def __init__(self, profile: RouterProfile, shedding: Shedding | str = Shedding.NONE):
        self.profile = profile
        self.shedding = Shedding(shedding) if isinstance(shedding, str) else shedding
        cap = profile.rib_capacity_bytes
        t = profile.thresholds
        # exact rational comparison: usage/cap >= level  <=>  usage*den >= num*cap
        self._levels = [
            (AlertLevel.MINOR, Fraction(str(t.minor))),
            (AlertLevel.SEVERE, Fraction(str(t.severe))),
            (AlertLevel.CRITICAL, Fraction(str(t.critical))),
        ]
        self._cut = {lvl: -(-f.numerator * cap // f.denominator) for lvl, f in self._levels}
        self.routes: dict[str, dict[tuple[int, int], int]] = {}
        self.state = RibState({}, profile.baseline_route_bytes, AlertLevel.NONE, [], [])
        self._last_ts: int | None = None
        self._index = 0
        self._dropped: set[str] = set()
        self._live = 0  # routes currently held
        self._rejected_once: set[tuple[str, str]] = set()
        self.state.alert_level = self._level_for(self.state.total_bytes)

    def _level_for(self, total: int) -> AlertLevel:
        level = AlertLevel.NONE
        for lvl, _ in self._levels:
            if total >= self._cut[lvl]:
                level = lvl
        return level

    def _log(self, ts: int, event: str, **detail) -> None:
        self.state.event_log.append(TimelineEntry(ts, event, detail))

    def _reject(self, ts: int, sid: str, prefix, reason: str) -> None:
        # first reject per (session, reason) goes to the timeline, all are counted
        self.state.rejected += 1
        if (sid, reason) not in self._rejected_once:
            self._rejected_once.add((sid, reason))
            self._log(ts, "reject", session=sid, prefix=str(prefix), reason=reason)

    def _remove_session(self, ts: int, sid: str, reason: str) -> None:
        table = self.routes.pop(sid, {})
        usage = self.state.per_session.pop(sid, SessionUsage())
        self.state.total_bytes -= usage.byte_usage
        self._live -= len(table)
        self._dropped.add(sid)
        self.state.dropped_sessions.append(sid)
        self._log(ts, "shed", session=sid, routes=len(table), reason=reason)

    def _update_alerts(self, ts: int) -> None:
        st = self.state
        new = self._level_for(st.total_bytes)
        if new == st.alert_level:
            return
        step = 1 if new > st.alert_level else -1
        for lvl in range(st.alert_level + step, new + step, step):
            self._log(ts, "alert", level=AlertLevel(lvl).name, total_bytes=st.total_bytes)
        st.alert_level = new
        if self.shedding is Shedding.CISCO and new >= AlertLevel.SEVERE:
            if new == AlertLevel.CRITICAL:
                for sid in sorted(self.routes):
                    self._remove_session(ts, sid, "critical")
            else:
                # fewest routes first stands in for the lowest best-path share
                order = sorted(self.routes, key=lambda s: (len(self.routes[s]), s))
                for sid in order:
                    if self._level_for(st.total_bytes) < AlertLevel.SEVERE:
                        break
                    self._remove_session(ts, sid, "severe")
            settled = self._level_for(st.total_bytes)
            for lvl in range(st.alert_level - 1, settled - 1, -1):
                self._log(ts, "alert", level=AlertLevel(lvl).name, total_bytes=st.total_bytes)
            st.alert_level = settled

    def _exhaust(self, ts: int, sid: str) -> None:
        st = self.state
        st.exhausted = True
        st.routes_at_exhaustion = self._live
        self._log(ts, "exhausted", session=sid, routes=st.routes_at_exhaustion, total_bytes=st.total_bytes)
        for s in sorted(self.routes):
            self._remove_session(ts, s, "exhausted")
        st.alert_level = self._level_for(st.total_bytes)

    def feed(self, ev: RouteEvent) -> None:
        if self._last_ts is not None and ev.timestamp < self._last_ts:
            raise NonMonotonicTimestamps(self._index, self._last_ts, ev.timestamp)
        self._last_ts = ev.timestamp
        self._index += 1
        st = self.state
        if st.exhausted:
            return
        sid = ev.session_id
        key = (ev.prefix.address, ev.prefix.length)
        if ev.action is Action.WITHDRAW:
            table = self.routes.get(sid)
            size = table.pop(key, None) if table else None
            if size is None:
                log.debug("withdraw of unknown route %s on %s", ev.prefix, sid)
                return
            usage = st.per_session[sid]
            usage.route_count -= 1
            usage.byte_usage -= size
            st.total_bytes -= size
            self._live -= 1
            self._update_alerts(ev.timestamp)
            return
        if sid in self._dropped:
            self._reject(ev.timestamp, sid, ev.prefix, "session down")
            return
        table = self.routes.get(sid)
        if table is None:
            if self.shedding is Shedding.CISCO and st.alert_level >= AlertLevel.MINOR:
                self._reject(ev.timestamp, sid, ev.prefix, "new session refused")
                return
            table = self.routes[sid] = {}
            st.per_session[sid] = SessionUsage()
        old = table.get(key)
        limit = self.profile.per_session_prefix_limit
        if old is None and limit is not None and len(table) >= limit:
            self._reject(ev.timestamp, sid, ev.prefix, "prefix limit")
            return
        size = event_size(ev)
        delta = size - (old or 0)
        if st.total_bytes + delta > self.profile.rib_capacity_bytes:
            self._exhaust(ev.timestamp, sid)
            return
        table[key] = size
        usage = st.per_session[sid]
        if old is None:
            usage.route_count += 1
            st.accepted_routes += 1
        usage.byte_usage += delta
        st.total_bytes += delta
        if st.total_bytes > st.peak_bytes:
            st.peak_bytes = st.total_bytes
        if old is None:
            self._live += 1
            if self._live > st.peak_routes:
                st.peak_routes = self._live
        self._update_alerts(ev.timestamp)

    def drop_session(self, ts: int, sid: str, reason: str = "external") -> None:
        """Tear a session down from outside (e.g. a filter's drop action)."""
        if sid in self.routes:
            self._remove_session(ts, sid, reason)
            self._update_alerts(ts)

    def run(self, events: Iterable[RouteEvent]) -> RibState:
        for ev in events:
            self.feed(ev)
        return self.state


def simulate_rib(
    stream: Iterable[RouteEvent], profile: RouterProfile, shedding: Shedding | str = Shedding.NONE
) -> RibState:
    return RibSimulator(profile, shedding).run(stream)


def write_timeline(state: RibState, fh: IO[str]) -> None:
    for entry in state.event_log:
        fh.write(json.dumps(entry.to_dict(), separators=(",", ":")) + "\n")


def iter_timeline(fh: Iterable[str]) -> Iterator[dict]:
    for line in fh:
        if line.strip():
            yield json.loads(line)
