from __future__ import annotations

import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirinlab.deagg import (
    AnnouncementSchedule,
    Ipv6Prefix,
    build_schedule,
    can_aggregate,
    enumerate_subprefixes,
    verify_schedule,
)
from kirinlab.deagg.schedule import Timing
from kirinlab.errors import InvalidRange, NoCapacity

P = Ipv6Prefix.parse


def max_valid_subset(parent, max_len):
    """Exhaustive oracle: largest within-session set with no sibling/covering pair.

    Branch on each candidate (take it or not); taking one drops its conflicts.
    """
    cands = list(enumerate_subprefixes(parent, max_len))
    conflict = [
        {j for j, b in enumerate(cands) if j != i and can_aggregate(a, b)} for i, a in enumerate(cands)
    ]

    def best(free):
        if not free:
            return 0
        i = min(free)
        rest = free - {i}
        return max(best(rest), 1 + best(rest - conflict[i]))

    return best(frozenset(range(len(cands))))


def test_46_single_session_reaches_exhaustive_maximum():
    parent = P("2001:db8::/46")
    sched = build_schedule(parent, [("s1", 7)], [64500])
    assert verify_schedule(sched).ok
    assert len(sched.assignments["s1"]) == max_valid_subset(parent, 48) == 2
    assert [str(p) for p in sched.assignments["s1"]] == ["2001:db8::/48", "2001:db8:2::/48"]


def test_46_enumerate_policy():
    sched = build_schedule(P("2001:db8::/46"), [("s1", 7)], [64500], policy="enumerate")
    assert verify_schedule(sched).ok
    assert [str(p) for p in sched.assignments["s1"]] == ["2001:db8::/46"]


@pytest.mark.parametrize("length", [45, 46, 47, 48])
def test_single_session_maximum_small_parents(length):
    parent = Ipv6Prefix(0x20010DB8 << 96, length)
    sched = build_schedule(parent, [("s", 1000)], [64500])
    assert len(sched.assignments["s"]) == max_valid_subset(parent, 48)


def test_two_sessions_limit_one():
    sched = build_schedule(P("2001:db8::/47"), [("a", 1), ("b", 1)], [64500])
    a, b = sched.assignments["a"], sched.assignments["b"]
    assert len(a) == len(b) == 1
    assert a[0] != b[0]
    assert verify_schedule(sched).ok


def test_million_prefixes_over_1000_sessions():
    sessions = [(f"s{i:04d}", 1000) for i in range(1000)]
    sched = build_schedule(P("2001:db8::/29"), sessions, [64500, 64501])
    assert sched.total() == 1_000_000
    assert verify_schedule(sched).ok


def test_enumerate_policy_places_fewer_at_scale():
    sessions = [(f"s{i:04d}", 1000) for i in range(1000)]
    sched = build_schedule(P("2001:db8::/29"), sessions, [64500], policy="enumerate")
    assert verify_schedule(sched).ok
    assert sched.total() < 1_000_000


def test_errors():
    with pytest.raises(NoCapacity):
        build_schedule(P("2001:db8::/46"), [("a", 0)], [64500])
    with pytest.raises(ValueError):
        build_schedule(P("2001:db8::/46"), [("a", 1)], [])
    with pytest.raises(ValueError):
        build_schedule(P("2001:db8::/46"), [("a", 1), ("a", 2)], [64500])
    with pytest.raises(ValueError):
        build_schedule(P("2001:db8::/46"), [("a", -1)], [64500])
    with pytest.raises(ValueError):
        build_schedule(P("2001:db8::/46"), [("a", 1)], [23456])
    with pytest.raises(ValueError):
        build_schedule(P("2001:db8::/46"), [("a", 1)], [64500], policy="random")
    with pytest.raises(InvalidRange):
        build_schedule(P("2001::/16"), [("a", 1)], [64500])
    with pytest.raises(ValueError):
        build_schedule(P("2001:db8::/46"), [("a", 1), ("b", 1)], [64500], groups=[["a"]])


def test_origins_rotate():
    sched = build_schedule(P("2001:db8::/40"), [("a", 3), ("b", 3)], [1, 2, 3])
    flat = [o for sid in ("a", "b") for o in sched.origins[sid]]
    assert sorted(flat) == [1, 1, 2, 2, 3, 3]
    assert all(len(sched.origins[s]) == len(sched.assignments[s]) for s in ("a", "b"))


def test_groups_reuse_prefixes_across_groups():
    sched = build_schedule(
        P("2001:db8::/44"), [("a", 4), ("b", 4)], [64500], groups=[["a"], ["b"]]
    )
    assert sched.assignments["a"] == sched.assignments["b"]
    assert verify_schedule(sched).ok


def _hand(assign, groups=None):
    sessions = [(sid, 100) for sid in assign]
    return AnnouncementSchedule(
        P("2001:db8::/32"), 48, sessions,
        {sid: [P(p) for p in ps] for sid, ps in assign.items()},
        {sid: [64500] * len(ps) for sid, ps in assign.items()},
        [64500], groups or [list(assign)],
    )


def test_verify_reports_sibling():
    rep = verify_schedule(_hand({"a": ["2001:db8:c::/48", "2001:db8:d::/48"]}))
    assert not rep.ok
    assert [v.kind for v in rep.violations] == ["sibling"]


def test_verify_reports_covering_and_shared_and_limit():
    rep = verify_schedule(_hand({"a": ["2001:db8:c::/47", "2001:db8:c::/48"], "b": ["2001:db8:c::/48"]}))
    kinds = sorted(v.kind for v in rep.violations)
    assert kinds == ["covering", "shared"]
    shared = next(v for v in rep.violations if v.kind == "shared")
    assert {shared.session, shared.other_session} == {"a", "b"}
    sched = _hand({"a": ["2001:db8:c::/48"]})
    sched.sessions = [("a", 0)]
    assert [v.kind for v in verify_schedule(sched).violations] == ["limit"]


def test_verify_sharing_allowed_across_groups():
    rep = verify_schedule(_hand({"a": ["2001:db8:c::/48"], "b": ["2001:db8:c::/48"]}, groups=[["a"], ["b"]]))
    assert rep.ok


@settings(max_examples=60, deadline=None)
@given(
    st.integers(36, 48),
    st.lists(st.integers(0, 40), min_size=1, max_size=8),
    st.sampled_from(["longest-first", "enumerate"]),
    st.integers(1, 3),
)
def test_schedule_soundness(length, limits, policy, n_groups):
    if not any(limits):
        limits[0] = 1
    sessions = [(f"s{i}", lim) for i, lim in enumerate(limits)]
    ids = [s for s, _ in sessions]
    groups = [ids[i::n_groups] for i in range(n_groups) if ids[i::n_groups]]
    parent = Ipv6Prefix(0x20010DB8 << 96 & ~((1 << (128 - length)) - 1), length)
    sched = build_schedule(parent, sessions, [64500], groups=groups, policy=policy)
    assert verify_schedule(sched).ok
    for ps in sched.assignments.values():
        for a, b in itertools.combinations(ps, 2):
            assert not can_aggregate(a, b)


def test_json_round_trip():
    sched = build_schedule(P("2001:db8::/40"), [("a", 5), ("b", 7)], [1, 2], groups=[["a"], ["b"]])
    again = AnnouncementSchedule.from_dict(json.loads(sched.dumps()))
    assert again.to_dict() == sched.to_dict()
    assert again.timing == Timing(1800, 5400)
    assert again.timing.cycle == 7200
