from __future__ import annotations

import io

import pytest

from kirinlab.deagg import Ipv6Prefix, build_schedule
from kirinlab.deagg.stream import (
    Action,
    AsPathSegment,
    Mode,
    RouteEvent,
    SegmentKind,
    generate_stream,
    read_jsonl,
    write_jsonl,
)
from kirinlab.errors import ParameterOutOfRange

P = Ipv6Prefix.parse


def one_prefix():
    return build_schedule(P("2001:db8::/48"), [("s", 1)], [64500])


def test_best_case_single_prefix():
    events = list(generate_stream(one_prefix(), Mode.BEST))
    assert [(e.timestamp, e.action) for e in events] == [(0, Action.ANNOUNCE), (1800, Action.WITHDRAW)]
    ann = events[0]
    assert ann.path_asn_count == 1
    assert ann.large_communities == ()
    assert ann.origin == 64500


def test_worst_case_defaults():
    sched = build_schedule(P("2001:db8::/44"), [("a", 3), ("b", 3)], [64500, 64501])
    for ev in generate_stream(sched):
        if ev.action is Action.ANNOUNCE:
            assert ev.path_asn_count == 251
            assert len(ev.large_communities) == 251
            assert len(set(ev.large_communities)) == 251
            assert ev.path[-1].asns[-1] == ev.origin
            assert all(0 <= v < 2**32 for c in ev.large_communities for v in c)
            assert 23456 not in ev.path[0].asns


def test_two_groups_two_cycles_timing():
    sched = build_schedule(P("2001:db8::/46"), [("a", 1), ("b", 1)], [64500], groups=[["a"], ["b"]])
    events = list(generate_stream(sched, Mode.BEST, cycles=2))
    starts = sorted({e.timestamp for e in events if e.action is Action.ANNOUNCE})
    assert starts == [0, 7200, 14400, 21600]
    b_start = min(e.timestamp for e in events if e.session_id == "b")
    assert b_start == 7200
    withdraws = sorted({e.timestamp for e in events if e.action is Action.WITHDRAW})
    assert withdraws == [1800, 9000, 16200, 23400]
    ts = [e.timestamp for e in events]
    assert ts == sorted(ts)


@pytest.mark.parametrize("kw", [{"path_len": 0}, {"path_len": 256}, {"n_comms": -1}, {"n_comms": 256}])
def test_parameter_range(kw):
    with pytest.raises(ParameterOutOfRange):
        list(generate_stream(one_prefix(), **kw))


def test_determinism_and_round_trip():
    sched = build_schedule(P("2001:db8::/40"), [("a", 10), ("b", 10)], [64500, 64501, 64502])
    first, second = io.StringIO(), io.StringIO()
    write_jsonl(generate_stream(sched, seed=5), first)
    write_jsonl(generate_stream(sched, seed=5), second)
    assert first.getvalue() == second.getvalue()
    other = io.StringIO()
    write_jsonl(generate_stream(sched, seed=6), other)
    assert other.getvalue() != first.getvalue()
    back = list(read_jsonl(io.StringIO(first.getvalue())))
    assert back == list(generate_stream(sched, seed=5))


def test_event_invariants():
    with pytest.raises(ValueError):
        RouteEvent(0, "s", Action.WITHDRAW, P("2001:db8::/48"), (AsPathSegment(SegmentKind.SEQUENCE, (1,)),))
    with pytest.raises(ValueError):
        RouteEvent(0, "s", Action.ANNOUNCE, P("2001:db8::/48"), (AsPathSegment(SegmentKind.SEQUENCE, (1, 2)),), origin=1)
    with pytest.raises(ValueError):
        AsPathSegment(SegmentKind.SET, (1, 1))
    with pytest.raises(ValueError):
        AsPathSegment(SegmentKind.SEQUENCE, ())


def test_mode_parse():
    assert Mode.parse("worstcase") is Mode.WORST
    assert Mode.parse("best") is Mode.BEST
