"""Prefix de-aggregation: arithmetic, schedules, streams and hint analysis."""

from .hints import analyze_aggregation_hints
from .prefixes import (
    Aggregation,
    AggregationKind,
    Ipv6Prefix,
    can_aggregate,
    count_subroutes,
    enumerate_subprefixes,
    prefix_from_node,
)
from .schedule import AnnouncementSchedule, Timing, build_schedule, verify_schedule
from .stream import Action, AsPathSegment, Mode, RouteEvent, SegmentKind, generate_stream

__all__ = [
    "Action",
    "Aggregation",
    "AggregationKind",
    "AnnouncementSchedule",
    "AsPathSegment",
    "Ipv6Prefix",
    "Mode",
    "RouteEvent",
    "SegmentKind",
    "Timing",
    "analyze_aggregation_hints",
    "build_schedule",
    "can_aggregate",
    "count_subroutes",
    "enumerate_subprefixes",
    "generate_stream",
    "prefix_from_node",
    "verify_schedule",
]
