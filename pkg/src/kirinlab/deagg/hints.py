"""Counting aggregation hints (AS_SET, ATOMIC_AGGREGATE, AGGREGATOR) in route data."""

from __future__ import annotations

from typing import Iterable

from .stream import Action, RouteEvent, SegmentKind

SCOPES = ("routes", "paths", "prefixes")
COLUMNS = ("total", "as_set", "atomic", "aggregator", "any_hint")


def _hints(ev: RouteEvent) -> tuple[bool, bool, bool]:
    as_set = any(seg.kind is SegmentKind.SET for seg in ev.path)
    return as_set, ev.atomic_aggregate, ev.aggregator is not None


def analyze_aggregation_hints(routes: Iterable[RouteEvent]) -> dict[str, dict[str, int]]:
    """Hint counts per scope.

    Every announce is one route. Paths and prefixes are distinct entities; one
    counts toward a hint column when at least one of its routes carries it.
    """
    table = {scope: dict.fromkeys(COLUMNS, 0) for scope in SCOPES}
    paths: dict[tuple, list[bool]] = {}
    prefixes: dict[tuple[int, int], list[bool]] = {}
    rows = table["routes"]
    for ev in routes:
        if ev.action is not Action.ANNOUNCE:
            continue
        flags = _hints(ev)
        rows["total"] += 1
        for col, hit in zip(COLUMNS[1:4], flags):
            rows[col] += hit
        rows["any_hint"] += any(flags)
        for key, store in (
            (tuple((seg.kind, seg.asns) for seg in ev.path), paths),
            ((ev.prefix.address, ev.prefix.length), prefixes),
        ):
            seen = store.setdefault(key, [False, False, False])
            for i, hit in enumerate(flags):
                seen[i] = seen[i] or hit
    for scope, store in (("paths", paths), ("prefixes", prefixes)):
        row = table[scope]
        row["total"] = len(store)
        for flags in store.values():
            for col, hit in zip(COLUMNS[1:4], flags):
                row[col] += hit
            row["any_hint"] += any(flags)
    return table


def format_table(table: dict[str, dict[str, int]]) -> str:
    """Plain-text rendering with percentages of the scope total."""
    lines = [f"{'':10}" + "".join(f"{c:>20}" for c in COLUMNS)]
    for scope in SCOPES:
        row = table[scope]
        total = row["total"]
        cells = [f"{total:>20}"]
        for col in COLUMNS[1:]:
            pct = 100 * row[col] / total if total else 0.0
            cells.append(f"{row[col]:>12} ({pct:4.0f}%)")
        lines.append(f"{scope:10}" + "".join(cells))
    return "\n".join(lines)
