"""Valley-free redistribution of injected routes and per-AS exposure tallies."""

from __future__ import annotations

import csv
import enum
import logging
import random
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from .cones import CustomerCone, SmfdMatrix, customer_cones
from .errors import MismatchedInputs, UnknownNeighbor
from .topology import AsTopology

log = logging.getLogger(__name__)

# learned-from states; a customer-learned route may be exported to anyone
_FROM_CUSTOMER = 0
_FROM_OTHER = 1


class Via(enum.Enum):
    TRANSIT = "transit"
    BILATERAL = "bilateral"
    MULTILATERAL = "multilateral"


class MultilateralMode(enum.Enum):
    OFF = "off"  # route-server sessions behave like bilateral peerings
    DIRECT_ONLY = "direct-only"


@dataclass(frozen=True)
class Injection:
    neighbor: int
    via: Via
    session_id: str
    route_count: int = 0

    def __post_init__(self):
        if self.route_count < 0:
            raise ValueError("route_count must be >= 0")


@dataclass
class AsExposure:
    sessions_reaching: int = 0
    routes_received: int = 0


@dataclass
class ExposureReport:
    per_as: dict[int, AsExposure]
    reach_fraction: dict[str, float]
    cone_fraction: dict[str, float]
    injections: list[Injection] = field(default_factory=list)
    # session_id -> {asn: path from the injection neighbor to asn}
    deliveries: dict[str, dict[int, tuple[int, ...]]] | None = None

    def sessions_reaching(self, asn: int) -> int:
        e = self.per_as.get(asn)
        return e.sessions_reaching if e else 0

    def summary(self) -> dict:
        return {
            "injections": len(self.injections),
            "reached_ases": sum(1 for e in self.per_as.values() if e.sessions_reaching),
            "reach_fraction": dict(sorted(self.reach_fraction.items())),
            "cone_fraction": dict(sorted(self.cone_fraction.items())),
        }

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asn", "sessions_reaching", "routes_received"])
        for asn in sorted(self.per_as):
            e = self.per_as[asn]
            w.writerow([asn, e.sessions_reaching, e.routes_received])


def _valley_free_bfs(topology: AsTopology, start: int, state: int) -> dict[int, tuple[int, ...]]:
    """Every AS a route can reach from ``start`` under the export rules, with one path each."""
    best: dict[int, int] = {start: state}
    parent: dict[tuple[int, int], tuple[int, int] | None] = {(start, state): None}
    queue = deque([(start, state)])
    while queue:
        asn, st = queue.popleft()
        if best.get(asn) != st:
            continue  # superseded by a customer-learned copy
        targets = [(c, _FROM_OTHER) for c in sorted(topology.customers(asn))]
        if st == _FROM_CUSTOMER:
            targets += [(p, _FROM_CUSTOMER) for p in sorted(topology.providers(asn))]
            targets += [(q, _FROM_OTHER) for q in sorted(topology.peers(asn))]
        for nxt, nst in targets:
            cur = best.get(nxt)
            if cur is None or nst < cur:
                best[nxt] = nst
                parent[(nxt, nst)] = (asn, st)
                queue.append((nxt, nst))
    paths = {}
    for asn, st in best.items():
        hops = []
        node: tuple[int, int] | None = (asn, st)
        while node is not None:
            hops.append(node[0])
            node = parent[node]
        paths[asn] = tuple(reversed(hops))
    return paths


def _reach_one(args) -> tuple[str, dict[int, tuple[int, ...]], int]:
    topology, inj, fraction, mode, seed, cone_size = args
    if inj.via is Via.MULTILATERAL and mode is MultilateralMode.DIRECT_ONLY:
        return inj.session_id, {inj.neighbor: (inj.neighbor,)}, cone_size
    if inj.via is Via.TRANSIT:
        return inj.session_id, _valley_free_bfs(topology, inj.neighbor, _FROM_CUSTOMER), cone_size
    full = _valley_free_bfs(topology, inj.neighbor, _FROM_OTHER)
    if fraction >= 1.0:
        return inj.session_id, full, cone_size
    rng = random.Random(f"{seed}/{inj.session_id}")
    kept = {}
    for asn in sorted(full):
        draw = rng.random()
        if asn == inj.neighbor or draw < fraction:
            kept[asn] = full[asn]
    return inj.session_id, kept, cone_size


def simulate(
    topology: AsTopology,
    injections: Sequence[Injection],
    peer_cone_fraction: float = 1.0,
    multilateral_mode: MultilateralMode | str = MultilateralMode.DIRECT_ONLY,
    seed: int = 0,
    cones: dict[int, CustomerCone] | None = None,
    record_paths: bool = False,
    jobs: int = 1,
) -> ExposureReport:
    """Redistribute each injection and tally sessions and routes per AS.

    Transit injections enter the neighbour as customer-learned and spread under
    the valley-free export rules. Peer injections enter as peer-learned, so
    they stay inside the neighbour's customer cone; each cone member beyond the
    neighbour is kept with probability ``peer_cone_fraction``.
    """
    if not 0.0 <= peer_cone_fraction <= 1.0:
        raise ValueError("peer_cone_fraction must lie in [0, 1]")
    mode = MultilateralMode(multilateral_mode) if isinstance(multilateral_mode, str) else multilateral_mode
    ids = [inj.session_id for inj in injections]
    if len(set(ids)) != len(ids):
        raise ValueError("injection session ids must be unique")
    for inj in injections:
        if inj.neighbor not in topology.ases:
            raise UnknownNeighbor(f"injection {inj.session_id}: AS{inj.neighbor} not in topology")
    if cones is None:
        cones = customer_cones(topology)
    tasks = [
        (topology, inj, peer_cone_fraction, mode, seed, len(cones[inj.neighbor])) for inj in injections
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_reach_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_reach_one(t) for t in tasks]
    per_as = {asn: AsExposure() for asn in sorted(topology.ases)}
    reach, cone_frac = {}, {}
    deliveries: dict[str, dict[int, tuple[int, ...]]] | None = {} if record_paths else None
    n_ases = len(topology.ases)
    for inj, (sid, reached, cone_size) in zip(injections, results):
        for asn in reached:
            e = per_as[asn]
            e.sessions_reaching += 1
            e.routes_received += inj.route_count
        cone = cones[inj.neighbor].members
        reach[sid] = len(reached) / n_ases if n_ases else 0.0
        cone_frac[sid] = sum(1 for a in reached if a in cone) / cone_size
        if deliveries is not None:
            deliveries[sid] = reached
    return ExposureReport(per_as, reach, cone_frac, list(injections), deliveries)


def fully_affected(report: ExposureReport, r: int) -> set[int]:
    return {asn for asn, e in report.per_as.items() if e.sessions_reaching >= r}


def valley_free_violations(topology: AsTopology, via: Via, path: Sequence[int]) -> list[str]:
    """Independent check of one delivery path against the two export rules."""
    problems = []
    state = _FROM_CUSTOMER if via is Via.TRANSIT else _FROM_OTHER
    for u, v in zip(path, path[1:]):
        rel = topology.relationship(u, v)
        if rel is None:
            problems.append(f"{u}->{v}: no link")
            continue
        if state == _FROM_OTHER and rel != "customer":
            problems.append(f"{u}->{v}: non-customer-learned route exported to a {rel}")
        state = _FROM_CUSTOMER if rel == "provider" else _FROM_OTHER
    return problems


def injections_for_lans(
    smfd: SmfdMatrix, lans: Iterable[str], via: Via = Via.BILATERAL, route_count: int = 0
) -> list[Injection]:
    """One injection per establishable session of each injection AS on the chosen LANs."""
    chosen = set(lans)
    unknown = chosen - set(smfd.lan_ids)
    if unknown:
        raise MismatchedInputs(f"LANs not in the SMFD matrix: {sorted(unknown)}")
    out = []
    for (asn, lan), w in sorted(smfd.session_counts.items()):
        if lan in chosen:
            out.extend(Injection(asn, via, f"{lan}/{asn}/{k}", route_count) for k in range(w))
    return out


def compare_to_smfd(
    report: ExposureReport, smfd: SmfdMatrix, selected_lans: Iterable[str]
) -> dict[int, tuple[int, int]]:
    """Per AS: (SMFD summed over the selected LANs, sessions that actually reached it)."""
    lans = sorted(set(selected_lans))
    unknown = set(lans) - set(smfd.lan_ids)
    if unknown:
        raise MismatchedInputs(f"LANs not in the SMFD matrix: {sorted(unknown)}")
    expected: dict[int, int] = {}
    for (asn, lan), w in smfd.session_counts.items():
        if lan in lans:
            expected[asn] = expected.get(asn, 0) + w
    injected: dict[int, int] = {}
    for inj in report.injections:
        if inj.neighbor not in smfd.injection_set:
            raise MismatchedInputs(f"injection via AS{inj.neighbor} is outside the injection set")
        injected[inj.neighbor] = injected.get(inj.neighbor, 0) + 1
    if injected != {a: w for a, w in expected.items() if w}:
        raise MismatchedInputs("injections do not match the sessions on the selected LANs")
    asns = sorted(set(report.per_as) | {a for a, _ in smfd.f})
    return {a: (smfd.predicted(a, lans), report.sessions_reaching(a)) for a in asns}


def read_injections(fh: Iterable[str]) -> list[Injection]:
    """CSV ``session_id,neighbor,via,route_count`` (header optional)."""
    out = []
    for row in csv.reader(fh):
        if not row or row[0].startswith("#") or row[0] == "session_id":
            continue
        sid, neighbor, via, *rest = [c.strip() for c in row]
        out.append(Injection(int(neighbor), Via(via), sid, int(rest[0]) if rest else 0))
    return out
