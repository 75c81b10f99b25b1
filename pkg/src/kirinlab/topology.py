"""AS-relationship and peering-LAN ingestion.

Relationship files use the pipe-delimited ``asn1|asn2|rel`` convention of
public AS-relationship exports (``-1``: asn1 is provider of asn2, ``0``: peers).
LAN membership files are CSV triplets ``lan_id,asn,ipv6_address``.
"""

from __future__ import annotations

import csv
import enum
import io
import ipaddress
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .errors import ConflictingRelationship, InvalidAddress, MalformedLine, SelfLoop

log = logging.getLogger(__name__)

AS_TRANS = 23456
MAX_ASN = 2**32 - 1


class Relationship(enum.IntEnum):
    P2C = -1
    P2P = 0

    @property
    def label(self) -> str:
        return "p2c" if self is Relationship.P2C else "p2p"


def parse_asn(text: str) -> int:
    asn = int(text)
    if not 0 < asn <= MAX_ASN:
        raise ValueError(f"AS number out of range: {text}")
    return asn


def check_role_asn(asn: int, role: str = "origin") -> int:
    """Validate an AS number used as attacker/origin; AS_TRANS is not allowed there."""
    if not 0 < asn <= MAX_ASN:
        raise ValueError(f"{role} AS number out of range: {asn}")
    if asn == AS_TRANS:
        raise ValueError(f"AS{AS_TRANS} (AS_TRANS) cannot be used as {role}")
    return asn


@dataclass(frozen=True)
class AsTopology:
    """Immutable AS graph. P2C edges are stored as ``(provider, customer)``."""

    ases: frozenset[int]
    edges: frozenset[tuple[int, int, Relationship]]
    _customers: dict = field(default=None, repr=False, compare=False)
    _providers: dict = field(default=None, repr=False, compare=False)
    _peers: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        customers, providers, peers = defaultdict(set), defaultdict(set), defaultdict(set)
        seen: dict[frozenset, tuple] = {}
        for a, b, rel in self.edges:
            if a == b:
                raise ValueError(f"self-loop on AS{a}")
            if a not in self.ases or b not in self.ases:
                raise ValueError(f"edge {a}|{b} references an unknown AS")
            key = frozenset((a, b))
            if key in seen:
                raise ValueError(f"more than one relationship for {a}|{b}")
            seen[key] = (a, b, rel)
            if rel is Relationship.P2C:
                customers[a].add(b)
                providers[b].add(a)
            else:
                peers[a].add(b)
                peers[b].add(a)
        freeze = lambda d: {k: frozenset(v) for k, v in d.items()}  # noqa: E731
        object.__setattr__(self, "_customers", freeze(customers))
        object.__setattr__(self, "_providers", freeze(providers))
        object.__setattr__(self, "_peers", freeze(peers))

    def customers(self, asn: int) -> frozenset[int]:
        return self._customers.get(asn, frozenset())

    def providers(self, asn: int) -> frozenset[int]:
        return self._providers.get(asn, frozenset())

    def peers(self, asn: int) -> frozenset[int]:
        return self._peers.get(asn, frozenset())

    def relationship(self, a: int, b: int) -> str | None:
        """How ``b`` relates to ``a``: 'customer', 'provider', 'peer' or None."""
        if b in self.customers(a):
            return "customer"
        if b in self.providers(a):
            return "provider"
        if b in self.peers(a):
            return "peer"
        return None

    @property
    def p2c_edges(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a, b, rel in self.edges if rel is Relationship.P2C)

    @property
    def p2p_edges(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a, b, rel in self.edges if rel is Relationship.P2P)

    def dumps(self) -> str:
        """Serialise back to the ``asn1|asn2|rel`` format (sorted, one edge per line)."""
        lines = [f"{a}|{b}|{int(rel)}" for a, b, rel in sorted(self.edges)]
        isolated = self.ases - {x for a, b, _ in self.edges for x in (a, b)}
        lines += [f"# isolated {asn}" for asn in sorted(isolated)]
        return "\n".join(lines) + ("\n" if lines else "")


def _lines(source: str | TextIO | Iterable[str]) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def load_relationships(source: str | TextIO | Iterable[str]) -> AsTopology:
    """Parse an ``asn1|asn2|rel`` stream into a validated :class:`AsTopology`.

    ``source`` may be an open text stream, an iterable of lines or the file
    content itself. Comment lines start with ``#``; a ``# isolated ASN`` comment
    (as written by :meth:`AsTopology.dumps`) declares an AS without edges.
    Extra trailing columns (e.g. an inference-source tag) are ignored.
    """
    ases: set[int] = set()
    labels: dict[frozenset, tuple[int, int, Relationship, int]] = {}
    for line_no, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "isolated" and parts[1].isdigit():
                ases.add(parse_asn(parts[1]))
            continue
        fields = line.split("|")
        if len(fields) < 3:
            raise MalformedLine(line_no, line, "expected asn1|asn2|rel")
        try:
            a, b = parse_asn(fields[0]), parse_asn(fields[1])
            rel = Relationship(int(fields[2]))
        except ValueError as exc:
            raise MalformedLine(line_no, line, str(exc)) from None
        if a == b:
            raise SelfLoop(line_no, a)
        for asn in (a, b):
            if asn == AS_TRANS:
                log.warning("line %d: AS%d (AS_TRANS) in relationship data", line_no, asn)
        key = frozenset((a, b))
        edge = (a, b, rel)
        if key in labels:
            pa, pb, prel, _ = labels[key]
            same = prel is rel and (rel is Relationship.P2P or (pa, pb) == (a, b))
            if not same:
                raise ConflictingRelationship(
                    line_no, (a, b), _describe(pa, pb, prel), _describe(a, b, rel)
                )
            continue
        labels[key] = (*edge, line_no)
        ases.update((a, b))
    edges = frozenset(
        (min(a, b), max(a, b), rel) if rel is Relationship.P2P else (a, b, rel)
        for a, b, rel, _ in labels.values()
    )
    return AsTopology(frozenset(ases), edges)


def _describe(a: int, b: int, rel: Relationship) -> str:
    return f"{a} provider-of {b}" if rel is Relationship.P2C else f"{a} peer {b}"


def read_relationships(path) -> AsTopology:
    with open(path, encoding="utf-8") as fh:
        return load_relationships(fh)


@dataclass(frozen=True)
class PeeringLan:
    id: str
    members: tuple[tuple[int, ipaddress.IPv6Address], ...]

    def sessions(self, asn: int) -> int:
        return sum(1 for a, _ in self.members if a == asn)


def load_peering_lans(source: str | TextIO | Iterable[str]) -> list[PeeringLan]:
    """Read ``lan_id,asn,ipv6_address`` rows; exact duplicate triplets collapse."""
    reader = csv.reader(_lines(source))
    members: dict[str, set] = defaultdict(set)
    header_seen = False
    for line_no, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        cells = [cell.strip() for cell in row]
        if not header_seen and cells[:3] == ["lan_id", "asn", "ipv6_address"]:
            header_seen = True
            continue
        if len(cells) != 3 or not cells[0]:
            raise MalformedLine(line_no, ",".join(row), "expected lan_id,asn,ipv6_address")
        try:
            asn = parse_asn(cells[1])
        except ValueError as exc:
            raise MalformedLine(line_no, ",".join(row), str(exc)) from None
        try:
            addr = ipaddress.IPv6Address(cells[2])
        except ValueError:
            raise InvalidAddress(line_no, cells[2]) from None
        members[cells[0]].add((asn, addr))
    return [PeeringLan(lan, tuple(sorted(members[lan]))) for lan in sorted(members)]


def read_peering_lans(path) -> list[PeeringLan]:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_peering_lans(fh)


@dataclass(frozen=True)
class SessionMatrix:
    """omega[(asn, lan_id)] = number of distinct interface addresses of asn on the LAN."""

    omega: dict[tuple[int, str], int]
    lan_ids: tuple[str, ...]
    asns: tuple[int, ...]

    def __getitem__(self, key: tuple[int, str]) -> int:
        return self.omega.get(key, 0)

    def row_sum(self, asn: int) -> int:
        return sum(self.omega.get((asn, lan), 0) for lan in self.lan_ids)

    def col_sum(self, lan: str) -> int:
        return sum(self.omega.get((asn, lan), 0) for asn in self.asns)

    def total(self) -> int:
        return sum(self.omega.values())

    def row_sums(self) -> dict[int, int]:
        sums = dict.fromkeys(self.asns, 0)
        for (asn, _), w in self.omega.items():
            sums[asn] += w
        return sums

    def lans_of(self, asn: int) -> dict[str, int]:
        return {lan: self.omega[(asn, lan)] for lan in self.lan_ids if (asn, lan) in self.omega}


def build_session_matrix(lans: list[PeeringLan]) -> SessionMatrix:
    ids = [lan.id for lan in lans]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate peering LAN ids")
    omega: dict[tuple[int, str], int] = {}
    asns: set[int] = set()
    for lan in lans:
        for asn in {a for a, _ in lan.members}:
            asns.add(asn)
        for asn, _addr in set(lan.members):
            omega[(asn, lan.id)] = omega.get((asn, lan.id), 0) + 1
    ordered = dict(sorted(omega.items()))
    return SessionMatrix(ordered, tuple(sorted(ids)), tuple(sorted(asns)))


def validation_report(topology: AsTopology, lans: list[PeeringLan]) -> dict:
    """Summary counts plus LAN members missing from the relationship data."""
    lan_asns = {asn for lan in lans for asn, _ in lan.members}
    orphans = sorted(lan_asns - topology.ases)
    if orphans:
        log.warning("%d LAN member ASes absent from relationship data", len(orphans))
    return {
        "ases": len(topology.ases),
        "p2c_edges": len(topology.p2c_edges),
        "p2p_edges": len(topology.p2p_edges),
        "lans": len(lans),
        "triplets": sum(len(lan.members) for lan in lans),
        "orphan_asns": orphans,
    }
