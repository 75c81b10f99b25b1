"""Customer cones, provider funnels and session-multiplied funneling degrees."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .topology import AsTopology, SessionMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CustomerCone:
    owner: int
    members: frozenset[int]

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, asn: int) -> bool:
        return asn in self.members


@dataclass(frozen=True)
class ProviderFunnel:
    target: int
    members: frozenset[int]

    @property
    def degree(self) -> int:
        return len(self.members)

    def __contains__(self, asn: int) -> bool:
        return asn in self.members


def _strongly_connected(nodes: list[int], succ: dict[int, Iterable[int]]) -> list[list[int]]:
    """Iterative Tarjan; components come out successors-first."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(sorted(succ.get(root, ()))))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(succ.get(w, ())))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


def p2c_cycles(topology: AsTopology) -> list[list[int]]:
    """Groups of ASes that are (indirectly) each other's providers -- data noise."""
    nodes = sorted(topology.ases)
    succ = {a: topology.customers(a) for a in nodes}
    return [c for c in _strongly_connected(nodes, succ) if len(c) > 1]


def _bits_to_members(bits: int, order: list[int]) -> frozenset[int]:
    raw = np.frombuffer(bits.to_bytes((len(order) + 7) // 8, "little"), dtype=np.uint8)
    idx = np.flatnonzero(np.unpackbits(raw, bitorder="little"))
    return frozenset(order[i] for i in idx)


def customer_cones(topology: AsTopology) -> dict[int, CustomerCone]:
    """Recursive P2C closure: each AS plus all direct and indirect customers.

    Provider/customer cycles are collapsed into one component whose members
    share a cone; they are logged as warnings rather than rejected.
    """
    order = sorted(topology.ases)
    pos = {asn: i for i, asn in enumerate(order)}
    succ = {a: topology.customers(a) for a in order}
    comps = _strongly_connected(order, succ)
    comp_of = {}
    for ci, comp in enumerate(comps):
        for asn in comp:
            comp_of[asn] = ci
        if len(comp) > 1:
            log.warning("P2C cycle among %s; cone closure computed to fixpoint", comp)
    comp_bits = [0] * len(comps)
    for ci, comp in enumerate(comps):  # successors-first, so customer comps are done
        bits = 0
        for asn in comp:
            bits |= 1 << pos[asn]
            for cust in succ[asn]:
                cj = comp_of[cust]
                if cj != ci:
                    bits |= comp_bits[cj]
        comp_bits[ci] = bits
    members = [_bits_to_members(b, order) for b in comp_bits]
    return {asn: CustomerCone(asn, members[comp_of[asn]]) for asn in order}


def cones_from_paths(topology: AsTopology, paths: Iterable[Iterable[int]]) -> dict[int, CustomerCone]:
    """Provider/peer-observed cones from AS paths (collector side first, origin last).

    An AS ``x`` at position ``i`` whose left neighbour is its provider or peer
    exported the route upwards, so every AS after it that continues a chain of
    provider-to-customer links belongs to ``x``'s cone.
    """
    cone: dict[int, set[int]] = {asn: {asn} for asn in topology.ases}
    for path in paths:
        hops: list[int] = []
        for asn in path:
            if not hops or hops[-1] != asn:  # strip prepending
                hops.append(asn)
        for i in range(1, len(hops)):
            x = hops[i]
            if x not in cone:
                continue
            if topology.relationship(x, hops[i - 1]) not in ("provider", "peer"):
                continue
            for j in range(i + 1, len(hops)):
                if hops[j] not in topology.customers(hops[j - 1]):
                    break
                cone[x].add(hops[j])
    return {asn: CustomerCone(asn, frozenset(m)) for asn, m in sorted(cone.items())}


def read_paths(path) -> list[list[int]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                out.append([int(tok) for tok in line.split() if tok.isdigit()])
    return out


def provider_funnels(cones: dict[int, CustomerCone]) -> dict[int, ProviderFunnel]:
    """Invert cones: PF_T = {a : T in cone(a)}."""
    inverted: dict[int, set[int]] = defaultdict(set)
    for owner, cone in cones.items():
        inverted[owner].add(owner)
        for member in cone.members:
            inverted[member].add(owner)
    return {t: ProviderFunnel(t, frozenset(m)) for t, m in sorted(inverted.items())}


def restricted_fd(funnel: ProviderFunnel, s: Iterable[int]) -> int:
    return len(funnel.members.intersection(s))


@dataclass(frozen=True)
class SmfdMatrix:
    """f[(a, lan)] = sum of omega(i, lan) over injection ASes i in a's provider funnel."""

    f: dict[tuple[int, str], int]
    injection_set: frozenset[int]
    lan_ids: tuple[str, ...]
    asns: tuple[int, ...]
    session_counts: dict[tuple[int, str], int] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def __getitem__(self, key: tuple[int, str]) -> int:
        return self.f.get(key, 0)

    def row_sums(self) -> dict[int, int]:
        sums: dict[int, int] = defaultdict(int)
        for (asn, _), v in self.f.items():
            sums[asn] += v
        return dict(sorted(sums.items()))

    def predicted(self, asn: int, lans: Iterable[str]) -> int:
        return sum(self.f.get((asn, lan), 0) for lan in lans)


def smfd_matrix(
    funnels: dict[int, ProviderFunnel], session_matrix: SessionMatrix, injection_set: Iterable[int]
) -> SmfdMatrix:
    injection = frozenset(injection_set)
    warnings = []
    missing = sorted(injection - set(session_matrix.asns))
    if missing:
        warnings.append(f"injection ASes without sessions (omega=0): {missing}")
    # reach[i] = {a : i in PF_a}; an AS unknown to the topology only funnels to itself
    reach: dict[int, set[int]] = {i: set() for i in injection}
    for a, funnel in funnels.items():
        for i in funnel.members & injection:
            reach[i].add(a)
    for i in injection:
        if i not in funnels:
            reach[i].add(i)
    f: dict[tuple[int, str], int] = defaultdict(int)
    counts = {}
    for i in sorted(injection):
        for lan, w in session_matrix.lans_of(i).items():
            counts[(i, lan)] = w
            for a in reach[i]:
                f[(a, lan)] += w
    for w in warnings:
        log.warning(w)
    ordered = dict(sorted((k, v) for k, v in f.items() if v))
    return SmfdMatrix(
        ordered,
        injection,
        session_matrix.lan_ids,
        tuple(sorted({a for a, _ in ordered})),
        dict(sorted(counts.items())),
        tuple(warnings),
    )


def rank_injection_candidates(
    cones: dict[int, CustomerCone], session_matrix: SessionMatrix, k: int
) -> list[int]:
    """Top-k ASes by cone size times total session count (ties: lower ASN first)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    sums = session_matrix.row_sums()
    score = {asn: (len(cones[asn]) if asn in cones else 1) * total for asn, total in sums.items()}
    return sorted(score, key=lambda a: (-score[a], a))[:k]
