from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirinlab.errors import ConflictingRelationship, InvalidAddress, MalformedLine, SelfLoop
from kirinlab.topology import (
    AS_TRANS,
    AsTopology,
    Relationship,
    build_session_matrix,
    check_role_asn,
    load_peering_lans,
    load_relationships,
    validation_report,
)

from conftest import I, P1, P2, PSTAR, T, V, random_topology


def test_single_edge():
    topo = load_relationships("1|2|-1")
    assert topo.ases == {1, 2}
    assert topo.p2c_edges == [(1, 2)]
    assert topo.customers(1) == {2}
    assert topo.providers(2) == {1}
    assert topo.relationship(2, 1) == "provider"


def test_conflicting_labels():
    with pytest.raises(ConflictingRelationship) as exc:
        load_relationships("1|2|-1\n1|2|0")
    assert exc.value.line_no == 2


def test_reverse_p2c_conflicts():
    with pytest.raises(ConflictingRelationship):
        load_relationships("1|2|-1\n2|1|-1\n")


def test_duplicate_identical_line_is_fine():
    topo = load_relationships("1|2|-1\n1|2|-1\n3|4|0\n4|3|0\n")
    assert topo.p2c_edges == [(1, 2)]
    assert topo.p2p_edges == [(3, 4)]


@pytest.mark.parametrize(
    "text,line_no",
    [("1|2", 1), ("# c\nfoo|2|-1", 2), ("1|2|5", 1), ("1|2|-1\n\n1|x|0", 3), ("0|2|-1", 1)],
)
def test_malformed_line_reports_number(text, line_no):
    with pytest.raises(MalformedLine) as exc:
        load_relationships(text)
    assert exc.value.line_no == line_no


def test_self_loop():
    with pytest.raises(SelfLoop):
        load_relationships("7|7|0")


def test_extra_columns_and_comments_ignored():
    topo = load_relationships("# header\n1|2|-1|bgp\n2|3|0|mlp\n")
    assert topo.p2c_edges == [(1, 2)]
    assert topo.p2p_edges == [(2, 3)]


def test_fig1_fixture(fig1):
    assert fig1.ases == {T, P1, P2, PSTAR, I, V}
    assert len(fig1.p2c_edges) == 5
    assert len(fig1.p2p_edges) == 1
    assert fig1.peers(I) == {V}
    assert set(fig1.p2c_edges) == {(PSTAR, P1), (I, P1), (I, P2), (P1, T), (P2, T)}


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_round_trip(seed):
    topo = random_topology(random.Random(seed), random.Random(seed).randint(1, 25))
    again = load_relationships(topo.dumps())
    assert again.edges == topo.edges
    assert again.ases == topo.ases


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_antisymmetry(seed):
    topo = random_topology(random.Random(seed), 20)
    for a in topo.ases:
        for b in topo.customers(a):
            assert a not in topo.customers(b)


def test_topology_rejects_bad_edges():
    with pytest.raises(ValueError):
        AsTopology(frozenset({1}), frozenset({(1, 2, Relationship.P2C)}))
    with pytest.raises(ValueError):
        AsTopology(frozenset({1, 2}), frozenset({(1, 2, Relationship.P2C), (2, 1, Relationship.P2P)}))


def test_as_trans_not_allowed_as_origin():
    with pytest.raises(ValueError):
        check_role_asn(AS_TRANS)
    assert check_role_asn(64500) == 64500


def test_lan_dedup():
    lans = load_peering_lans("L1,10,2001:db8::1\nL1,10,2001:db8::1\n")
    assert len(lans) == 1
    assert len(lans[0].members) == 1
    assert lans[0].members[0][0] == 10


def test_lan_two_addresses_count_twice():
    lans = load_peering_lans("lan_id,asn,ipv6_address\nL1,10,2001:db8::1\nL1,10,2001:db8::2\n")
    assert build_session_matrix(lans)[(10, "L1")] == 2


def test_lan_address_normalisation_dedups():
    lans = load_peering_lans("L1,10,2001:db8::1\nL1,10,2001:0db8:0:0::1\n")
    assert build_session_matrix(lans)[(10, "L1")] == 1


def test_lan_errors():
    with pytest.raises(InvalidAddress):
        load_peering_lans("L1,10,192.0.2.1\n")
    with pytest.raises(MalformedLine):
        load_peering_lans("L1,10\n")
    with pytest.raises(MalformedLine):
        load_peering_lans("L1,ten,2001:db8::1\n")


def test_lan_scale_24k_rows_725_lans():
    rng = random.Random(0)
    rows = []
    for k in range(24_000):
        lan = f"IX{k % 725:03d}"
        rows.append(f"{lan},{rng.randint(1, 60000)},2001:db8:{k // 65536:x}:{k % 65536:x}::1")
    lans = load_peering_lans("\n".join(rows))
    assert len(lans) == 725
    assert sum(len(lan.members) for lan in lans) == 24_000
    assert build_session_matrix(lans).total() == 24_000


def test_empty_matrix():
    m = build_session_matrix([])
    assert m.asns == () and m.lan_ids == () and m.total() == 0


def test_single_cell_matrix():
    m = build_session_matrix(load_peering_lans("L1,10,2001:db8::1\n"))
    assert m[(10, "L1")] == 1
    assert m[(10, "L2")] == 0
    assert m[(11, "L1")] == 0


def test_row_sums_fixture():
    text = "L1,10,2001:db8::1\nL1,10,2001:db8::2\nL1,10,2001:db8::3\nL2,10,2001:db8:1::1\nL2,20,2001:db8:1::2\n"
    m = build_session_matrix(load_peering_lans(text))
    assert m.row_sums() == {10: 4, 20: 1}
    assert m.col_sum("L1") == 3
    assert m.lans_of(10) == {"L1": 3, "L2": 1}


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABCD"), st.integers(1, 6), st.integers(1, 5)), max_size=60))
def test_omega_total_equals_distinct_triplets(rows):
    text = "".join(f"L{l},{a},2001:db8::{x}\n" for l, a, x in rows)
    m = build_session_matrix(load_peering_lans(text))
    assert m.total() == len(set(rows))


def test_validation_report_flags_orphans(fig1):
    lans = load_peering_lans("L1,64504,2001:db8::1\nL1,65999,2001:db8::2\n")
    report = validation_report(fig1, lans)
    assert report == {
        "ases": 6,
        "p2c_edges": 5,
        "p2p_edges": 1,
        "lans": 1,
        "triplets": 2,
        "orphan_asns": [65999],
    }
