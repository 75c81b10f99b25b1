from __future__ import annotations

import io
import random

import pytest

from kirinlab.cones import customer_cones, provider_funnels, smfd_matrix
from kirinlab.errors import MismatchedInputs, UnknownNeighbor
from kirinlab.propagation import (
    Injection,
    MultilateralMode,
    Via,
    compare_to_smfd,
    fully_affected,
    injections_for_lans,
    read_injections,
    simulate,
    valley_free_violations,
)
from kirinlab.topology import build_session_matrix, load_peering_lans, load_relationships

from conftest import I, P1, P2, PSTAR, T, V, random_topology


def reached(report):
    return {a for a, e in report.per_as.items() if e.sessions_reaching}


def test_fig1_transit_via_i(fig1):
    # I exports a customer-learned route to its peer V and its customers;
    # P1 and P2 learned it from a provider, so P* never sees it
    rep = simulate(fig1, [Injection(I, Via.TRANSIT, "s")])
    assert reached(rep) == {I, P1, P2, T, V}


def test_fig1_transit_via_t_is_global(fig1):
    rep = simulate(fig1, [Injection(T, Via.TRANSIT, "s")])
    assert reached(rep) == {T, P1, P2, PSTAR, I, V}


def test_fig1_bilateral_stays_in_cone(fig1):
    rep = simulate(fig1, [Injection(I, Via.BILATERAL, "s")])
    assert reached(rep) == customer_cones(fig1)[I].members == {I, P1, P2, T}
    assert rep.cone_fraction["s"] == 1.0


def test_fraction_zero_only_neighbor(fig1):
    rep = simulate(fig1, [Injection(I, Via.BILATERAL, "s")], peer_cone_fraction=0.0)
    assert reached(rep) == {I}


def test_multilateral_modes(fig1):
    inj = [Injection(I, Via.MULTILATERAL, "rs")]
    assert reached(simulate(fig1, inj)) == {I}
    assert reached(simulate(fig1, inj, multilateral_mode=MultilateralMode.OFF)) == {I, P1, P2, T}


def test_unknown_neighbor(fig1):
    with pytest.raises(UnknownNeighbor):
        simulate(fig1, [Injection(99, Via.TRANSIT, "s")])


def test_fully_affected(fig1):
    injs = [Injection(I, Via.TRANSIT, "L1/i"), Injection(I, Via.TRANSIT, "L2/i", route_count=5)]
    rep = simulate(fig1, injs)
    assert T in fully_affected(rep, 2)
    assert fully_affected(rep, 1) == reached(rep)
    assert fully_affected(rep, 3) == set()
    assert rep.per_as[T].routes_received == 5


def test_routes_received_bounded():
    topo = random_topology(random.Random(1), 20)
    ases = sorted(topo.ases)
    injs = [Injection(ases[k], Via.BILATERAL, f"s{k}", route_count=k + 1) for k in range(0, 20, 3)]
    rep = simulate(topo, injs, peer_cone_fraction=0.5, seed=3)
    total = sum(i.route_count for i in injs)
    for e in rep.per_as.values():
        assert e.routes_received <= total


def test_fraction_half_dominated_by_prediction(fig1, fig1_lans_path):
    s = build_session_matrix(load_peering_lans(open(fig1_lans_path).read()))
    f = smfd_matrix(provider_funnels(customer_cones(fig1)), s, {I, PSTAR})
    injs = injections_for_lans(f, ["L1", "L2"])
    for seed in range(20):
        rep = simulate(fig1, injs, peer_cone_fraction=0.5, seed=seed)
        for predicted, simulated in compare_to_smfd(rep, f, ["L1", "L2"]).values():
            assert simulated <= predicted


def test_compare_ideal_and_empty(fig1, fig1_lans_path):
    s = build_session_matrix(load_peering_lans(open(fig1_lans_path).read()))
    f = smfd_matrix(provider_funnels(customer_cones(fig1)), s, {I, PSTAR})
    injs = injections_for_lans(f, ["L1"])
    assert len(injs) == 2
    rep = simulate(fig1, injs)
    assert all(p == q for p, q in compare_to_smfd(rep, f, ["L1"]).values())
    empty = compare_to_smfd(simulate(fig1, []), f, [])
    assert all(p == q == 0 for p, q in empty.values())
    with pytest.raises(MismatchedInputs):
        compare_to_smfd(rep, f, ["L2"])
    with pytest.raises(MismatchedInputs):
        compare_to_smfd(rep, f, ["L9"])


def test_valley_free_validator(fig1):
    assert valley_free_violations(fig1, Via.TRANSIT, [I, V]) == []
    assert valley_free_violations(fig1, Via.BILATERAL, [I, P1, T]) == []
    # peer-learned route going up to a provider
    assert valley_free_violations(fig1, Via.BILATERAL, [P1, PSTAR])
    # provider-learned route at P1 re-exported upwards
    assert valley_free_violations(fig1, Via.TRANSIT, [I, P1, PSTAR])
    assert valley_free_violations(fig1, Via.TRANSIT, [T, V])


@pytest.mark.parametrize("seed", range(20))
def test_all_deliveries_valley_free(seed):
    rng = random.Random(seed)
    topo = random_topology(rng, rng.randint(2, 25))
    ases = sorted(topo.ases)
    injs = [Injection(rng.choice(ases), rng.choice(list(Via)), f"s{k}") for k in range(5)]
    rep = simulate(topo, injs, multilateral_mode=MultilateralMode.OFF, record_paths=True)
    for inj in injs:
        for path in rep.deliveries[inj.session_id].values():
            assert path[0] == inj.neighbor
            assert valley_free_violations(topo, inj.via, path) == []


@pytest.mark.parametrize("seed", range(10))
def test_transit_reaches_exactly_the_valley_free_closure(seed):
    """Oracle: enumerate all simple valley-free walks by DFS on small graphs."""
    rng = random.Random(seed)
    topo = random_topology(rng, 9, p_edge=0.3, p_peer=0.15)
    start = rng.choice(sorted(topo.ases))
    seen = set()

    def walk(path):
        seen.add(path[-1])
        u = path[-1]
        for v in topo.customers(u) | topo.providers(u) | topo.peers(u):
            if v not in path and not valley_free_violations(topo, Via.TRANSIT, path + [v]):
                walk(path + [v])

    walk([start])
    assert reached(simulate(topo, [Injection(start, Via.TRANSIT, "s")])) == seen


def test_tier1_clique_transit_is_global():
    text = "1|2|0\n1|3|0\n2|3|0\n1|10|-1\n2|11|-1\n3|12|-1\n10|20|-1\n11|21|-1\n12|22|-1\n"
    topo = load_relationships(text)
    for stub in (20, 21, 22):
        assert reached(simulate(topo, [Injection(stub, Via.TRANSIT, "s")])) == topo.ases


def test_monotone_in_injections():
    topo = random_topology(random.Random(7), 20)
    ases = sorted(topo.ases)
    base = [Injection(ases[0], Via.TRANSIT, "a")]
    more = base + [Injection(ases[5], Via.BILATERAL, "b")]
    r1, r2 = simulate(topo, base), simulate(topo, more)
    for a in topo.ases:
        assert r2.sessions_reaching(a) >= r1.sessions_reaching(a)


def test_determinism_and_parallel():
    topo = random_topology(random.Random(11), 30)
    ases = sorted(topo.ases)
    injs = [Injection(a, Via.BILATERAL, f"s{a}", 3) for a in ases[:8]]
    a = simulate(topo, injs, peer_cone_fraction=0.4, seed=9)
    b = simulate(topo, injs, peer_cone_fraction=0.4, seed=9, jobs=2)
    assert a.per_as == b.per_as
    assert a.reach_fraction == b.reach_fraction
    buf1, buf2 = io.StringIO(), io.StringIO()
    a.write_csv(buf1)
    b.write_csv(buf2)
    assert buf1.getvalue() == buf2.getvalue()
    assert buf1.getvalue().startswith("asn,sessions_reaching,routes_received\n")


def test_read_injections():
    text = "session_id,neighbor,via,route_count\nx,64504,transit,10\ny,64505,bilateral\n"
    injs = read_injections(io.StringIO(text))
    assert injs == [Injection(64504, Via.TRANSIT, "x", 10), Injection(64505, Via.BILATERAL, "y", 0)]


def test_bad_fraction(fig1):
    with pytest.raises(ValueError):
        simulate(fig1, [], peer_cone_fraction=1.5)
