from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirinlab.cones import (
    cones_from_paths,
    customer_cones,
    p2c_cycles,
    provider_funnels,
    rank_injection_candidates,
    restricted_fd,
    smfd_matrix,
)
from kirinlab.topology import build_session_matrix, load_peering_lans, load_relationships

from conftest import I, P1, P2, PSTAR, T, V, random_topology


def reach_oracle(topo, a):
    seen, stack = {a}, [a]
    while stack:
        for c in topo.customers(stack.pop()):
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return seen


def test_fig1_cones(fig1):
    cones = customer_cones(fig1)
    assert cones[P1].members == {P1, T}
    assert cones[I].members == {I, P1, P2, T}
    assert cones[PSTAR].members == {PSTAR, P1, T}
    assert cones[T].members == {T}
    assert cones[V].members == {V}


def test_fig1_funnel(fig1):
    funnels = provider_funnels(customer_cones(fig1))
    assert funnels[T].members == {P1, P2, PSTAR, I, T}
    assert funnels[T].degree == 5
    assert funnels[V].members == {V}


def test_isolated_as():
    topo = load_relationships("# isolated 9\n1|2|-1\n")
    cones = customer_cones(topo)
    assert cones[9].members == {9}
    funnels = provider_funnels(cones)
    assert funnels[9].degree == 1


@pytest.mark.parametrize("seed", range(30))
def test_cones_match_dfs(seed):
    topo = random_topology(random.Random(seed), 12, p_edge=0.25)
    cones = customer_cones(topo)
    for a in topo.ases:
        assert cones[a].members == reach_oracle(topo, a)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_funnel_cone_duality(seed):
    rng = random.Random(seed)
    topo = random_topology(rng, rng.randint(1, 25))
    cones = customer_cones(topo)
    funnels = provider_funnels(cones)
    for t in topo.ases:
        for a in topo.ases:
            assert (t in cones[a]) == (a in funnels[t])


def test_cycle_is_collapsed_and_reported():
    topo = load_relationships("1|2|-1\n2|3|-1\n3|1|-1\n3|4|-1\n")
    assert [sorted(c) for c in p2c_cycles(topo)] == [[1, 2, 3]]
    cones = customer_cones(topo)
    for a in (1, 2, 3):
        assert cones[a].members == {1, 2, 3, 4}


def test_restricted_fd(fig1):
    pf = provider_funnels(customer_cones(fig1))[T]
    assert restricted_fd(pf, {I, P1}) == 2
    assert restricted_fd(pf, set()) == 0
    assert restricted_fd(pf, fig1.ases) == pf.degree


def test_smfd_examples(fig1, fig1_lans_path):
    funnels = provider_funnels(customer_cones(fig1))
    s = build_session_matrix(load_peering_lans(open(fig1_lans_path).read()))
    empty = smfd_matrix(funnels, s, set())
    assert empty.f == {}
    f = smfd_matrix(funnels, s, {I})
    assert f[(T, "L1")] == 2
    assert f[(V, "L1")] == 0
    assert f[(I, "L1")] == 2
    assert f[(P2, "L2")] == 1


@pytest.mark.parametrize("seed", range(20))
def test_smfd_indicator_sum_oracle(seed):
    rng = random.Random(seed)
    topo = random_topology(rng, 15)
    ases = sorted(topo.ases)
    rows = [f"L{rng.randint(1, 4)},{rng.choice(ases)},2001:db8::{rng.randint(1, 9)}" for _ in range(30)]
    s = build_session_matrix(load_peering_lans("\n".join(rows)))
    cones = customer_cones(topo)
    inj = set(rng.sample(ases, 4))
    f = smfd_matrix(provider_funnels(cones), s, inj)
    for a in ases:
        for lan in s.lan_ids:
            expect = sum(s[(i, lan)] for i in inj if a in cones[i] or a == i)
            assert f[(a, lan)] == expect
            assert f[(a, lan)] <= s.col_sum(lan)


def test_rank_single_and_tie_break():
    topo = load_relationships("# isolated 20\n# isolated 10\n")
    cones = customer_cones(topo)
    one = build_session_matrix(load_peering_lans("L1,10,2001:db8::1\n"))
    assert rank_injection_candidates(cones, one, 1) == [10]
    text = "".join(f"L1,{a},2001:db8::{a}:{k}\n" for a in (10, 20) for k in range(40))
    tie = build_session_matrix(load_peering_lans(text))
    assert rank_injection_candidates(cones, tie, 2) == [10, 20]


def test_rank_hand_computed(fig1, fig1_lans_path):
    # cone sizes: I 4, P* 3, V 1; sessions: I 3, V 2, P* 1
    s = build_session_matrix(load_peering_lans(open(fig1_lans_path).read()))
    cones = customer_cones(fig1)
    # products: I 12, P* 3, V 2
    assert rank_injection_candidates(cones, s, 3) == [I, PSTAR, V]
    assert rank_injection_candidates(cones, s, 1) == [I]
    with pytest.raises(ValueError):
        rank_injection_candidates(cones, s, 0)


def test_cones_from_paths(fig1):
    # collector V sees I -> P1 -> T; V is I's peer so I exported it upwards
    cones = cones_from_paths(fig1, [[V, I, I, P1, T]])
    assert cones[I].members == {I, P1, T}
    # I is P1's provider, so P1 also exported T upwards
    assert cones[P1].members == {P1, T}
    assert cones[PSTAR].members == {PSTAR}
