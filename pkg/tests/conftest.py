from __future__ import annotations

import random
from importlib import resources

import pytest

from kirinlab.kernels import backends
from kirinlab.topology import AsTopology, Relationship

DATA = resources.files("kirinlab") / "data"

# roles in the six-AS example topology (data/fig1.rel)
T, P1, P2, PSTAR, I, V = 64500, 64501, 64502, 64503, 64504, 64505


@pytest.fixture(params=sorted(backends()))
def kernel_impl(request):
    return backends()[request.param]


@pytest.fixture
def fig1_path():
    return str(DATA / "fig1.rel")


@pytest.fixture
def fig1_lans_path():
    return str(DATA / "fig1_lans.csv")


@pytest.fixture
def fig1(fig1_path):
    from kirinlab.topology import read_relationships

    return read_relationships(fig1_path)


def random_topology(rng: random.Random, n: int, p_edge: float = 0.15, p_peer: float = 0.08) -> AsTopology:
    """Random acyclic P2C graph (lower index is provider) plus random peerings."""
    ases = list(range(1000, 1000 + n))
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            r = rng.random()
            if r < p_edge:
                edges.add((ases[i], ases[j], Relationship.P2C))
            elif r < p_edge + p_peer:
                edges.add((ases[i], ases[j], Relationship.P2P))
    return AsTopology(frozenset(ases), frozenset(edges))


def random_session_matrix(rng: random.Random, n_as: int, n_lan: int, density: float = 0.6, max_w: int = 5):
    from kirinlab.topology import SessionMatrix

    lans = tuple(f"L{l}" for l in range(n_lan))
    asns = tuple(100 + a for a in range(n_as))
    omega = {(a, l): rng.randint(1, max_w) for a in asns for l in lans if rng.random() < density}
    return SessionMatrix(dict(sorted(omega.items())), lans, asns)


def random_smfd(rng: random.Random, n_as: int, n_lan: int, density: float = 0.5, max_v: int = 4):
    from kirinlab.cones import SmfdMatrix

    lans = tuple(f"L{l}" for l in range(n_lan))
    f = {(100 + a, l): rng.randint(1, max_v) for a in range(n_as) for l in lans if rng.random() < density}
    return SmfdMatrix(dict(sorted(f.items())), frozenset(), lans, tuple(sorted({a for a, _ in f})))


# criterion number -> (description, passed); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        text, ok = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
