import itertools
import json
import random

import networkx as nx
import pytest

from cosetc.complex import (
    GraphExport,
    build_ball,
    build_coned_off,
    build_extension_graph,
    build_ktau,
    clique_and_dimension_stats,
    connectivity,
    edge_orbit_census,
    export,
    star_oracle,
    verify_witnesses,
)
from cosetc.errors import CapabilityError, ConfigError
from cosetc.oracles import BSOracle, FreeOracle, LatticeOracle, RAAGOracle, maximal_standard_abelians
from cosetc.words import DefiningGraph, commutes, inverse, nf_raag

C4 = DefiningGraph.cycle(4)
C5 = DefiningGraph.cycle(5)


def free_triangle_pair():
    # P_i = <x_i, x_{i+1}> in F(x0, x1, x2)
    return FreeOracle(3, [[(1,), (2,)], [(2,), (3,)], [(3,), (1,)]])


def test_lattice_ball_is_complete():
    ball = build_ball(LatticeOracle(2, [[(1, 0)]]), 3, max_dim=3)
    n = len(ball.vertices)
    assert len(ball.edges) == n * (n - 1) // 2
    st = clique_and_dimension_stats(ball)
    assert st["max_clique_cardinality"] == n
    assert ball.capped


def test_bs_ball_edgeless():
    ball = build_ball(BSOracle(2), 4)
    assert not ball.edges
    assert connectivity(ball)["isolated"] == len(ball.vertices)


def test_c4_four_cycle():
    o = RAAGOracle(C4, maximal_standard_abelians(C4))
    ball = build_ball(o, 0)
    assert len(ball.vertices) == 4
    g = ball.graph()
    assert nx.is_isomorphic(g, nx.cycle_graph(4))
    assert 2 not in ball.simplices
    st = clique_and_dimension_stats(ball)
    assert st["max_clique_cardinality"] == 2 and st["max_simplex_cardinality"] == 2


def test_free_triangle_pair():
    ball = build_ball(free_triangle_pair(), 2)
    assert connectivity(ball)["connected"]
    assert all(uv in ball.edges for uv in [(0, 1), (0, 2), (1, 2)])
    assert (0, 1, 2) not in ball.simplices.get(2, {})
    assert edge_orbit_census(ball)["fence_estimate"] == 0


def test_height_matches_simplices():
    ball = build_ball(FreeOracle(2, [[(1, 1)]]), 3)
    assert len(ball.max_simplex()) == 2


@pytest.mark.parametrize("oracle", [
    FreeOracle(2, [[(1, 1)], [(1, 2)]]),
    RAAGOracle(C5, maximal_standard_abelians(C5)),
    LatticeOracle(2, [[(1, 0)], [(0, 1)]]),
], ids=lambda o: o.kind)
def test_ball_invariants(oracle):
    small = build_ball(oracle, 1, max_dim=3)
    big = build_ball(oracle, 2, max_dim=3)
    assert verify_witnesses(big) == []
    # face closure
    for d, level in big.simplices.items():
        for s in level:
            for face in itertools.combinations(s, len(s) - 1):
                if len(face) >= 2:
                    assert face in big.simplices[len(face) - 1]
    # monotonicity: the small ball is the induced subcomplex of the big one
    index = {c: i for i, c in enumerate(big.vertices)}
    assert all(c in index for c in small.vertices)
    sub = {(index[small.vertices[u]], index[small.vertices[v]]) for u, v in small.edges}
    big_sub = {(u, v) for u, v in big.edges if big.vertices[u] in small.vertices and big.vertices[v] in small.vertices}
    assert {tuple(sorted(e)) for e in sub} == big_sub


def test_equivariance_sample():
    o = RAAGOracle(C4, maximal_standard_abelians(C4))
    ball = build_ball(o, 2, max_dim=2)
    index = {c: i for i, c in enumerate(ball.vertices)}
    rng = random.Random(3)
    for _ in range(10):
        g = (rng.choice([1, -1, 2, -2, 3, -3, 4, -4]),)
        for (u, v) in ball.edges:
            a, b = o.translate(g, ball.vertices[u]), o.translate(g, ball.vertices[v])
            if a in index and b in index:
                assert tuple(sorted((index[a], index[b]))) in ball.edges


def test_clique_at_least_simplex():
    ball = build_ball(FreeOracle(2, [[(1,), (2, 2)]]), 2, max_dim=3)
    st = clique_and_dimension_stats(ball)
    assert st["max_clique_cardinality"] >= st["max_simplex_cardinality"]


def test_ktau_is_subcomplex():
    o = FreeOracle(2, [[(1, 1)]])
    k = build_ball(o, 2)
    for tau in range(3):
        kt = build_ktau(o, 2, tau)
        assert set(kt.edges) <= set(k.edges)
        assert all(w is not None for w in kt.edges.values())


def test_ktau_unsupported():
    with pytest.raises(CapabilityError):
        build_ktau(LatticeOracle(2, [[(1, 0)]]), 1, 1)


def test_edge_orbits_lattice_fence_grows():
    o = LatticeOracle(2, [[(1, 0)]])
    f = [edge_orbit_census(build_ball(o, r, max_dim=1))["fence_estimate"] for r in (1, 2, 3)]
    assert f[0] < f[1] < f[2]


def test_coned_off_examples():
    z2 = LatticeOracle(2, [[(1, 0)]])
    g = build_coned_off(z2, 2, [(2,)], extended=True)
    assert g.stats["coset_diameter"] <= 3
    f = FreeOracle(2, [[(1,)]])
    plain = build_coned_off(f, 2, [(2,)])
    ext = build_coned_off(f, 2, [(2,)], extended=True)
    assert plain.edges == ext.edges
    build_coned_off(star_oracle(C4), 1)
    with pytest.raises(ConfigError):
        build_coned_off(f, 1)


def test_extension_graph_base_copy():
    e = build_extension_graph(C4, 0)
    assert nx.is_isomorphic(e.graph(), nx.cycle_graph(4))


@pytest.mark.parametrize("graph,r", [(C4, 2), (C5, 2)], ids=["C4", "C5"])
def test_extension_graph_prefilter_is_exact(graph, r):
    fast = build_extension_graph(graph, r)
    slow = build_extension_graph(graph, r, exhaustive=True)
    assert fast.vertices == slow.vertices and fast.edges == slow.edges


def test_extension_vertex_identification():
    e = build_extension_graph(C5, 2)
    conj = [e.conjugate(i) for i in range(len(e.vertices))]
    # distinct vertices are distinct conjugates
    assert len(set(conj)) == len(conj)
    rng = random.Random(9)
    for _ in range(200):
        v = rng.randrange(5)
        g = nf_raag(C5, tuple(rng.choice([1, -1]) * rng.randint(1, 5) for _ in range(rng.randint(0, 4))))
        h = nf_raag(C5, tuple(rng.choice([1, -1]) * rng.randint(1, 5) for _ in range(rng.randint(0, 4))))
        same_coset = all(abs(x) - 1 in C5.star(v) for x in nf_raag(C5, inverse(h) + g))
        same_conj = nf_raag(C5, g + (v + 1,) + inverse(g)) == nf_raag(C5, h + (v + 1,) + inverse(h))
        assert same_coset == same_conj


def test_extension_same_label_never_adjacent():
    e = build_extension_graph(C4, 2)
    for u, v in e.edges:
        assert e.vertices[u][0] != e.vertices[v][0]
        assert commutes(C4, e.conjugate(u), e.conjugate(v))


def test_export_round_trip_and_dot():
    ball = build_ball(RAAGOracle(C4, maximal_standard_abelians(C4)), 0)
    exp = ball.to_export()
    text = exp.to_json()
    assert GraphExport.from_json(text).to_json() == text
    d = json.loads(text)
    assert d["radius"] == 0 and d["pair"]["group"] == "raag"
    dot = export(ball, "dot")
    assert dot.count("--") == 4
    assert sum(1 for line in dot.splitlines() if "[label=" in line and "--" not in line) == 4


def test_threads_do_not_change_output(monkeypatch):
    o = FreeOracle(2, [[(1, 1)], [(1, 2)]])
    monkeypatch.setenv("COSETC_THREADS", "1")
    a = build_ball(o, 2).to_export().to_json()
    monkeypatch.setenv("COSETC_THREADS", "4")
    b = build_ball(o, 2).to_export().to_json()
    assert a == b
