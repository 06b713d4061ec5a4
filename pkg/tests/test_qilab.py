import itertools
import random

import networkx as nx
import pytest

from cosetc import qilab
from cosetc.complex import build_ball, star_oracle
from cosetc.errors import CapabilityError, PreconditionError
from cosetc.oracles import FreeOracle, LatticeOracle, RAAGOracle, maximal_standard_abelians, raag_simplex_test
from cosetc.words import DefiningGraph

C4 = DefiningGraph.cycle(4)
C5 = DefiningGraph.cycle(5)
A, B, C, D = 1, 2, 3, 4


def c4_pair():
    return RAAGOracle(C4, maximal_standard_abelians(C4))


def test_star_core_c4():
    rep = qilab.star_core(C4, seed=1)
    assert rep.subgroups == [["a", "b", "d"], ["a", "b", "c"], ["b", "c", "d"], ["a", "c", "d"]]
    assert rep.ok


def test_star_core_c5():
    rep = qilab.star_core(C5, seed=2)
    assert len(rep.subgroups) == 5 and rep.ok


@pytest.mark.parametrize("graph", [DefiningGraph.complete(3), DefiningGraph.from_edges(3, [(0, 1), (1, 2)])])
def test_star_core_rejects(graph):
    with pytest.raises(CapabilityError):
        qilab.star_core(graph)


def test_slice_small():
    o = c4_pair()
    sl = qilab.maximal_simplex_slice(o, (), 0, 0)
    assert sorted(o.coset_label(c) for c in sl) == ["<a,b>", "<a,d>"]


def test_slice_radius_two():
    o = c4_pair()
    sl = qilab.maximal_simplex_slice(o, (), 0, 2)
    labels = {o.coset_label(c) for c in sl}
    assert "b^2<a,d>" in labels and "d^-1<a,b>" in labels
    for c1, c2 in itertools.combinations(sl, 2):
        ok, v, _ = raag_simplex_test(C4, [(c1.rep, o.subsets[c1.peripheral]), (c2.rep, o.subsets[c2.peripheral])])
        assert ok and v == 0


def test_map_p_to_q():
    o = c4_pair()
    ball = build_ball(o, 2, max_dim=2)
    res = qilab.map_P_to_Q(ball, seed=4)
    assert res["simplicial"] and res["equivariant"]
    q = star_oracle(C4)
    i = ball.vertices.index(o.canonical_coset(o.subsets.index(frozenset({0, 1})), ()))
    j = ball.vertices.index(o.canonical_coset(o.subsets.index(frozenset({0, 3})), ()))
    assert res["edge_axes"][(min(i, j), max(i, j))] == q.canonical_coset(0, ())


def test_map_translated_edge():
    o = c4_pair()
    q = star_oracle(C4)
    c1 = o.canonical_coset(o.subsets.index(frozenset({0, 1})), (C,))
    c2 = o.canonical_coset(o.subsets.index(frozenset({0, 3})), (C,))
    assert qilab.edge_axis(o, c1, c2) == 0
    assert q.canonical_coset(0, c1.rep) == q.translate((C,), q.canonical_coset(0, ()))


def test_path_adjacent_base_stars():
    q = star_oracle(C4)
    path = qilab.conedoff_path4(q, q.canonical_coset(0, ()), q.canonical_coset(1, ()))
    assert len(path) - 1 == 2


@pytest.mark.parametrize("graph", [C4, C5], ids=["C4", "C5"])
def test_paths_on_ball_edges(graph):
    q = star_oracle(graph)
    ball = build_ball(q, 2, max_dim=1)
    rng = random.Random(0)
    edges = sorted(ball.edges)
    for u, v in rng.sample(edges, min(100, len(edges))):
        path = qilab.conedoff_path4(q, ball.vertices[u], ball.vertices[v])
        assert len(path) - 1 <= 4
        assert qilab.verify_coned_path(q, path)


def test_path_needs_witness():
    q = star_oracle(C5)
    # Star(a) = {e,a,b}, Star(c) = {b,c,d}; the only shared generator b does not commute with d
    c1 = q.canonical_coset(0, ())
    c2 = q.canonical_coset(2, (D, A))
    assert not q.infinite_intersection([c1, c2])[0]
    with pytest.raises(PreconditionError):
        qilab.conedoff_path4(q, c1, c2)


def brute_delta(g):
    d = dict(nx.all_pairs_shortest_path_length(g))
    best = 0
    for x, y, z, w in itertools.product(g.nodes, repeat=4):
        s = sorted([d[x][y] + d[z][w], d[x][z] + d[y][w], d[x][w] + d[y][z]])
        best = max(best, (s[2] - s[1]) / 2)
    return best


@pytest.mark.parametrize("g", [nx.cycle_graph(4), nx.cycle_graph(7), nx.petersen_graph(), nx.balanced_tree(2, 3)],
                         ids=["C4", "C7", "petersen", "tree"])
def test_delta_exhaustive_matches_brute_force(g):
    assert qilab.four_point_delta(g)["delta"] == brute_delta(g)


def test_delta_sampled_tree_is_zero():
    t = nx.balanced_tree(3, 5)
    res = qilab.four_point_delta(t, seed=1, samples=2000)
    assert not res["exhaustive"] and res["delta"] == 0


def test_delta_disconnected():
    with pytest.raises(PreconditionError):
        qilab.four_point_delta(nx.empty_graph(3))


def test_distortion_fit():
    dx = [1, 2, 3, 4]
    dy = [2, 4, 6, 9]
    rep = qilab.fit_distortion([(0, 1)] * 4, dx, dy)
    assert rep.holds()
    assert [L for L, _ in rep.frontier] == list(qilab.L_GRID)
    assert qilab.additive_constant(dx, dy, 2.0) == 1.0


def test_qi_chain_consistent():
    res = qilab.qi_chain(C4, 2, samples=60, seed=3)
    assert all(s["holds"] for s in res["stages"].values())
    assert res["composite"]["consistent"]


@pytest.mark.parametrize("gens,malnormal", [
    ([[(1,)]], True),
    ([[(1, 1)]], False),
    ([[(1, 2)]], True),
], ids=["x", "x2", "xy"])
def test_malnormal_crosscheck(gens, malnormal):
    res = qilab.malnormal_crosscheck(FreeOracle(2, gens), 3)
    assert res["agree"] and res["malnormal"] == malnormal


def test_malnormal_crosscheck_triangle():
    o = FreeOracle(3, [[(1,), (2,)], [(2,), (3,)], [(3,), (1,)]])
    res = qilab.malnormal_crosscheck(o, 2)
    assert res["agree"] and not res["malnormal"]


def test_malnormal_crosscheck_needs_free():
    with pytest.raises(CapabilityError):
        qilab.malnormal_crosscheck(c4_pair(), 1)


def test_packing_examples():
    tri = FreeOracle(3, [[(1,), (2,)], [(2,), (3,)], [(3,), (1,)]])
    for r in (1, 2):
        assert qilab.packing_radius(build_ball(tri, r))["radius"] == 0
    x2 = FreeOracle(2, [[(1, 1)]])
    res = qilab.packing_radius(build_ball(x2, 2))
    assert res["exact"] and res["radius"] == 1
    z2 = LatticeOracle(2, [[(1, 0)]])
    radii = [qilab.packing_radius(build_ball(z2, r, max_dim=2))["radius"] for r in (1, 2, 3)]
    assert radii[0] < radii[2]
