import itertools
import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st
import pytest

from cosetc.errors import CapabilityError, PreconditionError
from cosetc.oracles import (
    ALL,
    TRIVIAL,
    BSOracle,
    CosetId,
    FreeOracle,
    LatticeOracle,
    ProductOracle,
    RAAGOracle,
    maximal_standard_abelians,
    parabolic_intersection,
    raag_edge_criterion,
    star_subsets,
)
from cosetc.stallings import membership
from cosetc.words import DefiningGraph, free_reduce, inverse, is_in_parabolic, nf_raag

C4 = DefiningGraph.cycle(4)
C5 = DefiningGraph.cycle(5)


def word(rank, max_size=5):
    letter = st.integers(1, rank).flatmap(lambda g: st.sampled_from([g, -g]))
    return st.lists(letter, max_size=max_size).map(tuple)


def all_oracles():
    return [
        FreeOracle(2, [[(1, 1)], [(2, 1)]]),
        RAAGOracle(C4, maximal_standard_abelians(C4)),
        RAAGOracle(C5, star_subsets(C5)),
        LatticeOracle(2, [[(1, 0)], [(1, 1)]]),
        BSOracle(2, ("t", "a")),
        ProductOracle(FreeOracle(2, [[(1,)]]), LatticeOracle(1, [[(1,)]]), [(0, ALL), (TRIVIAL, 0)]),
    ]


@pytest.mark.parametrize("oracle", all_oracles(), ids=lambda o: o.kind)
def test_coset_invariance_and_translation(oracle):
    rng = random.Random(5)
    for _ in range(30):
        g = tuple(rng.choice([1, -1]) * rng.randint(1, oracle.rank) for _ in range(rng.randint(0, 5)))
        for p in range(oracle.n_peripherals):
            c = oracle.canonical_coset(p, g)
            for h in oracle.peripheral_generators(p):
                assert oracle.canonical_coset(p, oracle.multiply(g, h)) == c
                assert oracle.canonical_coset(p, oracle.multiply(g, inverse(h))) == c
            # the rep lies in the coset and is no longer than g
            assert oracle.canonical_coset(p, c.rep) == c
            assert len(c.rep) <= len(g)
            # translation is a left action
            k = (rng.choice([1, -1]) * rng.randint(1, oracle.rank),)
            assert oracle.translate(inverse(k), oracle.translate(k, c)) == c


@pytest.mark.parametrize("oracle", all_oracles(), ids=lambda o: o.kind)
def test_enumerated_reps_are_first_in_ball(oracle):
    cosets = oracle.enumerate_cosets(2)
    assert len(set(cosets)) == len(cosets)
    ball = list(oracle._ball.upto(2))
    for c in cosets:
        first = next(g for g in ball if oracle.canonical_coset(c.peripheral, g) == c)
        assert first == c.rep


@pytest.mark.parametrize("oracle", all_oracles(), ids=lambda o: o.kind)
def test_intersection_witnesses_verify(oracle):
    cosets = oracle.enumerate_cosets(2)
    for c1, c2 in itertools.combinations(cosets, 2):
        ok, w = oracle.verified_intersection([c1, c2])
        assert ok == (w is not None)


def test_free_membership_independent():
    o = FreeOracle(2, [[(1, 1)]])
    c = o.canonical_coset(0, (2, 1))
    # w in rep P rep^-1 iff rep^-1 w rep in P, decided on the core graph
    for w in [(2, 1, 1, -2), (1, 1), (2, 1, 1, 1, 1, -2)]:
        assert o.in_conjugate(c, w) == membership(o.cores[0], free_reduce(inverse(c.rep) + w + c.rep))


@given(word(2, 4))
@settings(max_examples=40)
def test_free_double_coset_min_brute_force(h):
    o = FreeOracle(2, [[(1,)], [(2, 1)]])
    h = free_reduce(h)
    got = o.double_coset_min(0, 1, h)
    best = min((free_reduce(power((1,), i) + h + power((2, 1), j)) for i in range(-6, 7) for j in range(-6, 7)), key=len)
    assert len(got) == len(best)
    assert o.coset_distance(CosetId(0, (), ()), o.canonical_coset(1, h)) == len(got)


def power(w, n):
    return tuple(w) * n if n >= 0 else inverse(w) * -n


def test_free_examples():
    o = FreeOracle(2, [[(1,)]])
    p = o.canonical_coset(0, ())
    assert not o.infinite_intersection([p, o.canonical_coset(0, (2,))])[0]
    o2 = FreeOracle(2, [[(1, 1)]])
    ok, w = o2.verified_intersection([o2.canonical_coset(0, ()), o2.canonical_coset(0, (1,))])
    assert ok


def test_trivial_peripheral_rejected():
    with pytest.raises(PreconditionError):
        FreeOracle(2, [[(1, -1)]])
    with pytest.raises(PreconditionError):
        LatticeOracle(2, [[(0, 0)]])


def random_raag_coset(rng, graph, subsets):
    g = nf_raag(graph, tuple(rng.choice([1, -1]) * rng.randint(1, graph.n) for _ in range(rng.randint(0, 5))))
    return rng.randrange(len(subsets)), g


@pytest.mark.parametrize("graph", [C4, C5], ids=["C4", "C5"])
def test_raag_criterion_agrees_with_general(graph):
    o = RAAGOracle(graph, maximal_standard_abelians(graph))
    assert o.use_criterion
    rng = random.Random(11)
    for _ in range(200):
        cs = [o.canonical_coset(*random_raag_coset(rng, graph, o.subsets)) for _ in range(rng.randint(2, 3))]
        crit, w1 = o.infinite_intersection(cs)
        gen, w2 = o.general_intersection(cs)
        assert crit == gen
        for w in (w1, w2):
            if w is not None:
                for c in cs:
                    assert is_in_parabolic(graph, nf_raag(graph, inverse(c.rep) + w + c.rep), o.subsets[c.peripheral])


def test_raag_criterion_needs_hypotheses():
    k3 = DefiningGraph.complete(3)
    with pytest.raises(CapabilityError):
        raag_edge_criterion(k3, (), {0, 1}, (), {1, 2})


def test_parabolic_intersection_examples():
    c, S = parabolic_intersection(C4, [((), {0, 1}), ((), {0, 3})])
    assert S == frozenset({0})
    c, S = parabolic_intersection(C4, [((), {0, 1}), ((3,), {2, 3})])
    assert S == frozenset()


def test_lattice_complete():
    o = LatticeOracle(2, [[(1, 0)]])
    cosets = o.enumerate_cosets(3)
    assert len(cosets) == 7
    for c1, c2 in itertools.combinations(cosets, 2):
        assert o.verified_intersection([c1, c2])[0]


def test_lattice_distance_grows():
    o = LatticeOracle(2, [[(1, 0)]])
    assert o.coset_distance(o.canonical_coset(0, ()), o.canonical_coset(0, (2, 2, 2))) == 3


def test_bs_affine_model():
    o = BSOracle(2)
    # t a t^-1 = a^2
    assert o.group.affine((2, 1, -2)) == o.group.affine((1, 1))
    m, r = o.group.affine((1, 2))
    assert (m, r) == (1, Fraction(1))


def test_bs_t_cosets_edgeless():
    o = BSOracle(2, ("t",))
    cosets = o.enumerate_cosets(3)
    for c1, c2 in itertools.combinations(cosets, 2):
        assert not o.infinite_intersection([c1, c2])[0]
    # <t> stabilises 0; its conjugate by g stabilises g(0)
    c = o.canonical_coset(0, (1,))
    assert o.in_conjugate(c, (1, 2, -1))


def test_bs_a_cosets_intersect():
    o = BSOracle(2, ("a",))
    cosets = o.enumerate_cosets(2)
    for c1, c2 in itertools.combinations(cosets, 2):
        assert o.verified_intersection([c1, c2])[0]


@given(word(2, 4), word(2, 4))
@settings(max_examples=40)
def test_bs_double_coset_predicate(h, x):
    o = BSOracle(2, ("t", "a"))
    for i, j in itertools.product(range(2), repeat=2):
        got = o.same_double_coset(i, j, h, x)
        # x in P_i h P_j iff some short p, q give p h q = x (bounded brute force, positive side)
        gi, gj = o.peripheral_generators(i)[0], o.peripheral_generators(j)[0]
        target = o.group.affine(x)
        found = any(
            o.group.affine(power(gi, a) + h + power(gj, b)) == target for a in range(-4, 5) for b in range(-4, 5)
        )
        if found:
            assert got


def test_product_oracle():
    o = ProductOracle(FreeOracle(2, [[(1,)]]), LatticeOracle(1, [[(1,)]]), [(0, ALL), (TRIVIAL, 0)])
    p = o.canonical_coset(0, ())
    q = o.canonical_coset(1, ())
    # <x> x Z meets 1 x Z in 1 x Z
    ok, w = o.verified_intersection([p, q])
    assert ok and o.group.split(w)[0] == ()
    # the Z factor is shared by every conjugate of <x> x Z
    assert o.infinite_intersection([o.canonical_coset(0, ()), o.canonical_coset(0, (2,))])[0]
    o2 = ProductOracle(FreeOracle(2, [[(1,)]]), LatticeOracle(1, [[(1,)]]), [(0, TRIVIAL)])
    assert not o2.infinite_intersection([o2.canonical_coset(0, ()), o2.canonical_coset(0, (2,))])[0]
