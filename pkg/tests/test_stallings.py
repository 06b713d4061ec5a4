import itertools

from hypothesis import given, settings, strategies as st
import pytest

from cosetc.errors import PreconditionError
from cosetc.stallings import (
    PairTable,
    attach_spur,
    conjugate,
    core_of_subgroup,
    coset_distance_free,
    coset_min_rep,
    fiber_product,
    finite_index_test,
    height_exact_free,
    infinite_intersection_free,
    intersection_core,
    is_commensurating,
    malnormal_collection_certificate,
    malnormality_certificate,
    membership,
)
from cosetc.words import free_reduce, inverse, shortlex_key

X, Y = 1, 2
x, X_ = (1,), (-1,)
y, Y_ = (2,), (-2,)


def nonempty_words(max_size=4):
    letter = st.sampled_from([1, -1, 2, -2])
    return st.lists(letter, min_size=1, max_size=max_size).map(lambda w: free_reduce(tuple(w))).filter(bool)


def products(gens, length):
    """Brute force: all reduced products of at most ``length`` generators or inverses."""
    pool = [tuple(g) for g in gens] + [inverse(g) for g in gens]
    out = {()}
    frontier = {()}
    for _ in range(length):
        frontier = {free_reduce(w + p) for w in frontier for p in pool}
        out |= frontier
    return out


def test_core_shapes():
    c = core_of_subgroup([x, y + x + Y_], 2)
    assert (c.n_vertices, c.n_edges) == (2, 3)
    assert core_of_subgroup([x + x], 2).n_vertices == 2
    triv = core_of_subgroup([x + X_], 2)
    assert triv.is_trivial and triv.n_vertices == 1


@given(st.lists(nonempty_words(), min_size=1, max_size=2), st.data())
@settings(max_examples=50)
def test_membership_accepts_products(gens, data):
    core = core_of_subgroup(gens, 2)
    idx = data.draw(st.lists(st.integers(0, 2 * len(gens) - 1), max_size=4))
    pool = list(gens) + [inverse(g) for g in gens]
    w = free_reduce(tuple(itertools.chain.from_iterable(pool[i] for i in idx)))
    assert membership(core, w)


def test_membership_rejects():
    core = core_of_subgroup([x + x], 2)
    assert not membership(core, x)
    assert not membership(core, y + x + x + Y_)
    assert membership(core, x + x + x + x)


@given(st.lists(nonempty_words(), min_size=1, max_size=2), nonempty_words(5))
@settings(max_examples=60)
def test_coset_min_rep_is_minimal(gens, g):
    core = core_of_subgroup(gens, 2)
    if core.is_trivial:
        return
    rep = coset_min_rep(core, g)
    # same coset
    assert membership(core, free_reduce(inverse(g) + rep))
    # no element g*p with p a short product is shorter (or shortlex smaller)
    for p in products(gens, 3):
        cand = free_reduce(g + p)
        assert shortlex_key(rep) <= shortlex_key(cand)


def test_spur_reads_coset():
    core = core_of_subgroup([x], 2)
    sp = attach_spur(core, y + x)
    assert sp.graph.read(sp.start, y + x + x + x) == sp.end


@given(
    st.lists(nonempty_words(3), min_size=1, max_size=2),
    st.lists(nonempty_words(3), min_size=1, max_size=2),
    nonempty_words(3),
)
@settings(max_examples=60)
def test_intersection_matches_brute_force(g1, g2, h):
    c1, c2 = core_of_subgroup(g1, 2), core_of_subgroup(g2, 2)
    if c1.is_trivial or c2.is_trivial:
        return
    flag, wit = infinite_intersection_free([(c1, ()), (c2, h)])
    table_flag, table_wit = PairTable(c1, c2).intersect(h)
    assert flag == table_flag
    if flag:
        for w in (wit, table_wit):
            assert w
            assert membership(c1, w) and membership(c2, free_reduce(inverse(h) + w + h))
    else:
        for w in products(g1, 3):
            if w:
                assert not membership(c2, free_reduce(inverse(h) + w + h))


def test_intersection_examples():
    cx = core_of_subgroup([x], 2)
    assert not infinite_intersection_free([(cx, ()), (cx, y)])[0]
    c01 = core_of_subgroup([(1,), (2,)], 3)
    c12 = core_of_subgroup([(2,), (3,)], 3)
    ok, w = infinite_intersection_free([(c01, ()), (c12, ())])
    assert ok and set(map(abs, w)) == {2}


def test_fiber_product_diagonal_flags():
    cx = core_of_subgroup([x + x], 2)
    comps = fiber_product([(cx, ()), (cx, x)])
    base = [c for c in comps if c.contains_base]
    assert len(base) == 1 and base[0].has_cycle
    assert not base[0].diagonal.get((0, 1), False)


def test_height_examples():
    assert height_exact_free([core_of_subgroup([x + x], 2)]).value == 2
    assert height_exact_free([core_of_subgroup([x], 2)]).value == 1
    assert height_exact_free([core_of_subgroup([x + x + x], 2)]).value == 3
    with pytest.raises(PreconditionError):
        height_exact_free([core_of_subgroup([x + X_], 2)])


def test_malnormality_examples():
    assert malnormality_certificate(core_of_subgroup([x], 2)).malnormal
    assert malnormality_certificate(core_of_subgroup([x + y], 2)).malnormal
    v = malnormality_certificate(core_of_subgroup([x + x], 2))
    assert not v.malnormal and v.conjugator == x
    cols = [core_of_subgroup(g, 3) for g in ([(1,), (2,)], [(2,), (3,)], [(3,), (1,)])]
    assert not malnormal_collection_certificate(cols).malnormal


def test_finite_index_and_commensuration():
    x2 = core_of_subgroup([x + x], 2)
    cx = core_of_subgroup([x], 2)
    assert finite_index_test(x2, cx)
    assert not finite_index_test(cx, core_of_subgroup([x, y], 2))
    assert finite_index_test(core_of_subgroup([x + x, y, x + y + X_], 2), core_of_subgroup([x, y], 2))
    assert is_commensurating(x2, x)
    assert not is_commensurating(x2, y)
    with pytest.raises(PreconditionError):
        finite_index_test(cx, x2)


def test_intersection_core_of_conjugates():
    cx = core_of_subgroup([x, y + y], 2)
    # x lies in the subgroup, so the conjugate is the subgroup itself
    assert intersection_core([(cx, ()), (cx, x)]) == cx
    # <x> and y<x>y^-1 meet trivially
    cx1 = core_of_subgroup([x], 2)
    assert intersection_core([(cx1, ()), (cx1, y)]).is_trivial
    assert conjugate(cx1, y) == core_of_subgroup([y + x + Y_], 2)


def test_coset_distance_examples():
    cx = core_of_subgroup([x], 2)
    assert coset_distance_free(cx, (), cx, y + x + y) == 3
    assert coset_distance_free(cx, (), cx, y) == 1
    assert coset_distance_free(cx, (), cx, x + x) == 0


@given(nonempty_words(4), nonempty_words(4))
@settings(max_examples=40)
def test_coset_distance_brute_force(g1, g2):
    cx = core_of_subgroup([x], 2)
    d = coset_distance_free(cx, g1, cx, g2)
    best = min(
        len(free_reduce(inverse(g1 + (X,) * i if i >= 0 else g1 + (-X,) * -i) + g2 + ((X,) * j if j >= 0 else (-X,) * -j)))
        for i in range(-8, 9)
        for j in range(-8, 9)
    )
    assert d == best
