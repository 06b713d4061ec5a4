"""Group pairs with exact conjugate-intersection tests.

Every backend answers the same questions about left cosets ``gP``:
canonical identifiers, whether a family of conjugates ``g_i P_i g_i^-1``
meets in an infinite subgroup (with a witness element), and coset
distances.  Backends: free groups with finitely generated subgroups, RAAGs
with standard parabolic subgroups, ``Z^n`` with sublattices, BS(1,k) with
``<t>`` or ``<a>``, and direct products of two of these.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from . import rational, stallings
from .errors import CapabilityError, PreconditionError, ResourceError
from .lattice import Sublattice, intersection_witness, vector_to_word, word_to_vector
from .words import (
    DEFAULT_ELEMENT_CAP,
    RAAG,
    Alphabet,
    DefiningGraph,
    FreeGroup,
    ball_enumerate,
    free_reduce,
    inverse,
    nf_raag,
    shortlex_key,
    strip_parabolic_head,
    strip_parabolic_tail,
    support,
)


@dataclass(frozen=True)
class CosetId:
    """Canonical left coset ``rep * P_peripheral``.

    ``rep`` is a minimal-length element of the coset, shortlex-least among
    those; equality compares ``(peripheral, rep)`` only.
    """

    peripheral: int
    rep: tuple
    payload: Any = field(default=None, compare=False, hash=False)

    def sort_key(self):
        return (shortlex_key(self.rep), self.peripheral)


def coset_order(cosets):
    return sorted(cosets, key=CosetId.sort_key)


@dataclass(frozen=True)
class Capabilities:
    exact_intersection: bool = True
    exact_coset_distance: bool = True
    ktau_supported: bool = False
    simplex_witnesses: bool = True


class _Ball:
    """Growing shortlex-ordered ball of a group, reused by bounded searches."""

    def __init__(self, group, cap=DEFAULT_ELEMENT_CAP):
        self.group = group
        self.cap = cap
        self.radius = -1
        self.elements = []
        self.ends = []

    def upto(self, r):
        if r > self.radius:
            els = ball_enumerate(self.group, r, self.cap)
            self.elements = els
            lens = [len(w) for w in els]
            self.ends = [sum(1 for n in lens if n <= k) for k in range(r + 1)]
            self.radius = r
        return self.elements[: self.ends[r]]


class Oracle:
    """Base class; subclasses fill in the group-specific parts."""

    kind = "abstract"
    capabilities = Capabilities()

    def __init__(self, group, peripheral_names):
        self.group = group
        self.peripheral_names = list(peripheral_names)
        self._ball = _Ball(group)

    # -- basic structure ---------------------------------------------------
    @property
    def rank(self) -> int:
        return self.group.rank

    @property
    def n_peripherals(self) -> int:
        return len(self.peripheral_names)

    def key(self, word):
        return self.group.key(word)

    def multiply(self, *words):
        return tuple(itertools.chain.from_iterable(words))

    def describe(self) -> dict:
        d = dict(self.group.describe())
        d["peripherals"] = list(self.peripheral_names)
        return d

    def format(self, word) -> str:
        return self.group.alphabet.format(word)

    def coset_label(self, c: CosetId) -> str:
        rep = self.format(c.rep)
        return f"{'' if rep == '1' else rep}{self.peripheral_names[c.peripheral]}"

    # -- cosets ------------------------------------------------------------
    def payload(self, p: int, g):
        """Exact invariant of the coset ``gP_p`` (equal iff the cosets are equal)."""
        raise NotImplementedError

    def canonical_coset(self, p: int, g) -> CosetId:
        g = self._check(g)
        pay = self.payload(p, g)
        rep = self._search(lambda x: self.payload(p, x) == pay, len(g))
        return CosetId(p, rep, pay)

    def _check(self, g):
        from .words import check_word

        return check_word(g, self.rank)

    def _search(self, pred, bound):
        """Shortlex-least element of word length <= ``bound`` satisfying ``pred``."""
        for x in self._ball.upto(bound):
            if pred(x):
                return x
        raise ResourceError("bounded search found no element; the bound is not an upper bound")

    def enumerate_cosets(self, radius: int, cap: int = 10**5):
        """Cosets with a representative of length <= ``radius``, in shortlex order of reps."""
        seen = {}
        for g in self._ball.upto(radius):
            for p in range(self.n_peripherals):
                pay = self.payload(p, g)
                if (p, _hashable(pay)) in seen:
                    continue
                seen[(p, _hashable(pay))] = CosetId(p, self._rep_from_payload(p, g, pay), pay)
                if len(seen) > cap:
                    raise ResourceError(f"coset enumeration exceeds vertex cap {cap}")
        return coset_order(seen.values())

    def _rep_from_payload(self, p, g, pay):
        # balls are generated in shortlex order, so the first hit is the canonical rep
        return g

    def translate(self, g, c: CosetId) -> CosetId:
        return self.canonical_coset(c.peripheral, self.multiply(g, c.rep))

    def in_conjugate(self, c: CosetId, w) -> bool:
        """Whether ``w`` lies in ``rep P rep^-1``: ``w rep P == rep P``."""
        return self.payload(c.peripheral, self.multiply(w, c.rep)) == self.payload(c.peripheral, c.rep)

    def is_trivial(self, w) -> bool:
        return self.key(w) == self.key(())

    # -- intersections -------------------------------------------------------
    def infinite_intersection(self, cosets: Sequence[CosetId]):
        """``(infinite, witness)`` for ``⋂ rep_i P_i rep_i^-1``."""
        raise NotImplementedError

    def verified_intersection(self, cosets):
        ok, w = self.infinite_intersection(cosets)
        if ok:
            if w is None or self.is_trivial(w) or not all(self.in_conjugate(c, w) for c in cosets):
                raise AssertionError(f"intersection witness {w!r} failed verification")
        return ok, w

    # -- distances -----------------------------------------------------------
    def same_double_coset(self, i, j, h, x) -> bool:
        raise NotImplementedError

    def double_coset_min(self, i: int, j: int, h):
        """A canonical minimal-length element of ``P_i h P_j``."""
        h = self._check(h)
        return self._search(lambda x: self.same_double_coset(i, j, h, x), len(h))

    def coset_distance(self, c1: CosetId, c2: CosetId) -> int:
        return len(self.double_coset_min(c1.peripheral, c2.peripheral, inverse(c1.rep) + c2.rep))

    def edge_orbit_key(self, c1: CosetId, c2: CosetId):
        """Invariant of the unordered pair under the left action of the group."""
        k1 = (c1.peripheral, c2.peripheral, self.double_coset_min(c1.peripheral, c2.peripheral, inverse(c1.rep) + c2.rep))
        k2 = (c2.peripheral, c1.peripheral, self.double_coset_min(c2.peripheral, c1.peripheral, inverse(c2.rep) + c1.rep))
        return min(_orbit_sort(k1), _orbit_sort(k2))

    # -- generation ----------------------------------------------------------
    def peripherals_generate(self) -> bool:
        raise NotImplementedError

    def peripheral_generators(self, p):
        raise NotImplementedError


def _orbit_sort(k):
    return (k[0], k[1], shortlex_key(k[2]), k[2])


def _hashable(x):
    return x


# -- free groups ------------------------------------------------------------------


class FreeOracle(Oracle):
    kind = "free"
    capabilities = Capabilities(ktau_supported=True)

    def __init__(self, rank: int, peripherals: Sequence[Sequence[Sequence[int]]], alphabet=None, names=None):
        group = FreeGroup(rank, alphabet)
        self.gens = [[free_reduce(w, rank) for w in gens] for gens in peripherals]
        self.cores = [stallings.core_of_subgroup(gens, rank) for gens in self.gens]
        for k, c in enumerate(self.cores):
            if c.is_trivial:
                raise PreconditionError(f"peripheral {k} is the trivial subgroup; peripherals must be infinite")
        if names is None:
            names = [_subgroup_name(group.alphabet, gens) for gens in self.gens]
        super().__init__(group, names)
        self._tables = {}

    def payload(self, p, g):
        return stallings.coset_min_rep(self.cores[p], g)

    def canonical_coset(self, p, g):
        rep = stallings.coset_min_rep(self.cores[p], self._check(g))
        return CosetId(p, rep, rep)

    def multiply(self, *words):
        return free_reduce(tuple(itertools.chain.from_iterable(words)))

    def table(self, i, j):
        t = self._tables.get((i, j))
        if t is None:
            t = self._tables[(i, j)] = stallings.PairTable(self.cores[i], self.cores[j])
        return t

    def infinite_intersection(self, cosets):
        if not cosets:
            raise PreconditionError("empty coset family")
        if len(cosets) == 1:
            c = cosets[0]
            w = self.cores[c.peripheral]
            loop = _some_loop(w)
            return True, self.multiply(c.rep, loop, inverse(c.rep))
        if len(cosets) == 2:
            c1, c2 = cosets
            ok, w = self.table(c1.peripheral, c2.peripheral).intersect(self.multiply(inverse(c1.rep), c2.rep))
            if not ok:
                return False, None
            return True, self.multiply(c1.rep, w, inverse(c1.rep))
        return stallings.infinite_intersection_free([(self.cores[c.peripheral], c.rep) for c in cosets])

    def double_coset_min(self, i, j, h):
        h = free_reduce(h, self.rank)
        a = rational.concat(
            rational.subgroup_nfa(self.cores[i]),
            rational.from_words(self.rank, [h]),
            rational.subgroup_nfa(self.cores[j]),
        )
        return rational.shortlex_least(rational.benois_reduce(a))

    def coset_distance(self, c1, c2):
        return stallings.coset_distance_free(self.cores[c1.peripheral], c1.rep, self.cores[c2.peripheral], c2.rep)

    def peripherals_generate(self):
        allgens = [w for gens in self.gens for w in gens]
        core = stallings.core_of_subgroup(allgens, self.rank)
        return core.n_vertices == 1 and core.n_edges == self.rank

    def peripheral_generators(self, p):
        return list(self.gens[p])


def _some_loop(core):
    """Some nontrivial reduced basepoint loop of a core graph."""
    verts, _, wit = stallings.explore_component([core], (core.base,))
    return wit


def _subgroup_name(alphabet, gens):
    return "<" + ", ".join(alphabet.format(w) for w in gens) + ">"


# -- right-angled Artin groups ---------------------------------------------------


def double_coset_strip(graph: DefiningGraph, h, left, right):
    """Write ``h = s d t`` with ``s in <left>``, ``t in <right>``, ``d`` stripped.

    Alternates head and tail stripping until neither removes anything.
    Returns ``(s, d, t)`` as normal forms.
    """
    s_acc = ()
    t_acc = ()
    d = nf_raag(graph, h)
    while True:
        s, rest = strip_parabolic_head(graph, d, left)
        rest2, t = strip_parabolic_tail(graph, rest, right)
        s_acc = nf_raag(graph, s_acc + s)
        t_acc = nf_raag(graph, t + t_acc)
        if not s and not t:
            return s_acc, rest2, t_acc
        d = rest2


def parabolic_intersection(graph: DefiningGraph, cosets):
    """``⋂ g_i <S_i> g_i^-1`` for standard parabolics, as ``(c, S)`` meaning ``c <S> c^-1``.

    Uses that for a minimal double coset representative ``d`` of
    ``<S> h <T>``, ``<S> ∩ d<T>d^-1`` is the parabolic on the generators of
    ``S ∩ T`` commuting with every generator in the support of ``d``.
    """
    (g, S) = cosets[0]
    c = nf_raag(graph, g)
    S = frozenset(S)
    for g2, T in cosets[1:]:
        h = nf_raag(graph, inverse(c) + tuple(g2))
        s, d, _ = double_coset_strip(graph, h, S, T)
        supp = support(d)
        S = frozenset(v for v in S & frozenset(T) if all(graph.adjacent(v, u) for u in supp))
        c = nf_raag(graph, c + s)
    return c, S


def raag_hypotheses(graph: DefiningGraph):
    bad = []
    if not graph.triangle_free():
        bad.append("defining graph has a triangle")
    if graph.min_valence() < 2:
        bad.append("defining graph has a vertex of valence < 2")
    return bad


def raag_edge_criterion(graph: DefiningGraph, g1, e1, g2, e2):
    """Common-generator test for two cosets of maximal standard abelian subgroups.

    ``e1 = {a, b}`` and ``e2 = {c, d}`` are edges.  Returns ``(True, v, w)``
    with ``w = g1 v g1^-1`` when some shared ``v`` has
    ``supp(g1^-1 g2) ⊆ Star(v)``, else ``(False, None, None)``.
    """
    bad = raag_hypotheses(graph)
    if bad:
        raise CapabilityError("; ".join(bad))
    return raag_simplex_test(graph, [(g1, e1), (g2, e2)])


def raag_simplex_test(graph: DefiningGraph, cosets):
    """Common-generator test for any number of maximal-abelian cosets.

    True iff one generator ``v`` lies in every edge and every
    ``g_1^-1 g_i`` is supported in ``Star(v)``.
    """
    bad = raag_hypotheses(graph)
    if bad:
        raise CapabilityError("; ".join(bad))
    g1, _ = cosets[0]
    common = frozenset.intersection(*(frozenset(e) for _, e in cosets))
    supports = [support(nf_raag(graph, inverse(g1) + tuple(g))) for g, _ in cosets[1:]]
    for v in sorted(common):
        star = graph.star(v)
        if all(s <= star for s in supports):
            w = nf_raag(graph, tuple(g1) + (v + 1,) + inverse(g1))
            return True, v, w
    return False, None, None


class RAAGOracle(Oracle):
    kind = "raag"

    def __init__(self, graph: DefiningGraph, peripherals, alphabet=None, names=None):
        group = RAAG(graph, alphabet)
        self.graph = graph
        self.subsets = [frozenset(s) for s in peripherals]
        for k, s in enumerate(self.subsets):
            if not s:
                raise PreconditionError(f"peripheral {k} is the trivial subgroup; peripherals must be infinite")
        if names is None:
            names = ["<" + ",".join(group.alphabet.names[i] for i in sorted(s)) + ">" for s in self.subsets]
        super().__init__(group, names)
        edges = set(graph.edges)
        self.edge_peripherals = all(len(s) == 2 and tuple(sorted(s)) in edges for s in self.subsets)
        self.use_criterion = self.edge_peripherals and not raag_hypotheses(graph)

    def payload(self, p, g):
        return strip_parabolic_tail(self.graph, g, self.subsets[p])[0]

    def canonical_coset(self, p, g):
        rep = self.payload(p, self._check(g))
        return CosetId(p, rep, rep)

    def multiply(self, *words):
        return nf_raag(self.graph, tuple(itertools.chain.from_iterable(words)))

    def infinite_intersection(self, cosets):
        if not cosets:
            raise PreconditionError("empty coset family")
        if self.use_criterion:
            ok, _, w = raag_simplex_test(self.graph, [(c.rep, self.subsets[c.peripheral]) for c in cosets])
            return ok, w
        return self.general_intersection(cosets)

    def general_intersection(self, cosets):
        c, S = parabolic_intersection(self.graph, [(c.rep, self.subsets[c.peripheral]) for c in cosets])
        if not S:
            return False, None
        v = min(S)
        return True, nf_raag(self.graph, c + (v + 1,) + inverse(c))

    def double_coset_min(self, i, j, h):
        return double_coset_strip(self.graph, h, self.subsets[i], self.subsets[j])[1]

    def peripherals_generate(self):
        return frozenset().union(*self.subsets) == frozenset(range(self.graph.n))

    def peripheral_generators(self, p):
        return [(i + 1,) for i in sorted(self.subsets[p])]


def maximal_standard_abelians(graph: DefiningGraph):
    """Edges of the defining graph, which are the maximal standard abelian subgroups
    when the graph has no triangles."""
    if not graph.triangle_free():
        raise PreconditionError(
            "maximal standard abelian peripherals need a triangle-free defining graph"
        )
    return [frozenset(e) for e in graph.sorted_edges()]


def star_subsets(graph: DefiningGraph):
    return [graph.star(v) for v in range(graph.n)]


# -- free abelian lattices --------------------------------------------------------


class LatticeOracle(Oracle):
    kind = "lattice"

    def __init__(self, n: int, peripherals, alphabet=None, names=None):
        group = RAAG(DefiningGraph.complete(n), alphabet)
        self.n = n
        self.gens = [[tuple(v) for v in gens] for gens in peripherals]
        self.lattices = [Sublattice(gens, n) for gens in self.gens]
        for k, lat in enumerate(self.lattices):
            if lat.rank == 0:
                raise PreconditionError(f"peripheral {k} is the trivial subgroup; peripherals must be infinite")
        if names is None:
            names = ["<" + ", ".join(group.alphabet.format(vector_to_word(v)) for v in gens) + ">" for gens in self.gens]
        super().__init__(group, names)
        self._sums = {}

    def describe(self):
        return {"group": "lattice", "rank": self.n, "names": list(self.group.alphabet.names),
                "peripherals": list(self.peripheral_names)}

    def multiply(self, *words):
        return self.group.normal_form(tuple(itertools.chain.from_iterable(words)))

    def vector(self, g):
        return word_to_vector(g, self.n)

    def payload(self, p, g):
        return self.lattices[p].reduce(self.vector(g))

    def infinite_intersection(self, cosets):
        if not cosets:
            raise PreconditionError("empty coset family")
        v = intersection_witness([self.lattices[c.peripheral] for c in cosets])
        if v is None:
            return False, None
        return True, vector_to_word(v)

    def _sum(self, i, j):
        s = self._sums.get((i, j))
        if s is None:
            s = self._sums[(i, j)] = self.lattices[i] + self.lattices[j]
        return s

    def same_double_coset(self, i, j, h, x):
        s = self._sum(i, j)
        return s.reduce(self.vector(h)) == s.reduce(self.vector(x))

    def double_coset_min(self, i, j, h):
        h = self._check(h)
        target = self._sum(i, j).reduce(self.vector(h))
        bound = sum(abs(c) for c in self.vector(h))
        return self._search(lambda x: self._sum(i, j).reduce(self.vector(x)) == target, bound)

    def canonical_coset(self, p, g):
        g = self._check(g)
        pay = self.payload(p, g)
        bound = sum(abs(c) for c in self.vector(g))
        rep = self._search(lambda x: self.payload(p, x) == pay, bound)
        return CosetId(p, rep, pay)

    def peripherals_generate(self):
        total = Sublattice([v for gens in self.gens for v in gens], self.n)
        return total.rank == self.n and total.index_bound() == 1

    def peripheral_generators(self, p):
        return [vector_to_word(v) for v in self.gens[p]]


# -- Baumslag-Solitar groups BS(1,k) ---------------------------------------------


class BSGroup:
    """``BS(1,k) = <a, t | t a t^-1 = a^k>`` as affine maps ``x -> k^m x + r``.

    Generator ``a`` (index 0) is ``x -> x + 1`` and ``t`` (index 1) is
    ``x -> k x``; a word acts as the composition of its letters with the
    rightmost letter applied first.
    """

    tag = "bs"

    def __init__(self, k: int, alphabet: Alphabet | None = None):
        if k < 2:
            raise PreconditionError("BS(1,k) needs k >= 2")
        self.k = k
        self.alphabet = alphabet or Alphabet(["a", "t"])
        self.rank = 2

    def affine(self, word):
        m, r = 0, Fraction(0)
        k = self.k
        for x in word:
            if x == 1:
                r += Fraction(k) ** m
            elif x == -1:
                r -= Fraction(k) ** m
            elif x == 2:
                m += 1
            elif x == -2:
                m -= 1
            else:
                raise PreconditionError(f"letter {x} outside BS(1,{k})")
        return m, r

    key = affine

    def normal_form(self, word):
        """Shortlex-least geodesic (found by ball search; desk scale only)."""
        target = self.affine(word)
        for w in ball_enumerate(self, len(word)):
            if self.affine(w) == target:
                return w
        raise AssertionError("unreachable")

    def describe(self):
        return {"group": "bs", "k": self.k, "names": list(self.alphabet.names)}


def _is_power_of(q: Fraction, k: int) -> bool:
    if q <= 0:
        return False
    num, den = q.numerator, q.denominator
    if den != 1 and num != 1:
        return False
    n = num if den == 1 else den
    while n % k == 0:
        n //= k
    return n == 1


class BSOracle(Oracle):
    """Peripherals are ``"t"`` (``<t>``, stabilisers of points) or ``"a"`` (``<a>``)."""

    kind = "bs"

    def __init__(self, k: int, peripherals=("t",), alphabet=None):
        group = BSGroup(k, alphabet)
        self.k = k
        self.types = list(peripherals)
        for p in self.types:
            if p not in ("t", "a"):
                raise PreconditionError(f"BS(1,k) peripheral must be 't' or 'a', got {p!r}")
        names = [f"<{group.alphabet.names[1 if p == 't' else 0]}>" for p in self.types]
        super().__init__(group, names)

    def payload(self, p, g):
        m, r = self.group.affine(g)
        if self.types[p] == "t":
            return r
        mod = Fraction(self.k) ** m
        return (m, r - mod * math.floor(r / mod))

    def infinite_intersection(self, cosets):
        if not cosets:
            raise PreconditionError("empty coset family")
        kinds = {self.types[c.peripheral] for c in cosets}
        if kinds == {"t"}:
            rs = {c.payload if c.payload is not None else self.payload(c.peripheral, c.rep) for c in cosets}
            if len(rs) != 1:
                return False, None
            rep = cosets[0].rep
            return True, rep + (2,) + inverse(rep)
        if kinds == {"a"}:
            ms = [self.group.affine(c.rep)[0] for c in cosets]
            M = max(0, *ms)
            return True, (2,) * M + (1,) + (-2,) * M
        return False, None

    def same_double_coset(self, i, j, h, x):
        ti, tj = self.types[i], self.types[j]
        mh, rh = self.group.affine(h)
        mx, rx = self.group.affine(x)
        k = Fraction(self.k)
        if ti == "t" and tj == "t":
            if rh == 0 or rx == 0:
                return rh == rx
            return _is_power_of(rx / rh, self.k)
        if ti == "a" and tj == "a":
            if mx != mh:
                return False
            step = k ** min(mh, 0)
            return ((rx - rh) / step).denominator == 1
        if ti == "t" and tj == "a":
            i_ = mx - mh
            return ((rx - k**i_ * rh) / k**mx).denominator == 1
        # <a> h <t>: x is in it iff x^-1 is in <t> h^-1 <a>
        return self.same_double_coset(j, i, inverse(h), inverse(x))

    def peripherals_generate(self):
        return set(self.types) == {"a", "t"}

    def peripheral_generators(self, p):
        return [(2,)] if self.types[p] == "t" else [(1,)]


# -- direct products ----------------------------------------------------------------


class ProductGroup:
    def __init__(self, left, right):
        self.left, self.right = left, right
        self.rank = left.rank + right.rank
        self.alphabet = Alphabet(
            list(left.alphabet.names) + [n if n not in left.alphabet.names else n + "_2" for n in right.alphabet.names]
        )

    def split(self, word):
        r1 = self.left.rank
        u = tuple(x for x in word if abs(x) <= r1)
        v = tuple((x - r1) if x > 0 else (x + r1) for x in word if abs(x) > r1)
        return u, v

    def join(self, u, v):
        r1 = self.left.rank
        return tuple(u) + tuple((x + r1) if x > 0 else (x - r1) for x in v)

    def key(self, word):
        u, v = self.split(word)
        return (self.left.key(u), self.right.key(v))

    def describe(self):
        return {"group": "product", "left": self.left.describe(), "right": self.right.describe()}


ALL = "all"
TRIVIAL = "trivial"


class ProductOracle(Oracle):
    """``G1 x G2`` with peripherals ``A x B``; each factor is a peripheral index of
    the factor oracle, ``"all"`` (the whole factor) or ``"trivial"``."""

    kind = "product"

    def __init__(self, left: Oracle, right: Oracle, peripherals):
        group = ProductGroup(left.group, right.group)
        self.left, self.right = left, right
        self.factors = [tuple(p) for p in peripherals]
        for k, (a, b) in enumerate(self.factors):
            if a == TRIVIAL and b == TRIVIAL:
                raise PreconditionError(f"peripheral {k} is the trivial subgroup; peripherals must be infinite")
            for spec, o in ((a, left), (b, right)):
                if spec not in (ALL, TRIVIAL) and not (isinstance(spec, int) and 0 <= spec < o.n_peripherals):
                    raise PreconditionError(f"invalid factor peripheral {spec!r}")
        names = [f"{self._fname(left, a)}x{self._fname(right, b)}" for a, b in self.factors]
        super().__init__(group, names)

    @staticmethod
    def _fname(o, spec):
        if spec == ALL:
            return "G"
        if spec == TRIVIAL:
            return "1"
        return o.peripheral_names[spec]

    def _fcoset(self, o, spec, g):
        if spec == ALL:
            return ()
        if spec == TRIVIAL:
            return _geodesic(o, g)
        return o.canonical_coset(spec, g).rep

    def _fpayload(self, o, spec, g):
        if spec == ALL:
            return None
        if spec == TRIVIAL:
            return o.key(g)
        return o.payload(spec, g)

    def payload(self, p, g):
        u, v = self.group.split(g)
        a, b = self.factors[p]
        return (self._fpayload(self.left, a, u), self._fpayload(self.right, b, v))

    def canonical_coset(self, p, g):
        g = self._check(g)
        u, v = self.group.split(g)
        a, b = self.factors[p]
        rep = self.group.join(self._fcoset(self.left, a, u), self._fcoset(self.right, b, v))
        return CosetId(p, rep, self.payload(p, g))

    def _rep_from_payload(self, p, g, pay):
        return self.canonical_coset(p, g).rep

    def multiply(self, *words):
        u, v = self.group.split(tuple(itertools.chain.from_iterable(words)))
        return self.group.join(self.left.multiply(u), self.right.multiply(v))

    def _factor_intersection(self, o, specs, reps):
        if any(s == TRIVIAL for s in specs):
            return False, None
        idx = [(s, r) for s, r in zip(specs, reps) if s != ALL]
        if not idx:
            return True, (1,)
        cos = [o.canonical_coset(s, r) for s, r in idx]
        return o.infinite_intersection(cos)

    def infinite_intersection(self, cosets):
        if not cosets:
            raise PreconditionError("empty coset family")
        splits = [self.group.split(c.rep) for c in cosets]
        lspec = [self.factors[c.peripheral][0] for c in cosets]
        rspec = [self.factors[c.peripheral][1] for c in cosets]
        ok, w = self._factor_intersection(self.left, lspec, [s[0] for s in splits])
        if ok:
            return True, self.group.join(w, ())
        ok, w = self._factor_intersection(self.right, rspec, [s[1] for s in splits])
        if ok:
            return True, self.group.join((), w)
        return False, None

    def _fdouble(self, o, si, sj, h):
        if si == ALL or sj == ALL:
            return ()
        if si == TRIVIAL and sj == TRIVIAL:
            return _geodesic(o, h)
        if si == TRIVIAL:
            return o.canonical_coset(sj, h).rep
        if sj == TRIVIAL:
            return inverse(o.canonical_coset(si, inverse(h)).rep)
        return o.double_coset_min(si, sj, h)

    def double_coset_min(self, i, j, h):
        u, v = self.group.split(self._check(h))
        (a1, b1), (a2, b2) = self.factors[i], self.factors[j]
        return self.group.join(self._fdouble(self.left, a1, a2, u), self._fdouble(self.right, b1, b2, v))

    def peripherals_generate(self):
        def gen(o, specs):
            if ALL in specs:
                return True
            idx = sorted({s for s in specs if s != TRIVIAL})
            if not idx:
                return False
            sub = _SubOracleView(o, idx)
            return sub.generates()

        return gen(self.left, [a for a, _ in self.factors]) and gen(self.right, [b for _, b in self.factors])

    def peripheral_generators(self, p):
        a, b = self.factors[p]
        out = []
        for o, spec, place in ((self.left, a, 0), (self.right, b, 1)):
            if spec == TRIVIAL:
                continue
            gens = [(x,) for x in range(1, o.rank + 1)] if spec == ALL else o.peripheral_generators(spec)
            for w in gens:
                out.append(self.group.join(w, ()) if place == 0 else self.group.join((), w))
        return out


class _SubOracleView:
    def __init__(self, o, idx):
        self.o, self.idx = o, idx

    def generates(self):
        o = self.o
        gens = [w for i in self.idx for w in o.peripheral_generators(i)]
        if isinstance(o, FreeOracle):
            core = stallings.core_of_subgroup(gens, o.rank)
            return core.n_vertices == 1 and core.n_edges == o.rank
        if isinstance(o, RAAGOracle):
            return frozenset().union(*(o.subsets[i] for i in self.idx)) == frozenset(range(o.rank))
        if isinstance(o, LatticeOracle):
            total = Sublattice([word_to_vector(w, o.n) for w in gens], o.n)
            return total.rank == o.n and total.index_bound() == 1
        if isinstance(o, BSOracle):
            return {o.types[i] for i in self.idx} == {"a", "t"}
        return False


def _geodesic(o: Oracle, g):
    """Shortlex-least geodesic word for an element of a factor group."""
    if isinstance(o, (FreeOracle, RAAGOracle, LatticeOracle)):
        return o.multiply(g)
    target = o.key(g)
    return o._search(lambda x: o.key(x) == target, len(g))
