"""Finite automata for rational subsets of free groups.

An :class:`NFA` reads signed-letter words.  ``benois_reduce`` turns any
automaton into one accepting exactly the freely reduced forms of the
elements it represents, after which intersection, finiteness and inclusion
are ordinary regular-language questions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .errors import ResourceError
from .stallings import CoreGraph, attach_spur
from .words import free_reduce, letters

DEFAULT_STATE_CAP = 10**6


@dataclass(frozen=True)
class NFA:
    """Nondeterministic automaton with a single initial state.

    ``trans[p]`` maps a letter to a frozenset of targets; ``eps[p]`` lists
    ε-successors (empty in every automaton returned by ``benois_reduce``).
    """

    rank: int
    n_states: int
    initial: int
    accepting: frozenset
    trans: tuple
    eps: tuple

    @property
    def reduced_form(self) -> bool:
        return not any(self.eps)

    def closure(self, states):
        seen = set(states)
        todo = list(states)
        while todo:
            p = todo.pop()
            for q in self.eps[p]:
                if q not in seen:
                    seen.add(q)
                    todo.append(q)
        return seen

    def step(self, states, x):
        out = set()
        for p in states:
            out |= self.trans[p].get(x, frozenset())
        return self.closure(out)

    def accepts(self, word) -> bool:
        cur = self.closure({self.initial})
        for x in word:
            cur = self.step(cur, x)
            if not cur:
                return False
        return bool(cur & self.accepting)

    def words(self, max_len):
        """Accepted words of length at most ``max_len`` (as a set of tuples)."""
        out = set()
        start = frozenset(self.closure({self.initial}))
        layer = {(): start}
        for n in range(max_len + 1):
            for w, st in layer.items():
                if st & self.accepting:
                    out.add(w)
            if n == max_len:
                break
            nxt = {}
            for w, st in layer.items():
                for x in letters(self.rank):
                    t = self.step(st, x)
                    if t:
                        nxt[w + (x,)] = frozenset(t)
            layer = nxt
        return out

    def trimmed(self) -> "NFA":
        """Restrict to states both reachable and co-reachable."""
        fwd = _reach(self, self.closure({self.initial}), forward=True)
        bwd = _reach(self, set(self.accepting), forward=False)
        live = fwd & bwd
        if self.initial not in live:
            return empty(self.rank)
        order = sorted(live)
        index = {p: k for k, p in enumerate(order)}
        trans = []
        eps = []
        for p in order:
            d = {}
            for x, ts in self.trans[p].items():
                kept = frozenset(index[t] for t in ts if t in live)
                if kept:
                    d[x] = kept
            trans.append(d)
            eps.append(frozenset(index[t] for t in self.eps[p] if t in live))
        acc = frozenset(index[p] for p in self.accepting if p in live)
        return NFA(self.rank, len(order), index[self.initial], acc, tuple(trans), tuple(eps))

    def is_empty(self) -> bool:
        return not (_reach(self, self.closure({self.initial}), True) & self.accepting)

    def is_infinite(self) -> bool:
        """True iff a cycle through a live state reads a nonempty word.

        Only meaningful after ``benois_reduce`` (ε-free, reduced words only).
        """
        a = self.trimmed()
        color = [0] * a.n_states
        for root in range(a.n_states):
            if color[root]:
                continue
            stack = [(root, iter(_succ(a, root)))]
            color[root] = 1
            while stack:
                p, it = stack[-1]
                q = next(it, None)
                if q is None:
                    color[p] = 2
                    stack.pop()
                elif color[q] == 1:
                    return True
                elif color[q] == 0:
                    color[q] = 1
                    stack.append((q, iter(_succ(a, q))))
        return False

    def shortest_length(self):
        """Length of a shortest accepted word, or ``None`` if the language is empty."""
        start = self.closure({self.initial})
        dist = {p: 0 for p in start}
        todo = deque(sorted(start))
        best = None
        # 0-1 BFS: ε-moves cost nothing
        while todo:
            p = todo.popleft()
            d = dist[p]
            if p in self.accepting and (best is None or d < best):
                best = d
            for q in self.eps[p]:
                if q not in dist or dist[q] > d:
                    dist[q] = d
                    todo.appendleft(q)
            for ts in self.trans[p].values():
                for q in ts:
                    if q not in dist or dist[q] > d + 1:
                        dist[q] = d + 1
                        todo.append(q)
        return best


def _succ(a, p):
    out = set(a.eps[p])
    for ts in a.trans[p].values():
        out |= ts
    return sorted(out)


def _reach(a: NFA, start, forward=True):
    if forward:
        adj = [_succ(a, p) for p in range(a.n_states)]
    else:
        adj = [[] for _ in range(a.n_states)]
        for p in range(a.n_states):
            for q in _succ(a, p):
                adj[q].append(p)
    seen = set(start)
    todo = list(start)
    while todo:
        p = todo.pop()
        for q in adj[p]:
            if q not in seen:
                seen.add(q)
                todo.append(q)
    return seen


class _Builder:
    def __init__(self, rank):
        self.rank = rank
        self.trans = []
        self.eps = []

    def state(self):
        self.trans.append({})
        self.eps.append(set())
        return len(self.trans) - 1

    def add(self, p, x, q):
        self.trans[p].setdefault(x, set()).add(q)

    def add_eps(self, p, q):
        if p != q:
            self.eps[p].add(q)

    def copy_in(self, a: NFA):
        off = len(self.trans)
        for p in range(a.n_states):
            self.state()
        for p in range(a.n_states):
            for x, ts in a.trans[p].items():
                for t in ts:
                    self.add(p + off, x, t + off)
            for t in a.eps[p]:
                self.add_eps(p + off, t + off)
        return off

    def build(self, initial, accepting):
        return NFA(
            self.rank,
            len(self.trans),
            initial,
            frozenset(accepting),
            tuple({x: frozenset(ts) for x, ts in d.items()} for d in self.trans),
            tuple(frozenset(e) for e in self.eps),
        )


def empty(rank) -> NFA:
    return NFA(rank, 1, 0, frozenset(), ({},), (frozenset(),))


def from_words(rank, words) -> NFA:
    """Automaton accepting exactly the given (possibly unreduced) words."""
    b = _Builder(rank)
    s = b.state()
    acc = []
    for w in words:
        p = s
        for x in w:
            q = b.state()
            b.add(p, x, q)
            p = q
        acc.append(p)
    return b.build(s, acc)


def from_graph(graph: CoreGraph, start, end) -> NFA:
    """Labels of paths ``start -> end`` in a labeled graph (both directions)."""
    b = _Builder(graph.rank)
    for _ in range(graph.n_vertices):
        b.state()
    for u, i, v in graph.edges():
        b.add(u, i + 1, v)
        b.add(v, -(i + 1), u)
    return b.build(start, [end])


def subgroup_nfa(core: CoreGraph) -> NFA:
    return from_graph(core, core.base, core.base)


def coset_nfa(core: CoreGraph, g: Sequence[int] = ()) -> NFA:
    """Automaton whose reduced accepted words are exactly the elements of ``gP``."""
    spur = attach_spur(core, g)
    return from_graph(spur.graph, spur.start, spur.end)


def ball_nfa(rank, r) -> NFA:
    """All words of length at most ``r`` (unreduced; reduction yields the ball)."""
    b = _Builder(rank)
    states = [b.state() for _ in range(r + 1)]
    for i in range(r):
        for x in letters(rank):
            b.add(states[i], x, states[i + 1])
    return b.build(states[0], states)


def inverse_nfa(a: NFA) -> NFA:
    """Automaton for ``{w^-1 : w in L(a)}``: reverse every edge and invert its label."""
    b = _Builder(a.rank)
    for _ in range(a.n_states):
        b.state()
    new_init = b.state()
    for p in range(a.n_states):
        for x, ts in a.trans[p].items():
            for t in ts:
                b.add(t, -x, p)
        for t in a.eps[p]:
            b.add_eps(t, p)
    for f in a.accepting:
        b.add_eps(new_init, f)
    return b.build(new_init, [a.initial])


def concat(*parts: NFA) -> NFA:
    rank = parts[0].rank
    b = _Builder(rank)
    offs = [b.copy_in(a) for a in parts]
    for k in range(len(parts) - 1):
        for f in parts[k].accepting:
            b.add_eps(f + offs[k], parts[k + 1].initial + offs[k + 1])
    last = parts[-1]
    return b.build(parts[0].initial + offs[0], [f + offs[-1] for f in last.accepting])


def benois_reduce(a: NFA, cap=DEFAULT_STATE_CAP) -> NFA:
    """Automaton accepting exactly the free reductions of the words of ``a``.

    ε-edges are added from ``p`` to ``q`` whenever some path ``p -x-> ... -x^-1-> q``
    has only ε-moves in between, until nothing new appears.  The result is then
    made ε-free and restricted to reduced words by remembering the last letter.
    """
    n = a.n_states
    eps = [set(e) for e in a.eps]
    # inverse-letter index: incoming transitions by letter
    into = [dict() for _ in range(n)]
    for p in range(n):
        for x, ts in a.trans[p].items():
            for t in ts:
                into[t].setdefault(x, set()).add(p)

    def closure(p):
        seen = {p}
        todo = [p]
        while todo:
            u = todo.pop()
            for v in eps[u]:
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        return seen

    changed = True
    while changed:
        changed = False
        for p in range(n):
            for x, mids in a.trans[p].items():
                for m in mids:
                    for m2 in closure(m):
                        for q in a.trans[m2].get(-x, ()):
                            if q != p and q not in eps[p]:
                                eps[p].add(q)
                                changed = True
    closures = [closure(p) for p in range(n)]
    # ε-free reduced product: state (p, last letter)
    rank = a.rank
    index = {}
    b = _Builder(rank)

    def state_of(key):
        s = index.get(key)
        if s is None:
            if len(index) >= cap:
                raise ResourceError(f"Benois reduction exceeds state cap {cap}")
            s = b.state()
            index[key] = s
            todo.append(key)
        return s

    todo = deque()
    init = state_of((a.initial, 0))
    accepting = []
    while todo:
        p, last = key = todo.popleft()
        s = index[key]
        cl = closures[p]
        if cl & a.accepting:
            accepting.append(s)
        for x in letters(rank):
            if x == -last:
                continue
            for u in cl:
                for t in a.trans[u].get(x, ()):
                    b.add(s, x, state_of((t, x)))
    return b.build(init, accepting).trimmed()


def intersect(a: NFA, b: NFA, cap=DEFAULT_STATE_CAP) -> NFA:
    """Product automaton (both inputs ε-free)."""
    if not a.reduced_form or not b.reduced_form:
        raise ValueError("intersect expects ε-free automata; run benois_reduce first")
    bld = _Builder(a.rank)
    index = {}
    todo = deque()

    def state_of(key):
        s = index.get(key)
        if s is None:
            if len(index) >= cap:
                raise ResourceError(f"product automaton exceeds state cap {cap}")
            s = bld.state()
            index[key] = s
            todo.append(key)
        return s

    init = state_of((a.initial, b.initial))
    acc = []
    while todo:
        key = todo.popleft()
        p, q = key
        s = index[key]
        if p in a.accepting and q in b.accepting:
            acc.append(s)
        for x, ts in a.trans[p].items():
            us = b.trans[q].get(x)
            if not us:
                continue
            for t in ts:
                for u in us:
                    bld.add(s, x, state_of((t, u)))
    return bld.build(init, acc).trimmed()


def intersect_all(automata, cap=DEFAULT_STATE_CAP) -> NFA:
    out = automata[0]
    for other in automata[1:]:
        out = intersect(out, other, cap)
    return out


def neighborhood(core: CoreGraph, g, r: int, cap=DEFAULT_STATE_CAP) -> NFA:
    """Reduced words of ``g P B_r``, the closed ``r``-neighbourhood of ``gP``."""
    if r < 0:
        raise ValueError("neighbourhood radius must be nonnegative")
    a = coset_nfa(core, g)
    if r:
        a = concat(a, ball_nfa(core.rank, r))
    return benois_reduce(a, cap)


def coset_distance(core1: CoreGraph, g1, core2: CoreGraph, g2, cap=DEFAULT_STATE_CAP) -> int:
    """``min |x|`` over ``x`` in ``P1 g1^-1 g2 P2``: the infimum distance of the cosets."""
    left = inverse_nfa(coset_nfa(core1, g1))
    right = coset_nfa(core2, g2)
    return benois_reduce(concat(left, right), cap).shortest_length()


def ktau_simplex(cosets, tau: int, cap=DEFAULT_STATE_CAP) -> bool:
    """Whether ``⋂ N_tau(g_i P_i)`` is infinite.  ``cosets`` lists ``(core, g)``."""
    autos = [neighborhood(c, g, tau, cap) for c, g in cosets]
    return intersect_all(autos, cap).is_infinite()


def includes(a: NFA, b: NFA, cap=DEFAULT_STATE_CAP) -> bool:
    """``L(a) ⊆ L(b)`` for ε-free automata, by antichain forward exploration.

    A pair ``(p, S)`` tracks a run of ``a`` at ``p`` against the set ``S`` of
    ``b``-states reading the same word; pairs whose ``S`` contains the set
    of an already explored pair with the same ``p`` are subsumed.
    """
    start = (a.initial, frozenset({b.initial}))
    antichain = {}
    todo = deque([start])
    count = 0
    while todo:
        p, S = todo.popleft()
        seen = antichain.setdefault(p, [])
        if any(T <= S for T in seen):
            continue
        seen[:] = [T for T in seen if not S <= T]
        seen.append(S)
        count += 1
        if count > cap:
            raise ResourceError(f"inclusion check exceeds state cap {cap}")
        if p in a.accepting and not (S & b.accepting):
            return False
        for x, ts in a.trans[p].items():
            nS = set()
            for q in S:
                nS |= b.trans[q].get(x, frozenset())
            nS = frozenset(nS)
            for t in ts:
                todo.append((t, nS))
    return True


def hausdorff_within(core1: CoreGraph, g1, core2: CoreGraph, g2, r: int, cap=DEFAULT_STATE_CAP) -> bool:
    """``Hdist(g1 P1, g2 P2) <= r``: each coset lies in the other's ``r``-neighbourhood."""
    c1 = benois_reduce(coset_nfa(core1, g1), cap)
    c2 = benois_reduce(coset_nfa(core2, g2), cap)
    return includes(c1, neighborhood(core2, g2, r, cap), cap) and includes(
        c2, neighborhood(core1, g1, r, cap), cap
    )


def hausdorff_distance_upto(core1, g1, core2, g2, r_max: int, cap=DEFAULT_STATE_CAP):
    """Least ``r <= r_max`` with ``hausdorff_within``; ``None`` when none exists."""
    for r in range(r_max + 1):
        if hausdorff_within(core1, g1, core2, g2, r, cap):
            return r
    return None


def intersection_spread(cosets, r: int, sample_len: int, r_max: int, cap=DEFAULT_STATE_CAP):
    """Empirical radius for the neighbourhood-intersection lemma.

    Enumerates the points of ``⋂ N_r(g_i P_i)`` up to length ``sample_len``
    and returns the least ``R <= r_max`` such that each lies within ``R`` of
    the intersection ``⋂ g_i P_i g_i^-1`` translated to the nearest coset
    representative, together with the sample size.  ``None`` when the
    intersection of the neighbourhoods is finite or no ``R`` works.
    """
    from .stallings import intersection_core

    inter = intersect_all([neighborhood(c, g, r, cap) for c, g in cosets], cap)
    if not inter.is_infinite():
        return None, 0
    points = sorted(inter.words(sample_len))
    sub = intersection_core(cosets, cap)
    # the intersection subgroup acts on N_r(g_0 P_0) ∩ ...; measure distance
    # from every point to the orbit H·p0 where p0 is a fixed sampled point
    p0 = min(points, key=lambda w: (len(w), w))
    orbit_nfa = concat(subgroup_nfa(sub), from_words(sub.rank, [p0]))
    for R in range(r_max + 1):
        nb = benois_reduce(concat(orbit_nfa, ball_nfa(sub.rank, R)), cap) if R else benois_reduce(orbit_nfa, cap)
        if all(nb.accepts(free_reduce(p)) for p in points):
            return R, len(points)
    return None, len(points)



def shortlex_least(a: NFA):
    """Shortlex-least accepted word of an ε-free automaton (``None`` if empty).

    States are ranked by their distance to acceptance; the word is then built
    greedily, taking at each step the least letter that keeps a shortest
    completion available from the current state set.
    """
    if not a.reduced_form:
        raise ValueError("shortlex_least expects an ε-free automaton")
    INF = float("inf")
    dist = [INF] * a.n_states
    back = [[] for _ in range(a.n_states)]
    for p in range(a.n_states):
        for ts in a.trans[p].values():
            for t in ts:
                back[t].append(p)
    todo = deque()
    for f in a.accepting:
        dist[f] = 0
        todo.append(f)
    while todo:
        q = todo.popleft()
        for p in back[q]:
            if dist[p] == INF:
                dist[p] = dist[q] + 1
                todo.append(p)
    cur = {a.initial}
    remaining = dist[a.initial]
    if remaining == INF:
        return None
    word = []
    while remaining > 0:
        for x in letters(a.rank):
            nxt = a.step(cur, x)
            if nxt and min(dist[q] for q in nxt) == remaining - 1:
                word.append(x)
                cur = {q for q in nxt if dist[q] == remaining - 1}
                remaining -= 1
                break
    return tuple(word)
