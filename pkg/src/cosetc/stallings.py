"""Stallings core graphs of finitely generated subgroups of free groups.

Vertices are ``0..n-1``; directed edges carry a positive generator index and
are traversed backwards by the inverse letter.  Every graph built here is
folded (deterministic in both directions), so reading a word from a vertex
follows at most one path.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .errors import PreconditionError, ResourceError
from .words import free_reduce, inverse, letters, shortlex_key

DEFAULT_STATE_CAP = 10**6


class CoreGraph:
    """A folded, pointed, connected labeled graph.

    ``out[v][i]`` is the target of the edge labeled by generator ``i`` leaving
    ``v``; ``inn[v][i]`` the source of the one entering ``v``.
    """

    __slots__ = ("rank", "base", "out", "inn", "_geo")

    def __init__(self, rank, base, out, inn):
        self.rank = rank
        self.base = base
        self.out = out
        self.inn = inn
        self._geo = None

    @property
    def n_vertices(self) -> int:
        return len(self.out)

    @property
    def n_edges(self) -> int:
        return sum(len(d) for d in self.out)

    @property
    def subgroup_rank(self) -> int:
        return self.n_edges - self.n_vertices + 1

    @property
    def is_trivial(self) -> bool:
        """True when the basepoint loops read only the identity."""
        return self.subgroup_rank == 0

    def edges(self):
        return sorted((u, i, v) for u, d in enumerate(self.out) for i, v in d.items())

    def step(self, v, x):
        if x > 0:
            return self.out[v].get(x - 1)
        return self.inn[v].get(-x - 1)

    def read(self, v, word):
        for x in word:
            v = self.step(v, x)
            if v is None:
                return None
        return v

    def letters_at(self, v):
        return {i + 1 for i in self.out[v]} | {-(i + 1) for i in self.inn[v]}

    def degree(self, v) -> int:
        return len(self.out[v]) + len(self.inn[v])

    def key(self):
        """Canonical form: equal keys iff isomorphic as pointed labeled graphs."""
        return canonical(self)._raw_key()

    def _raw_key(self):
        return (self.rank, self.base, self.n_vertices, tuple(self.edges()))

    def __eq__(self, other):
        return isinstance(other, CoreGraph) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"CoreGraph(rank={self.rank}, V={self.n_vertices}, E={self.n_edges}, base={self.base})"

    # -- geodesics towards the basepoint ---------------------------------
    def geodesics(self):
        """Distance to the basepoint and the lex-least first letter of a geodesic."""
        if self._geo is None:
            dist = bfs_distances(self, self.base)
            nxt = [None] * self.n_vertices
            order = letters(self.rank)
            for v in range(self.n_vertices):
                if v == self.base or dist[v] is None:
                    continue
                for x in order:
                    w = self.step(v, x)
                    if w is not None and dist[w] == dist[v] - 1:
                        nxt[v] = x
                        break
            self._geo = (dist, nxt)
        return self._geo

    def path_to_base(self, v):
        """Shortlex-least word labelling a path from ``v`` to the basepoint."""
        dist, nxt = self.geodesics()
        out = []
        while v != self.base:
            x = nxt[v]
            out.append(x)
            v = self.step(v, x)
        return tuple(out)

    def path_from_base(self, v):
        return inverse(self.path_to_base(v))


def bfs_distances(graph: CoreGraph, source):
    dist = [None] * graph.n_vertices
    dist[source] = 0
    todo = deque([source])
    while todo:
        v = todo.popleft()
        for w in list(graph.out[v].values()) + list(graph.inn[v].values()):
            if dist[w] is None:
                dist[w] = dist[v] + 1
                todo.append(w)
    return dist


def _from_edges(rank, n, edges, base):
    out = [dict() for _ in range(n)]
    inn = [dict() for _ in range(n)]
    for u, i, v in edges:
        out[u][i] = v
        inn[v][i] = u
    return CoreGraph(rank, base, out, inn)


def fold(rank, n, edges, base, prune=True) -> CoreGraph:
    """Stallings-fold an arbitrary labeled graph and return it canonically labeled.

    With ``prune`` hanging trees not containing the basepoint are removed.
    """
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = list(edges)
    while True:
        merged = False
        fwd = {}
        bwd = {}
        for u, i, v in edges:
            u, v = find(u), find(v)
            w = fwd.setdefault((u, i), v)
            if find(w) != v:
                parent[find(w)] = v
                merged = True
                continue
            w = bwd.setdefault((v, i), u)
            if find(w) != u:
                parent[find(w)] = u
                merged = True
        if not merged:
            break
    reps = sorted({find(x) for x in range(n)})
    index = {r: k for k, r in enumerate(reps)}
    canon = {(index[find(u)], i, index[find(v)]) for u, i, v in edges}
    g = _from_edges(rank, len(reps), canon, index[find(base)])
    if prune:
        g = prune_hair(g)
    return canonical(g)


def prune_hair(graph: CoreGraph, keep_base=True) -> CoreGraph:
    """Remove vertices of degree at most one (the basepoint is exempt if ``keep_base``)."""
    alive = set(range(graph.n_vertices))
    deg = [graph.degree(v) for v in range(graph.n_vertices)]
    todo = [v for v in alive if deg[v] <= 1 and not (keep_base and v == graph.base)]
    while todo:
        v = todo.pop()
        if v not in alive:
            continue
        alive.discard(v)
        for w in list(graph.out[v].values()) + list(graph.inn[v].values()):
            if w in alive:
                deg[w] -= 1
                if deg[w] <= 1 and not (keep_base and w == graph.base):
                    todo.append(w)
    if len(alive) == graph.n_vertices:
        return graph
    keep = sorted(alive)
    index = {v: k for k, v in enumerate(keep)}
    edges = [(index[u], i, index[v]) for u, i, v in graph.edges() if u in alive and v in alive]
    base = index.get(graph.base, 0)
    return _from_edges(graph.rank, len(keep), edges, base)


def canonical(graph: CoreGraph) -> CoreGraph:
    """Relabel vertices in breadth-first order from the basepoint."""
    order = letters(graph.rank)
    index = {graph.base: 0}
    todo = deque([graph.base])
    while todo:
        v = todo.popleft()
        for x in order:
            w = graph.step(v, x)
            if w is not None and w not in index:
                index[w] = len(index)
                todo.append(w)
    edges = [(index[u], i, index[v]) for u, i, v in graph.edges() if u in index]
    return _from_edges(graph.rank, len(index), edges, 0)


def core_of_subgroup(generators: Sequence[Sequence[int]], rank: int) -> CoreGraph:
    """Folded core graph of the subgroup generated by ``generators``.

    An empty (or all-trivial) generator list gives the one-vertex graph of the
    trivial subgroup; callers check ``is_trivial`` to reject finite subgroups.
    """
    edges = []
    n = 1
    for w in generators:
        w = free_reduce(w, rank)
        if not w:
            continue
        prev = 0
        for pos, x in enumerate(w):
            nxt = 0 if pos == len(w) - 1 else n
            if nxt:
                n += 1
            edges.append((prev, x - 1, nxt) if x > 0 else (nxt, -x - 1, prev))
            prev = nxt
    return fold(rank, n, edges, 0)


def membership(graph: CoreGraph, g: Sequence[int]) -> bool:
    return graph.read(graph.base, free_reduce(g, graph.rank)) == graph.base


class Spur(NamedTuple):
    """Core graph with a hair attached so that paths ``start -> end`` read ``gP``.

    Loops at ``start`` read ``gPg^-1``.  Vertices below ``graph.n_vertices``
    of the original core keep their indices.
    """

    graph: CoreGraph
    start: int
    end: int


def attach_spur(core: CoreGraph, g: Sequence[int]) -> Spur:
    g = free_reduce(g, core.rank)
    # absorb the longest suffix of g readable backwards from the basepoint
    u = core.base
    k = len(g)
    while k > 0:
        w = core.step(u, -g[k - 1])
        if w is None:
            break
        u = w
        k -= 1
    head = g[:k]
    n = core.n_vertices
    out = [dict(d) for d in core.out]
    inn = [dict(d) for d in core.inn]
    # hair vertices: n .. n+k-1, start = n (or u when the hair is empty)
    chain = list(range(n, n + k)) + [u]
    for _ in range(k):
        out.append({})
        inn.append({})
    for pos, x in enumerate(head):
        a, b = chain[pos], chain[pos + 1]
        if x > 0:
            out[a][x - 1] = b
            inn[b][x - 1] = a
        else:
            out[b][-x - 1] = a
            inn[a][-x - 1] = b
    start = chain[0]
    return Spur(CoreGraph(core.rank, start, out, inn), start, core.base)


def conjugate(core: CoreGraph, g: Sequence[int]) -> CoreGraph:
    """Core graph of ``g P g^-1``, basepoint at the end of the attached spur."""
    spur = attach_spur(core, g)
    return canonical(prune_hair(spur.graph))


def coset_min_rep(core: CoreGraph, g: Sequence[int]):
    """Shortlex-least reduced word of the left coset ``gP``."""
    g = free_reduce(g, core.rank)
    u = core.base
    k = len(g)
    while k > 0:
        w = core.step(u, -g[k - 1])
        if w is None:
            break
        u = w
        k -= 1
    return g[:k] + core.path_to_base(u)


def read_suffix(core: CoreGraph, g):
    """Split reduced ``g = head * tail`` with ``tail^-1`` readable from the base.

    Returns ``(head, u)`` where ``u`` is the vertex reached by reading
    ``tail^-1``, i.e. the hair of ``gP`` attaches at ``u``.
    """
    u = core.base
    k = len(g)
    while k > 0:
        w = core.step(u, -g[k - 1])
        if w is None:
            break
        u = w
        k -= 1
    return g[:k], u


# -- fiber products -----------------------------------------------------


@dataclass
class FiberComponent:
    """One connected component of a label-matching product of pointed graphs."""

    vertices: list
    n_edges: int
    contains_base: bool
    diagonal: dict = field(default_factory=dict)
    witness: tuple | None = None

    @property
    def rank(self) -> int:
        return self.n_edges - len(self.vertices) + 1

    @property
    def has_cycle(self) -> bool:
        return self.n_edges >= len(self.vertices)


def _product_step(graphs, state, x):
    nxt = []
    for gr, v in zip(graphs, state):
        w = gr.step(v, x)
        if w is None:
            return None
        nxt.append(w)
    return tuple(nxt)


def explore_component(graphs, start, cap=DEFAULT_STATE_CAP, want_witness=True):
    """Breadth-first search of the product component through ``start``.

    Returns ``(vertices, n_edges, witness)`` where ``witness`` is a reduced
    nontrivial loop at ``start`` when the component has a cycle.
    """
    rank = graphs[0].rank
    order = letters(rank)
    parent = {start: None}
    queue = deque([start])
    n_edges = 0
    extra = None
    while queue:
        s = queue.popleft()
        for x in order:
            t = _product_step(graphs, s, x)
            if t is None:
                continue
            if x > 0:
                n_edges += 1
            if t not in parent:
                parent[t] = (s, x)
                queue.append(t)
                if len(parent) > cap:
                    raise ResourceError(f"fiber product exceeds state cap {cap}")
            elif x > 0 and extra is None and parent[t] != (s, x) and parent[s] != (t, -x):
                extra = (s, x, t)
    witness = None
    if want_witness and extra is not None:
        s, x, t = extra
        witness = free_reduce(_tree_path(parent, s) + (x,) + inverse(_tree_path(parent, t)))
    return list(parent), n_edges, witness


def _tree_path(parent, s):
    out = []
    while parent[s] is not None:
        s, x = parent[s]
        out.append(x)
    return tuple(reversed(out))


def fiber_product(items, cap=DEFAULT_STATE_CAP):
    """All components of the product of conjugated core graphs.

    ``items`` is a list of ``(core, conjugator)``.  The component containing
    the tuple of basepoints carries the intersection of the conjugates
    ``g_i P_i g_i^-1``; it has a cycle iff that intersection is infinite.
    ``diagonal[(i, j)]`` is set for coordinates over the same core graph and
    records whether both project to the same core vertex (same coset).
    """
    spurs = [attach_spur(c, g) for c, g in items]
    graphs = [s.graph for s in spurs]
    base = tuple(s.start for s in spurs)
    total = 1
    for gr in graphs:
        total *= gr.n_vertices
    if total > cap:
        raise ResourceError(f"fiber product exceeds state cap {cap}")
    same = [
        (i, j)
        for i in range(len(items))
        for j in range(i + 1, len(items))
        if items[i][0].key() == items[j][0].key()
    ]
    core_sizes = [c.n_vertices for c, _ in items]
    seen = set()
    comps = []
    for state in _all_states(graphs, base):
        if state in seen:
            continue
        verts, ne, wit = explore_component(graphs, state, cap)
        seen.update(verts)
        diag = {}
        for i, j in same:
            pairs = [(v[i], v[j]) for v in verts if v[i] < core_sizes[i] and v[j] < core_sizes[j]]
            diag[(i, j)] = bool(pairs) and all(a == b for a, b in pairs)
        comps.append(FiberComponent(verts, ne, state == base, diag, wit))
    return comps


def _all_states(graphs, base):
    yield base
    idx = [0] * len(graphs)
    sizes = [g.n_vertices for g in graphs]
    while True:
        yield tuple(idx)
        k = len(idx) - 1
        while k >= 0:
            idx[k] += 1
            if idx[k] < sizes[k]:
                break
            idx[k] = 0
            k -= 1
        if k < 0:
            return


def infinite_intersection_free(items, cap=DEFAULT_STATE_CAP):
    """Decide whether ``⋂ g_i P_i g_i^-1`` is infinite; return ``(flag, witness)``.

    ``items`` is a list of ``(core, g)``.  Only the basepoint component of the
    product is explored.
    """
    graphs = [attach_spur(c, g).graph for c, g in items]
    base = tuple(gr.base for gr in graphs)
    _, _, wit = explore_component(graphs, base, cap)
    return (wit is not None), wit


class PairTable:
    """Precomputed product ``C1 x C2`` answering ``P1 ∩ h P2 h^-1`` in time O(|h|).

    Attaching the hair of ``hP2`` to ``C2`` and walking it from the base of
    ``C1`` reaches a vertex pair of ``C1 x C2``; the intersection is infinite
    iff that pair's component has a cycle.
    """

    def __init__(self, c1: CoreGraph, c2: CoreGraph, cap=DEFAULT_STATE_CAP):
        if c1.n_vertices * c2.n_vertices > cap:
            raise ResourceError(f"pair table exceeds state cap {cap}")
        self.c1, self.c2 = c1, c2
        graphs = (c1, c2)
        self.comp = {}
        self.loops = []
        self.parents = []
        order = letters(c1.rank)
        for a in range(c1.n_vertices):
            for b in range(c2.n_vertices):
                s = (a, b)
                if s in self.comp:
                    continue
                cid = len(self.loops)
                parent = {s: None}
                queue = deque([s])
                extra = None
                while queue:
                    u = queue.popleft()
                    self.comp[u] = cid
                    for x in order:
                        t = _product_step(graphs, u, x)
                        if t is None:
                            continue
                        if t not in parent:
                            parent[t] = (u, x)
                            queue.append(t)
                        elif x > 0 and extra is None and parent[t] != (u, x) and parent[u] != (t, -x):
                            extra = (u, x, t)
                loop = None
                if extra is not None:
                    u, x, t = extra
                    loop = free_reduce(_tree_path(parent, u) + (x,) + inverse(_tree_path(parent, t)))
                self.loops.append(loop)
                self.parents.append(parent)

    def intersect(self, h):
        """Return ``(infinite, witness)`` for ``P1 ∩ h P2 h^-1``."""
        h = free_reduce(h)
        head, u2 = read_suffix(self.c2, h)
        v1 = self.c1.read(self.c1.base, head)
        if v1 is None:
            return False, None
        cid = self.comp[(v1, u2)]
        loop = self.loops[cid]
        if loop is None:
            return False, None
        p = _tree_path(self.parents[cid], (v1, u2))
        # loop is based at the component root; conjugate it to (v1, u2)
        w = free_reduce(head + inverse(p) + loop + p + inverse(head))
        return True, w


# -- height, malnormality, indices -------------------------------------------


class Height(NamedTuple):
    value: int
    exact: bool


class _Tuples:
    """Explicit labeled graph on tuple states (used for iterated products)."""

    def __init__(self, rank, states, edges):
        self.rank = rank
        self.states = states
        self.out = {s: {} for s in states}
        self.inn = {s: {} for s in states}
        for u, i, v in edges:
            self.out[u][i] = v
            self.inn[v][i] = u

    def step(self, v, x):
        if x > 0:
            return self.out[v].get(x - 1)
        return self.inn[v].get(-x - 1)


def _cyclic_components(rank, start_states, step, cap):
    """Components (pruned to their cores) of an implicit deterministic graph."""
    order = letters(rank)
    seen = set()
    comps = []
    for s0 in start_states:
        if s0 in seen:
            continue
        comp = {s0}
        queue = deque([s0])
        edges = []
        while queue:
            u = queue.popleft()
            for x in order:
                t = step(u, x)
                if t is None:
                    continue
                if x > 0:
                    edges.append((u, x - 1, t))
                if t not in comp:
                    comp.add(t)
                    queue.append(t)
                    if len(comp) > cap:
                        raise ResourceError(f"product component exceeds state cap {cap}")
        seen |= comp
        if len(edges) < len(comp):
            continue
        # prune degree <= 1 vertices
        deg = {v: 0 for v in comp}
        for u, _, v in edges:
            deg[u] += 1
            deg[v] += 1
        alive = set(comp)
        adj = {v: [] for v in comp}
        for u, _, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        todo = [v for v in comp if deg[v] <= 1]
        while todo:
            v = todo.pop()
            if v not in alive:
                continue
            alive.discard(v)
            for w in adj[v]:
                if w in alive:
                    deg[w] -= 1
                    if deg[w] <= 1:
                        todo.append(w)
        kept = [e for e in edges if e[0] in alive and e[2] in alive]
        comps.append(_Tuples(rank, sorted(alive), kept))
    return comps


def _extend(comp: _Tuples, core: CoreGraph, new_p, periph_of, cap):
    """Product of an iterated-product core with one more core graph, keeping
    cyclic components whose new coordinate differs from every earlier
    coordinate over the same peripheral."""
    states = [s + (v,) for s in comp.states for v in range(core.n_vertices)]
    if len(states) > cap:
        raise ResourceError(f"iterated fiber product exceeds state cap {cap}")

    def step(st, x):
        a = comp.step(st[:-1], x)
        if a is None:
            return None
        b = core.step(st[-1], x)
        if b is None:
            return None
        return a + (b,)

    out = []
    same = [i for i, p in enumerate(periph_of) if p == new_p]
    for c in _cyclic_components(core.rank, states, step, cap):
        s = c.states[0]
        if any(s[i] == s[-1] for i in same):
            continue
        out.append(c)
    return out


def height_exact_free(cores: Sequence[CoreGraph], cap: int = 8, state_cap=DEFAULT_STATE_CAP) -> Height:
    """Height of a collection of nontrivial free-group subgroups.

    Level ``k`` keeps every cyclic component of the ``k``-fold product of the
    cores whose coordinates over equal peripherals are pairwise distinct; such
    a component is a family of ``k`` distinct cosets with infinite common
    intersection.  Coordinates use nondecreasing peripheral indices.
    """
    if not cores:
        return Height(0, True)
    pruned = []
    for c in cores:
        if c.is_trivial:
            raise PreconditionError("height needs infinite (nontrivial) subgroups")
        pruned.append(prune_hair(c, keep_base=False))
    rank = cores[0].rank
    level = []
    for p, c in enumerate(pruned):
        states = [(v,) for v in range(c.n_vertices)]
        for comp in _cyclic_components(rank, states, lambda s, x, c=c: _wrap(c.step(s[0], x)), state_cap):
            level.append(((p,), comp))
    m = 1
    while m < cap:
        nxt = []
        for periph_of, comp in level:
            for p in range(periph_of[-1], len(pruned)):
                for c in _extend(comp, pruned[p], p, periph_of, state_cap):
                    nxt.append((periph_of + (p,), c))
        if not nxt:
            return Height(m, True)
        level = nxt
        m += 1
    return Height(m, False)


def _wrap(v):
    return None if v is None else (v,)


@dataclass
class MalnormalVerdict:
    malnormal: bool
    conjugator: tuple | None = None
    pair: tuple | None = None
    witness: tuple | None = None


def malnormality_certificate(core: CoreGraph) -> MalnormalVerdict:
    """Malnormality of a single nontrivial subgroup via its self fiber product."""
    return malnormal_collection_certificate([core])


def malnormal_collection_certificate(cores: Sequence[CoreGraph]) -> MalnormalVerdict:
    """Almost malnormality of a collection of free-group subgroups.

    A cyclic component of ``C_i x C_j`` at vertex pair ``(u, v)`` (with
    ``u != v`` when ``i == j``) gives ``g = path(u) path(v)^-1`` with
    ``P_i ∩ g P_j g^-1`` infinite and ``gP_j != P_i``.  The reported
    conjugator is the shortlex-least minimal coset representative found.
    """
    best = None
    for i, ci in enumerate(cores):
        for j in range(i, len(cores)):
            cj = cores[j]
            table = PairTable(ci, cj)
            for (u, v), cid in table.comp.items():
                if table.loops[cid] is None or (i == j and u == v):
                    continue
                g = free_reduce(ci.path_from_base(u) + cj.path_to_base(v))
                g = coset_min_rep(cj, g)
                cand = (shortlex_key(g), i, j, g)
                if best is None or cand < best:
                    best = cand
    if best is None:
        return MalnormalVerdict(True)
    _, i, j, g = best
    ok, w = PairTable(cores[i], cores[j]).intersect(g)
    assert ok
    return MalnormalVerdict(False, g, (i, j), w)


def contains(sup: CoreGraph, sub: CoreGraph) -> bool:
    """True iff the subgroup of ``sub`` lies in that of ``sup`` (an immersion exists)."""
    phi = {sub.base: sup.base}
    todo = [sub.base]
    order = letters(sub.rank)
    while todo:
        v = todo.pop()
        for x in order:
            w = sub.step(v, x)
            if w is None:
                continue
            t = sup.step(phi[v], x)
            if t is None:
                return False
            if w in phi:
                if phi[w] != t:
                    return False
            else:
                phi[w] = t
                todo.append(w)
    return True


def _immersion(sub, sup):
    phi = {sub.base: sup.base}
    todo = [sub.base]
    order = letters(sub.rank)
    while todo:
        v = todo.pop()
        for x in order:
            w = sub.step(v, x)
            if w is not None and w not in phi:
                phi[w] = sup.step(phi[v], x)
                todo.append(w)
    return phi


def finite_index_test(sub: CoreGraph, sup: CoreGraph) -> bool:
    """Whether ``sub`` has finite index in ``sup`` (``sub`` must be contained in ``sup``).

    After moving both basepoints onto the core of ``sup``, the index is finite
    iff the induced immersion is a covering: same letters at every vertex.
    """
    if not contains(sup, sub):
        raise PreconditionError("finite_index_test: subgroup is not contained in the supergroup")
    if sup.is_trivial:
        return True
    if sub.is_trivial:
        return False
    # basepoint of the pruned core: nearest core vertex to the old base
    dist = bfs_distances(sup, sup.base)
    core_vertices = _core_vertex_ids(sup)
    target = min(core_vertices, key=lambda v: (dist[v], v))
    t = sup.path_from_base(target)
    sup2 = conjugate(sup, inverse(t))
    sub2 = conjugate(sub, inverse(t))
    phi = _immersion(sub2, sup2)
    for v in range(sub2.n_vertices):
        if sub2.letters_at(v) != sup2.letters_at(phi[v]):
            return False
    return True


def _core_vertex_ids(graph: CoreGraph):
    pruned_ids = set(range(graph.n_vertices))
    deg = [graph.degree(v) for v in range(graph.n_vertices)]
    todo = [v for v in pruned_ids if deg[v] <= 1]
    while todo:
        v = todo.pop()
        if v not in pruned_ids:
            continue
        pruned_ids.discard(v)
        for w in list(graph.out[v].values()) + list(graph.inn[v].values()):
            if w in pruned_ids:
                deg[w] -= 1
                if deg[w] <= 1:
                    todo.append(w)
    return pruned_ids


def intersection_core(items, cap=DEFAULT_STATE_CAP) -> CoreGraph:
    """Core graph of ``⋂ g_i P_i g_i^-1`` from the basepoint product component."""
    graphs = [attach_spur(c, g).graph for c, g in items]
    base = tuple(gr.base for gr in graphs)
    verts, _, _ = explore_component(graphs, base, cap, want_witness=False)
    index = {s: k for k, s in enumerate(verts)}
    edges = []
    for s in verts:
        for i in range(graphs[0].rank):
            t = _product_step(graphs, s, i + 1)
            if t is not None:
                edges.append((index[s], i, index[t]))
    g = _from_edges(graphs[0].rank, len(verts), edges, index[base])
    return canonical(prune_hair(g))


def is_commensurating(core: CoreGraph, g) -> bool:
    """True iff ``P ∩ gPg^-1`` has finite index in both ``P`` and ``gPg^-1``."""
    if core.is_trivial:
        raise PreconditionError("is_commensurating needs a nontrivial subgroup")
    inter = intersection_core([(core, ()), (core, g)])
    if inter.is_trivial:
        return False
    return finite_index_test(inter, core) and finite_index_test(inter, conjugate(core, g))


def coset_distance_free(c1: CoreGraph, g1, c2: CoreGraph, g2) -> int:
    """Exact ``dist(g1 P1, g2 P2)`` via the product of the two spur graphs.

    Reading a common prefix reaches a state ``(q1, q2)``; finishing
    separately costs ``d(q1, end1) + d(q2, end2)``.  The minimum over the
    reachable states is the distance.
    """
    s1 = attach_spur(c1, g1)
    s2 = attach_spur(c2, g2)
    d1 = bfs_distances(s1.graph, s1.end)
    d2 = bfs_distances(s2.graph, s2.end)
    graphs = (s1.graph, s2.graph)
    verts, _, _ = explore_component(graphs, (s1.start, s2.start), want_witness=False)
    return min(d1[a] + d2[b] for a, b in verts)


def commensurator_ball(core: CoreGraph, elements):
    """Elements of ``elements`` commensurating the subgroup (bounded search)."""
    return [g for g in elements if is_commensurating(core, g)]
