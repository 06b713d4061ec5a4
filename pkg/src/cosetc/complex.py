"""Finite balls of coset complexes and related graphs, with statistics and export.

A ball of radius ``R`` holds every coset with a representative of length at
most ``R``.  Edges and simplices are decided by exact intersection tests and
carry a witness element of the corresponding intersection of conjugates.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import networkx as nx

from . import rational
from .errors import CapabilityError, ConfigError, ResourceError
from .oracles import CosetId, FreeOracle, Oracle, RAAGOracle, star_subsets
from .words import RAAG, DefiningGraph, ball_enumerate, commutes, inverse, nf_raag, shortlex_key

EXPORT_VERSION = 1
DEFAULT_VERTEX_CAP = 10**5
DEFAULT_MAX_DIM = 6


def worker_count() -> int:
    """Worker threads for embarrassingly parallel tests (``COSETC_THREADS``, default 1)."""
    try:
        return max(1, int(os.environ.get("COSETC_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Order-preserving map, threaded when ``COSETC_THREADS`` > 1."""
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 64:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * n))))


@dataclass
class ComplexBall:
    """Vertices, edges and simplices of a ball; indices refer to ``vertices``."""

    oracle: Oracle
    radius: int
    vertices: list
    edges: dict
    simplices: dict
    max_dim: int
    tau: int | None = None
    capped: bool = False

    def simplex_list(self):
        out = []
        for d in sorted(self.simplices):
            out.extend(sorted(self.simplices[d]))
        return out

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(len(self.vertices)))
        g.add_edges_from(self.edges)
        return g

    def max_simplex(self):
        """Largest stored simplex (vertex indices); a single vertex if there are no edges."""
        if not self.vertices:
            return ()
        top = max(self.simplices) if self.simplices else 1
        if self.simplices:
            return min(self.simplices[top])
        return (0,)

    def to_export(self) -> "GraphExport":
        o = self.oracle
        verts = [
            {"id": i, "label": o.coset_label(c), "peripheral": c.peripheral, "rep": o.format(c.rep)}
            for i, c in enumerate(self.vertices)
        ]
        edges = [{"u": u, "v": v, "witness": o.format(w)} for (u, v), w in sorted(self.edges.items())]
        simp = [
            {"vertices": list(s), "witness": o.format(w)}
            for d in sorted(self.simplices)
            for s, w in sorted(self.simplices[d].items())
        ]
        stats = clique_and_dimension_stats(self)
        stats.pop("max_simplex_vertices", None)
        stats.pop("max_clique_vertices", None)
        stats["dimension_capped"] = self.capped
        return GraphExport(o.describe(), self.radius, self.tau, verts, edges, simp, stats)


def build_ball(oracle: Oracle, radius: int, max_dim: int = DEFAULT_MAX_DIM, cap_vertices: int = DEFAULT_VERTEX_CAP):
    """All cosets with representatives of length <= ``radius`` and every simplex
    of dimension <= ``max_dim`` among them (clique extension with a fresh
    exact test per candidate; flagness is never assumed)."""
    if not oracle.capabilities.exact_intersection:
        raise CapabilityError(f"{oracle.kind} oracle has no exact intersection test")
    verts = oracle.enumerate_cosets(radius, cap_vertices)
    test = oracle.verified_intersection
    return _assemble(oracle, radius, verts, max_dim, lambda cs: test(cs))


def build_ktau(oracle: Oracle, radius: int, tau: int, max_dim: int = DEFAULT_MAX_DIM,
               cap_vertices: int = DEFAULT_VERTEX_CAP):
    """Ball of the complex whose simplices have unbounded (infinite)
    ``tau``-neighbourhood intersections.  Free-group pairs only.

    The stored witness of a simplex is the witness of the ordinary
    conjugate intersection, or ``None`` if that intersection is finite
    (which would contradict the subcomplex property and is reported).
    """
    if not oracle.capabilities.ktau_supported or not isinstance(oracle, FreeOracle):
        raise CapabilityError(f"tau-filtered complexes are unsupported for {oracle.kind} pairs")
    verts = oracle.enumerate_cosets(radius, cap_vertices)
    nbhd = {}

    def automaton(c):
        a = nbhd.get(c)
        if a is None:
            a = nbhd[c] = rational.neighborhood(oracle.cores[c.peripheral], c.rep, tau)
        return a

    def test(cs):
        if len(cs) == 2 and oracle.coset_distance(cs[0], cs[1]) > 2 * tau:
            return False, None
        inter = rational.intersect_all([automaton(c) for c in cs])
        if not inter.is_infinite():
            return False, None
        ok, w = oracle.infinite_intersection(cs)
        return True, (w if ok else None)

    ball = _assemble(oracle, radius, verts, max_dim, test)
    ball.tau = tau
    return ball


def _assemble(oracle, radius, verts, max_dim, test):
    n = len(verts)
    pairs = list(combinations(range(n), 2))
    results = parallel_map(lambda uv: test([verts[uv[0]], verts[uv[1]]]), pairs)
    edges = {uv: w for uv, (ok, w) in zip(pairs, results) if ok}
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    simplices = {}
    if edges and max_dim >= 1:
        simplices[1] = dict(edges)
    capped = False
    d = 1
    while d < max_dim and simplices.get(d):
        cands = []
        level = simplices[d]
        for s in sorted(level):
            common = set.intersection(*(adj[v] for v in s))
            for v in sorted(common):
                if v <= s[-1]:
                    continue
                t = s + (v,)
                if all(t[:k] + t[k + 1:] in level for k in range(len(t))):
                    cands.append(t)
        results = parallel_map(lambda t: test([verts[i] for i in t]), cands)
        nxt = {t: w for t, (ok, w) in zip(cands, results) if ok}
        if not nxt:
            break
        simplices[d + 1] = nxt
        d += 1
    if simplices.get(max_dim):
        capped = True
    return ComplexBall(oracle, radius, verts, edges, simplices, max_dim, None, capped)


def verify_witnesses(ball: ComplexBall):
    """Indices of edges and simplices whose witness fails an independent membership check."""
    o = ball.oracle
    bad = []
    for d, level in ball.simplices.items():
        for s, w in level.items():
            if w is None or o.is_trivial(w) or not all(o.in_conjugate(ball.vertices[i], w) for i in s):
                bad.append(s)
    return bad


def clique_and_dimension_stats(ball: ComplexBall) -> dict:
    counts = {0: len(ball.vertices)}
    for d, level in ball.simplices.items():
        counts[d] = len(level)
    top = ball.max_simplex()
    g = ball.graph()
    if ball.vertices:
        clique = max(nx.find_cliques(g), key=lambda c: (len(c), sorted(c)))
        clique = sorted(clique)
    else:
        clique = []
    return {
        "vertices": len(ball.vertices),
        "edges": len(ball.edges),
        "max_simplex_cardinality": len(top),
        "max_simplex_vertices": list(top),
        "max_clique_cardinality": len(clique),
        "max_clique_vertices": clique,
        "simplex_counts": {str(d): counts[d] for d in sorted(counts)},
    }


def connectivity(ball_or_graph) -> dict:
    """Component census of the 1-skeleton.  A disconnected ball only says the
    slice is not connected at this radius."""
    g = ball_or_graph.graph() if isinstance(ball_or_graph, ComplexBall) else ball_or_graph
    comps = sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: (-len(c), c))
    return {
        "components": len(comps),
        "sizes": [len(c) for c in comps],
        "connected": len(comps) == 1,
        "isolated": sum(1 for c in comps if len(c) == 1),
        "note": "connected at this radius" if len(comps) == 1 else "not connected at this radius",
    }


def edge_orbit_census(ball: ComplexBall) -> dict:
    """Group ball edges into orbits under the group action and estimate the fence
    constant as the largest coset distance over ball edges."""
    o = ball.oracle
    orbits = {}
    fence = 0
    for (u, v) in sorted(ball.edges):
        c1, c2 = ball.vertices[u], ball.vertices[v]
        key = o.edge_orbit_key(c1, c2)
        orbits.setdefault(key, []).append((u, v))
        fence = max(fence, o.coset_distance(c1, c2))
    reps = [
        {"peripherals": [k[0], k[1]], "double_coset": o.format(k[3]), "edges": len(es), "example": list(es[0])}
        for k, es in sorted(orbits.items())
    ]
    return {
        "orbits": len(orbits),
        "representatives": reps,
        "fence_estimate": fence,
        "exact_distances": o.capabilities.exact_coset_distance,
    }


# -- coned-off Cayley graphs --------------------------------------------------------


def build_coned_off(oracle: Oracle, radius: int, relative_generators=(), extended: bool = False,
                    cap_vertices: int = DEFAULT_VERTEX_CAP) -> "GraphExport":
    """Ball of the coned-off Cayley graph: group elements of length <= ``radius``,
    the peripheral cosets through them, edges ``{g, gs}`` for relative
    generators ``s`` and ``{g, gP}``; with ``extended`` also the edges of
    the coset complex among the coset vertices."""
    rel = [tuple(s) for s in relative_generators]
    if not rel and not oracle.peripherals_generate():
        raise ConfigError(["empty relative generating set but the peripheral subgroups do not generate the group"])
    elements = ball_enumerate(oracle.group, radius, cap_vertices)
    index = {oracle.key(g): i for i, g in enumerate(elements)}
    verts = [{"id": i, "kind": "element", "label": oracle.format(g)} for i, g in enumerate(elements)]
    cosets = {}
    edges = set()
    for i, g in enumerate(elements):
        for s in rel:
            for t in (s, inverse(s)):
                j = index.get(oracle.key(tuple(g) + t))
                if j is not None and j != i:
                    edges.add((min(i, j), max(i, j), ""))
        for p in range(oracle.n_peripherals):
            c = oracle.canonical_coset(p, g)
            if c not in cosets:
                cosets[c] = None
    coset_list = sorted(cosets, key=CosetId.sort_key)
    base = len(elements)
    cidx = {c: base + k for k, c in enumerate(coset_list)}
    if len(elements) + len(coset_list) > cap_vertices:
        raise ResourceError(f"coned-off ball exceeds vertex cap {cap_vertices}")
    for c in coset_list:
        verts.append({"id": cidx[c], "kind": "coset", "label": oracle.coset_label(c)})
    for i, g in enumerate(elements):
        for p in range(oracle.n_peripherals):
            edges.add((i, cidx[oracle.canonical_coset(p, g)], ""))
    if extended:
        pairs = list(combinations(coset_list, 2))
        res = parallel_map(lambda cc: oracle.verified_intersection(list(cc)), pairs)
        for (c1, c2), (ok, w) in zip(pairs, res):
            if ok:
                a, b = sorted((cidx[c1], cidx[c2]))
                edges.add((a, b, oracle.format(w)))
    edge_list = [{"u": u, "v": v, "witness": w} for u, v, w in sorted(edges)]
    g = nx.Graph()
    g.add_nodes_from(v["id"] for v in verts)
    g.add_edges_from((e["u"], e["v"]) for e in edge_list)
    stats = {
        "elements": len(elements),
        "cosets": len(coset_list),
        "edges": len(edge_list),
        "extended": extended,
        "relative_generators": [oracle.format(s) for s in rel],
        "coset_diameter": _coset_diameter(g, [cidx[c] for c in coset_list]),
    }
    meta = oracle.describe()
    return GraphExport(meta, radius, None, verts, edge_list, [], stats)


def _coset_diameter(g, nodes):
    """Largest graph distance between coset vertices, ``None`` if some pair is disconnected."""
    best = 0
    for v in nodes:
        d = nx.single_source_shortest_path_length(g, v)
        if any(u not in d for u in nodes):
            return None
        best = max(best, max(d[u] for u in nodes))
    return best


# -- extension graphs ---------------------------------------------------------------


@dataclass
class ExtensionBall:
    graph_def: DefiningGraph
    radius: int
    vertices: list  # (generator, coset rep of g<Star(v)>)
    edges: list

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(len(self.vertices)))
        g.add_edges_from(self.edges)
        return g

    def conjugate(self, i):
        v, g = self.vertices[i]
        return nf_raag(self.graph_def, tuple(g) + (v + 1,) + inverse(g))

    def to_export(self, alphabet) -> "GraphExport":
        verts = []
        for i, (v, g) in enumerate(self.vertices):
            name = alphabet.names[v]
            label = name if not g else f"{name}^({alphabet.format(g)})"
            verts.append({"id": i, "label": label, "generator": name, "rep": alphabet.format(g)})
        edges = [{"u": u, "v": v, "witness": ""} for u, v in sorted(self.edges)]
        g = self.graph()
        stats = {"vertices": len(verts), "edges": len(edges), "components": nx.number_connected_components(g)}
        meta = {"group": "raag", "vertices": list(alphabet.names),
                "edges": [[alphabet.names[a], alphabet.names[b]] for a, b in self.graph_def.sorted_edges()]}
        return GraphExport(meta, self.radius, None, verts, edges, [], stats)


def _retraction_key(graph: DefiningGraph, g, keep):
    """Normal form of the image of ``g`` under the retraction onto ``<keep>``."""
    return nf_raag(graph, tuple(x for x in g if abs(x) - 1 in keep))


def build_extension_graph(graph: DefiningGraph, radius: int, cap_vertices: int = DEFAULT_VERTEX_CAP,
                          exhaustive: bool = False) -> ExtensionBall:
    """Ball of the extension graph: conjugates ``v^g`` for ``g`` of length <=
    ``radius``, identified when ``g<Star(v)>`` agree, joined when they commute.

    Commuting conjugates ``x^g, y^h`` need ``x, y`` adjacent in the defining
    graph and ``g<Star x>``, ``h<Star y>`` to meet, so candidate pairs are
    bucketed by the retraction killing ``Star x ∪ Star y``; the commutation
    test then decides.  ``exhaustive`` tests every pair instead.
    """
    group = RAAG(graph)
    elements = ball_enumerate(group, radius, cap_vertices * max(1, graph.n))
    from .words import strip_parabolic_tail

    seen = {}
    for g in elements:
        for v in range(graph.n):
            rep = strip_parabolic_tail(graph, g, graph.star(v))[0]
            seen.setdefault((v, rep), None)
    verts = sorted(seen, key=lambda k: (shortlex_key(k[1]), k[0]))
    if len(verts) > cap_vertices:
        raise ResourceError(f"extension graph ball exceeds vertex cap {cap_vertices}")
    conj = [nf_raag(graph, tuple(g) + (v + 1,) + inverse(g)) for v, g in verts]
    edges = []
    if exhaustive:
        for i, j in combinations(range(len(verts)), 2):
            if commutes(graph, conj[i], conj[j]):
                edges.append((i, j))
        return ExtensionBall(graph, radius, verts, edges)
    by_label = {}
    for i, (v, g) in enumerate(verts):
        by_label.setdefault(v, []).append(i)
    for x, y in graph.sorted_edges():
        keep = frozenset(range(graph.n)) - graph.star(x) - graph.star(y)
        buckets = {}
        for j in by_label.get(y, []):
            buckets.setdefault(_retraction_key(graph, verts[j][1], keep), []).append(j)
        for i in by_label.get(x, []):
            for j in buckets.get(_retraction_key(graph, verts[i][1], keep), []):
                if commutes(graph, conj[i], conj[j]):
                    edges.append((min(i, j), max(i, j)))
    edges.sort()
    return ExtensionBall(graph, radius, verts, edges)


# -- export ------------------------------------------------------------------------


@dataclass
class GraphExport:
    pair: dict
    radius: int
    tau: int | None
    vertices: list
    edges: list
    simplices: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    version: int = EXPORT_VERSION

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "pair": self.pair,
            "radius": self.radius,
            "tau": self.tau,
            "vertices": self.vertices,
            "edges": self.edges,
            "simplices": self.simplices,
            "stats": self.stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GraphExport":
        d = json.loads(text)
        return cls(d["pair"], d["radius"], d["tau"], d["vertices"], d["edges"], d["simplices"], d["stats"], d["version"])

    def to_dot(self) -> str:
        lines = ["graph G {"]
        meta = json.dumps({"pair": self.pair, "radius": self.radius, "tau": self.tau}, sort_keys=True, ensure_ascii=False)
        lines.append(f"  // {meta}")
        for v in self.vertices:
            shape = ' shape="box"' if v.get("kind") == "coset" else ""
            lines.append(f'  {v["id"]} [label="{_dot_escape(v["label"])}"{shape}];')
        for e in self.edges:
            w = f' [label="{_dot_escape(e["witness"])}"]' if e.get("witness") else ""
            lines.append(f'  {e["u"]} -- {e["v"]}{w};')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dot_escape(s):
    return str(s).replace("\\", "\\\\").replace('"', '\\"')


def export(obj, fmt: str = "json") -> str:
    """Serialize a ball, extension ball or :class:`GraphExport` as JSON or DOT."""
    if isinstance(obj, ComplexBall):
        obj = obj.to_export()
    elif isinstance(obj, ExtensionBall):
        obj = obj.to_export(RAAG(obj.graph_def).alphabet)
    if fmt == "json":
        return obj.to_json()
    if fmt == "dot":
        return obj.to_dot()
    raise ValueError(f"unknown export format {fmt!r}")


def star_oracle(graph: DefiningGraph, alphabet=None) -> RAAGOracle:
    """The RAAG pair whose peripherals are the star subgroups ``<Star(v)>``."""
    names = None
    if alphabet is not None:
        names = [f"<Star({alphabet.names[v]})>" for v in range(graph.n)]
    else:
        a = RAAG(graph).alphabet
        names = [f"<Star({a.names[v]})>" for v in range(graph.n)]
    return RAAGOracle(graph, star_subsets(graph), alphabet, names)
