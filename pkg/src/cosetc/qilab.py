"""Checks of the RAAG constructions and quasi-isometry chain on finite instances.

Nothing here proves anything: each function builds a finite slice, tests the
relevant property on it and records what was checked.  Reports follow the
schema ``{check, pair, params, seed, verdict, evidence}``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from . import rational
from .complex import ComplexBall, build_ball, build_coned_off, build_extension_graph, star_oracle
from .errors import CapabilityError, PreconditionError
from .oracles import CosetId, FreeOracle, Oracle, RAAGOracle, double_coset_strip, maximal_standard_abelians, raag_simplex_test
from .stallings import malnormal_collection_certificate
from .words import RAAG, DefiningGraph, inverse, is_in_parabolic, nf_raag, shortlex_key

L_GRID = (1.0, 1.5, 2.0, 3.0, 4.0)


def report(check, pair, params, seed, verdict, evidence):
    return {"check": check, "pair": pair, "params": params, "seed": seed, "verdict": verdict, "evidence": evidence}


def require_hypotheses(graph: DefiningGraph):
    bad = []
    if not graph.connected():
        bad.append("defining graph is not connected")
    if not graph.triangle_free():
        bad.append("defining graph has a triangle")
    if graph.min_valence() < 2:
        bad.append("defining graph has a vertex of valence < 2")
    if bad:
        raise CapabilityError("; ".join(bad))


def parabolic_ball(graph: DefiningGraph, subset, radius):
    """Elements of ``<subset>`` of length <= ``radius`` as normal forms, shortlex order."""
    gens = [x for v in sorted(subset) for x in (v + 1, -(v + 1))]
    seen = {(): None}
    frontier = [()]
    out = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for x in gens:
                u = nf_raag(graph, w + (x,))
                if u not in seen:
                    seen[u] = None
                    nxt.append(u)
        nxt.sort(key=shortlex_key)
        out.extend(nxt)
        frontier = nxt
    return out


# -- commensurated core of a RAAG ----------------------------------------------------


def maximal_simplex_slice(oracle: RAAGOracle, g, a: int, radius: int):
    """Cosets ``g w <a, c>`` for ``w`` in the ``radius``-ball of ``<Star(a)>`` and
    ``c`` in ``Link(a)``; canonical, deduplicated and sorted."""
    graph = oracle.graph
    require_hypotheses(graph)
    index = {s: k for k, s in enumerate(oracle.subsets)}
    out = set()
    for w in parabolic_ball(graph, graph.star(a), radius):
        for c in sorted(graph.link(a)):
            p = index.get(frozenset((a, c)))
            if p is None:
                raise PreconditionError("slice needs the maximal standard abelian peripherals")
            out.add(oracle.canonical_coset(p, tuple(g) + w))
    return sorted(out, key=CosetId.sort_key)


def in_slice(oracle: RAAGOracle, g, a: int, c: CosetId) -> bool:
    """Membership in the full (infinite) slice through ``g`` with axis ``a``."""
    if a not in oracle.subsets[c.peripheral]:
        return False
    return is_in_parabolic(oracle.graph, inverse(tuple(g)) + c.rep, oracle.graph.star(a))


@dataclass
class CoreReport:
    subgroups: list
    records: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r["ok"] for r in self.records)


def star_core(graph: DefiningGraph, radius: int = 1, samples: int = 20, seed: int = 0, alphabet=None) -> CoreReport:
    """The star subgroups, with a check that each stabilizes its slice.

    For every generator ``a``: sampled elements of ``<Star(a)>`` map the slice
    through the identity into itself, and sampled non-members move its base
    vertex out of it.
    """
    require_hypotheses(graph)
    group = RAAG(graph, alphabet)
    names = group.alphabet.names
    oracle = RAAGOracle(graph, maximal_standard_abelians(graph), group.alphabet)
    rng = random.Random(seed)
    subgroups = [[names[v] for v in sorted(graph.star(v0))] for v0 in range(graph.n)]
    rep = CoreReport(subgroups)
    for a in range(graph.n):
        sl = maximal_simplex_slice(oracle, (), a, radius)
        star = sorted(graph.star(a))
        members, outsiders = [], []
        for _ in range(samples):
            h = tuple(rng.choice([v + 1, -(v + 1)]) for v in rng.choices(star, k=rng.randint(1, 4)))
            members.append(nf_raag(graph, h))
            w = tuple(rng.choice([v + 1, -(v + 1)]) for v in rng.choices(range(graph.n), k=rng.randint(1, 4)))
            if not is_in_parabolic(graph, w, graph.star(a)):
                outsiders.append(nf_raag(graph, w))
        stay = all(in_slice(oracle, (), a, oracle.translate(h, c)) for h in members for c in sl)
        move = all(not in_slice(oracle, (), a, oracle.translate(w, sl[0])) for w in outsiders)
        rep.records.append({
            "generator": names[a],
            "slice_size": len(sl),
            "members_tested": len(members),
            "non_members_tested": len(outsiders),
            "members_preserve_slice": stay,
            "non_members_move_slice": move,
            "ok": stay and move,
        })
    return rep


# -- the map from maximal abelian cosets to star cosets --------------------------------


def vertex_axis(oracle: RAAGOracle, c: CosetId) -> int:
    return min(oracle.subsets[c.peripheral])


def edge_axis(oracle: RAAGOracle, c1: CosetId, c2: CosetId):
    """The generator ``v`` witnessing an edge (shared, with ``g1^-1 g2`` in ``<Star(v)>``)."""
    ok, v, _ = raag_simplex_test(oracle.graph, [(c1.rep, oracle.subsets[c1.peripheral]),
                                                 (c2.rep, oracle.subsets[c2.peripheral])])
    return v if ok else None


def map_P_to_Q(ball: ComplexBall, qoracle: RAAGOracle | None = None, samples: int = 20, seed: int = 0):
    """Send ``g<a,b>`` to ``g<Star(min(a,b))>`` and each edge to its axis coset.

    Checks that images of ball simplices span simplices of the star complex
    and that the vertex map commutes with sampled left translations.
    """
    po = ball.oracle
    if not isinstance(po, RAAGOracle):
        raise CapabilityError("map_P_to_Q needs a RAAG pair")
    graph = po.graph
    qo = qoracle or star_oracle(graph, po.group.alphabet)

    def image(c):
        return qo.canonical_coset(vertex_axis(po, c), c.rep)

    vmap = {i: image(c) for i, c in enumerate(ball.vertices)}
    edge_images = {}
    violations = []
    for (u, v) in sorted(ball.edges):
        ax = edge_axis(po, ball.vertices[u], ball.vertices[v])
        edge_images[(u, v)] = qo.canonical_coset(ax, ball.vertices[u].rep)
    for s in ball.simplex_list():
        imgs = sorted({vmap[i] for i in s}, key=CosetId.sort_key)
        if len(imgs) > 1 and not qo.infinite_intersection(imgs)[0]:
            violations.append(list(s))
    rng = random.Random(seed)
    equiv_fail = []
    for _ in range(samples):
        g = tuple(rng.choice([1, -1]) * rng.randint(1, graph.n) for _ in range(rng.randint(1, 3)))
        c = ball.vertices[rng.randrange(len(ball.vertices))]
        lhs = image(po.translate(g, c))
        rhs = qo.translate(g, image(c))
        if lhs != rhs:
            equiv_fail.append((g, c))
    return {
        "vertex_map": vmap,
        "edge_axes": edge_images,
        "simplicial": not violations,
        "violations": violations,
        "equivariant": not equiv_fail,
        "equivariance_samples": samples,
    }


def conedoff_path4(qoracle: RAAGOracle, c1: CosetId, c2: CosetId):
    """Path ``c1 - k - k<Star(x)> - k d - c2`` in the coned-off graph of the stars.

    ``g1^-1 g2 = s d t`` with ``s`` in ``<Star a>``, ``t`` in ``<Star b>`` and
    ``d`` stripped; ``k = g1 s`` and ``x`` is a generator of the intersection.
    Shorter paths are used when ``d`` is trivial or the cosets coincide.
    """
    graph = qoracle.graph
    S1, S2 = qoracle.subsets[c1.peripheral], qoracle.subsets[c2.peripheral]
    h = nf_raag(graph, inverse(c1.rep) + c2.rep)
    s, d, _ = double_coset_strip(graph, h, S1, S2)
    common = [v for v in sorted(S1 & S2) if all(graph.adjacent(v, u) for u in {abs(y) - 1 for y in d})]
    if c1 == c2:
        return [("coset", c1)]
    if not common:
        raise PreconditionError("cosets have finite conjugate intersection; no witness generator")
    k = nf_raag(graph, c1.rep + s)
    if not d:
        path = [("coset", c1), ("element", k), ("coset", c2)]
    else:
        x = common[0]
        xp = qoracle.subsets.index(graph.star(x))
        mid = qoracle.canonical_coset(xp, k)
        kd = nf_raag(graph, k + d)
        path = [("coset", c1), ("element", k), ("coset", mid), ("element", kd), ("coset", c2)]
    if not verify_coned_path(qoracle, path):
        raise AssertionError(f"constructed path failed verification: {path}")
    return path


def verify_coned_path(oracle: Oracle, path) -> bool:
    """Every hop joins a group element to a coset containing it."""
    for (k1, a), (k2, b) in zip(path, path[1:]):
        if {k1, k2} != {"coset", "element"}:
            return False
        c, g = (a, b) if k1 == "coset" else (b, a)
        if oracle.canonical_coset(c.peripheral, g) != c:
            return False
    return True


# -- four-point hyperbolicity -------------------------------------------------------------


def _distance_rows(graph: nx.Graph, sources):
    nodes = list(graph.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    a = nx.to_scipy_sparse_array(graph, nodelist=nodes, format="csr")
    m = csr_matrix(a)
    d = shortest_path(m, method="D", unweighted=True, indices=[index[s] for s in sources])
    return d, index


def four_point_delta(graph: nx.Graph, seed: int = 0, exhaustive_below: int = 200, samples: int = 10**5) -> dict:
    """Largest Gromov four-point defect, exhaustively for small graphs and on
    ``samples`` uniform random quadruples otherwise."""
    n = graph.number_of_nodes()
    if n == 0:
        return {"delta": 0.0, "vertices": 0, "quadruples": 0, "exhaustive": True}
    if not nx.is_connected(graph):
        raise PreconditionError("four-point estimate needs a connected graph")
    if n < exhaustive_below:
        d, _ = _distance_rows(graph, list(graph.nodes))
        best = 0.0
        for x in range(n):
            for y in range(x + 1, n):
                s1 = d[x, y] + d
                s2 = d[x][:, None] + d[y][None, :]
                s3 = d[y][:, None] + d[x][None, :]
                top = np.maximum(np.maximum(s1, s2), s3)
                low = np.minimum(np.minimum(s1, s2), s3)
                mid = s1 + s2 + s3 - top - low
                best = max(best, float((top - mid).max()) / 2)
        return {"delta": best, "vertices": n, "quadruples": n * (n - 1) // 2 * n * n, "exhaustive": True}
    rng = np.random.default_rng(seed)
    quads = rng.integers(0, n, size=(samples, 4))
    nodes = list(graph.nodes)
    needed = np.unique(quads[:, :3])
    pos = np.full(n, -1, dtype=np.int64)
    pos[needed] = np.arange(len(needed))
    rows = np.empty((len(needed), n), dtype=np.int32)
    chunk = 256
    for start in range(0, len(needed), chunk):
        src = needed[start:start + chunk]
        block, _ = _distance_rows(graph, [nodes[i] for i in src])
        rows[start:start + len(src)] = block
    x, y, z, w = quads.T
    s1 = rows[pos[x], y] + rows[pos[z], w]
    s2 = rows[pos[x], z] + rows[pos[y], w]
    s3 = rows[pos[x], w] + rows[pos[y], z]
    top = np.maximum(np.maximum(s1, s2), s3)
    low = np.minimum(np.minimum(s1, s2), s3)
    mid = s1 + s2 + s3 - top - low
    best = float((top - mid).max()) / 2
    return {"delta": best, "vertices": n, "quadruples": samples, "exhaustive": False, "seed": seed}


# -- distortion ----------------------------------------------------------------------------


def additive_constant(dx, dy, L) -> float:
    """Least ``C`` with ``dx/L - C <= dy <= L dx + C`` on every sample."""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    if dx.size == 0:
        return 0.0
    return float(max(0.0, (dy - L * dx).max(), (dx / L - dy).max()))


@dataclass
class DistortionReport:
    pairs: list
    source: list
    target: list
    frontier: list
    L: float
    C: float
    M: float = 0.0

    def holds(self) -> bool:
        return all(
            a / self.L - self.C <= b + 1e-9 and b <= self.L * a + self.C + 1e-9
            for a, b in zip(self.source, self.target)
        )


def fit_distortion(pairs, dx, dy, grid=L_GRID, M=0.0) -> DistortionReport:
    frontier = [(float(L), additive_constant(dx, dy, L)) for L in grid]
    L, C = min(frontier, key=lambda lc: (lc[1], lc[0]))
    return DistortionReport(list(pairs), list(dx), list(dy), frontier, L, C, M)


def qi_chain(graph: DefiningGraph, radius: int, samples: int = 200, seed: int = 0, alphabet=None) -> dict:
    """Sample vertex pairs of the maximal-abelian complex ball and compare their
    distances along the chain: star complex, coned-off graph of the stars,
    extension graph.  A coset ``g<a,b>`` is followed through ``g<Star(a)>``
    (``a = min``) and the conjugate ``a^g``.  Distances are measured inside
    the finite balls, so they over-estimate true distances near the boundary.
    """
    require_hypotheses(graph)
    po = RAAGOracle(graph, maximal_standard_abelians(graph), alphabet)
    qo = star_oracle(graph, po.group.alphabet)
    kp = build_ball(po, radius, max_dim=1)
    kq = build_ball(qo, radius, max_dim=1)
    coned = build_coned_off(qo, radius)
    ext = build_extension_graph(graph, radius)
    qindex = {c: i for i, c in enumerate(kq.vertices)}
    label_to_id = {v["label"]: v["id"] for v in coned.vertices if v["kind"] == "coset"}
    cg = nx.Graph()
    cg.add_nodes_from(v["id"] for v in coned.vertices)
    cg.add_edges_from((e["u"], e["v"]) for e in coned.edges)
    eindex = {key: i for i, key in enumerate(ext.vertices)}
    eg = ext.graph()
    gp = kp.graph()
    gq = kq.graph()

    def image(c):
        a = vertex_axis(po, c)
        q = qo.canonical_coset(a, c.rep)
        return q, (a, q.rep)

    rng = random.Random(seed)
    comp = max(nx.connected_components(gp), key=len)
    nodes = sorted(comp)
    pairs = []
    for _ in range(samples):
        u, v = rng.sample(nodes, 2) if len(nodes) > 1 else (nodes[0], nodes[0])
        pairs.append((u, v))
    dP, dQ, dH, dE = [], [], [], []
    for u, v in pairs:
        qu, eu = image(kp.vertices[u])
        qv, ev = image(kp.vertices[v])
        dP.append(nx.shortest_path_length(gp, u, v))
        dQ.append(_dist(gq, qindex.get(qu), qindex.get(qv)))
        dH.append(_dist(cg, label_to_id.get(qo.coset_label(qu)), label_to_id.get(qo.coset_label(qv))))
        dE.append(_dist(eg, eindex.get(eu), eindex.get(ev)))
    keep = [k for k in range(len(pairs)) if None not in (dQ[k], dH[k], dE[k])]
    pick = lambda xs: [xs[k] for k in keep]
    pairs_k = pick(pairs)
    P, Q, H, E = pick(dP), pick(dQ), pick(dH), pick(dE)
    stages = {
        "P_to_Q": fit_distortion(pairs_k, P, Q),
        "Q_to_coned": fit_distortion(pairs_k, Q, H),
        "coned_to_E": fit_distortion(pairs_k, H, E),
        "P_to_E": fit_distortion(pairs_k, P, E),
    }
    composite = []
    chain = [stages["P_to_Q"], stages["Q_to_coned"], stages["coned_to_E"]]
    L, C = chain[0].L, chain[0].C
    for st in chain[1:]:
        L, C = L * st.L, st.L * C + st.C
    direct = additive_constant(P, E, L)
    composite.append({"L": L, "C_bound": C, "C_observed": direct, "consistent": direct <= C + 1e-9})
    return {
        "samples": len(pairs_k),
        "dropped": len(pairs) - len(pairs_k),
        "stages": {k: {"L": v.L, "C": v.C, "M": v.M, "frontier": v.frontier, "holds": v.holds()} for k, v in stages.items()},
        "composite": composite[0],
    }


def _dist(g, a, b):
    if a is None or b is None:
        return None
    try:
        return nx.shortest_path_length(g, a, b)
    except nx.NetworkXNoPath:
        return None


# -- malnormality, packing ------------------------------------------------------------------


def malnormal_crosscheck(oracle: FreeOracle, radius: int) -> dict:
    """Compare the fiber-product certificate with edge-freeness of the ball."""
    if not isinstance(oracle, FreeOracle):
        raise CapabilityError("malnormality certificates need a free-group pair")
    cert = malnormal_collection_certificate(oracle.cores)
    ball = build_ball(oracle, radius, max_dim=1)
    edgeless = not ball.edges
    agree = cert.malnormal == edgeless
    ev = {
        "certificate": "malnormal" if cert.malnormal else "violation",
        "conjugator": None if cert.conjugator is None else oracle.format(cert.conjugator),
        "pair": None if cert.pair is None else list(cert.pair),
        "witness": None if cert.witness is None else oracle.format(cert.witness),
        "ball_vertices": len(ball.vertices),
        "ball_edges": len(ball.edges),
    }
    return {"agree": agree, "malnormal": cert.malnormal, "edgeless": edgeless, "evidence": ev}


def point_to_coset(oracle: Oracle, x, c: CosetId) -> int:
    """``dist(x, gP)``: length of the minimal element of ``x^-1 g P``."""
    return len(oracle.canonical_coset(c.peripheral, oracle.multiply(inverse(tuple(x)), c.rep)).rep)


def simplex_packing_radius(oracle: Oracle, cosets) -> tuple:
    """Least ``r`` with a point within ``r`` of every coset.

    Exact for free pairs (neighbourhood automata); elsewhere an upper bound
    from the coset representatives as candidate points.  Returns ``(r, exact)``.
    """
    bound = min(max(point_to_coset(oracle, c.rep, d) for d in cosets) for c in cosets)
    if isinstance(oracle, FreeOracle):
        for r in range(bound + 1):
            autos = [rational.neighborhood(oracle.cores[c.peripheral], c.rep, r) for c in cosets]
            if not rational.intersect_all(autos).is_empty():
                return r, True
        return bound, True
    return bound, False


def packing_radius(ball: ComplexBall) -> dict:
    best, where, exact = 0, None, True
    for s in ball.simplex_list():
        r, ex = simplex_packing_radius(ball.oracle, [ball.vertices[i] for i in s])
        exact = exact and ex
        if where is None or r > best:
            best, where = r, list(s)
    return {"radius": best, "exact": exact, "simplex": where, "simplices": len(ball.simplex_list())}
