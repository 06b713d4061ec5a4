"""Run configuration: TOML text to a validated ``RunConfig`` and back.

Grammar (all keys optional unless noted)::

    command = "build-complex"      # required
    radius = 3
    tau = 1
    max_dim = 6
    seed = 0                       # required for sampling commands
    samples = 200
    cap_vertices = 100000
    out = "out"
    format = "json"                # json | dot
    relative_generators = ["x"]    # coned-off
    extended = false               # coned-off
    target = "extension"           # delta: extension | complex

    [pair]                         # required
    group = "free"                 # free | raag | lattice | bs | product
    generators = ["x", "y"]        # free, lattice: names (or rank = n)
    peripherals = [["x"], ["y x y^-1"]]

For ``raag`` give ``vertices`` and ``edges`` (pairs of names); peripherals
are lists of vertex names, or ``"maximal-standard-abelian"`` / ``"stars"``.
For ``lattice`` peripherals are lists of integer vectors.  For ``bs`` give
``k`` and peripherals among ``"t"``, ``"a"``.  For ``product`` give
``[pair.left]``, ``[pair.right]`` and peripherals as two-element lists whose
entries are a factor peripheral index, ``"all"`` or ``"trivial"``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, CosetcError, MalformedWordError
from .oracles import (
    ALL,
    TRIVIAL,
    BSOracle,
    FreeOracle,
    LatticeOracle,
    Oracle,
    ProductOracle,
    RAAGOracle,
    maximal_standard_abelians,
    star_subsets,
)
from .words import Alphabet, DefiningGraph, free_reduce

COMMANDS = (
    "build-complex", "ktau", "coned-off", "extension-graph", "height", "width-lower-bound",
    "malnormal", "core", "packing", "fence", "qi-chain", "delta",
)
SAMPLING = ("core", "qi-chain", "delta")
RAAG_ONLY = ("extension-graph", "core", "qi-chain")
FREE_ONLY = ("ktau", "height", "malnormal")
TOP_KEYS = {
    "command", "radius", "tau", "max_dim", "seed", "samples", "cap_vertices", "out", "format",
    "relative_generators", "extended", "target", "pair",
}
PAIR_KEYS = {
    "free": {"group", "generators", "rank", "peripherals"},
    "raag": {"group", "vertices", "edges", "peripherals"},
    "lattice": {"group", "generators", "rank", "peripherals"},
    "bs": {"group", "k", "peripherals"},
    "product": {"group", "left", "right", "peripherals"},
}


@dataclass
class RunConfig:
    command: str
    pair: dict
    radius: int = 2
    tau: int = 0
    max_dim: int = 6
    seed: int | None = None
    samples: int = 200
    cap_vertices: int = 100_000
    out: str | None = None
    format: str = "json"
    relative_generators: list = field(default_factory=list)
    extended: bool = False
    target: str = "extension"

    def to_dict(self) -> dict:
        d = {
            "command": self.command, "radius": self.radius, "tau": self.tau, "max_dim": self.max_dim,
            "samples": self.samples, "cap_vertices": self.cap_vertices, "format": self.format,
            "extended": self.extended, "target": self.target, "pair": self.pair,
        }
        if self.seed is not None:
            d["seed"] = self.seed
        if self.out is not None:
            d["out"] = self.out
        if self.relative_generators:
            d["relative_generators"] = list(self.relative_generators)
        return d


def emit(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate; raises ``ConfigError`` listing every problem found."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax: {exc}"]) from None
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    errors = []
    for k in sorted(set(raw) - TOP_KEYS):
        errors.append(f"unknown key {k!r}")
    command = raw.get("command")
    if command is None:
        errors.append("missing key 'command'")
    elif command not in COMMANDS:
        errors.append(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    ints = {"radius": 0, "tau": 0, "max_dim": 1, "samples": 1, "cap_vertices": 1}
    for k, lo in ints.items():
        if k in raw and (not isinstance(raw[k], int) or isinstance(raw[k], bool) or raw[k] < lo):
            errors.append(f"{k} must be an integer >= {lo}")
    if "seed" in raw and (not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool)):
        errors.append("seed must be an integer")
    if command in SAMPLING and "seed" not in raw:
        errors.append(f"command {command!r} samples and needs a seed")
    if raw.get("format", "json") not in ("json", "dot"):
        errors.append("format must be 'json' or 'dot'")
    if raw.get("target", "extension") not in ("extension", "complex"):
        errors.append("target must be 'extension' or 'complex'")
    if "extended" in raw and not isinstance(raw["extended"], bool):
        errors.append("extended must be a boolean")
    pair = raw.get("pair")
    if not isinstance(pair, dict):
        errors.append("missing table [pair]")
    else:
        pair_errors = validate_pair(pair)
        errors.extend(pair_errors)
        kind = pair.get("group")
        if command in RAAG_ONLY and kind != "raag":
            errors.append(f"command {command!r} needs a raag pair")
        if command in FREE_ONLY and kind != "free":
            errors.append(f"command {command!r} needs a free pair")
        if command in RAAG_ONLY and kind == "raag" and not pair_errors:
            graph, _ = raag_graph(pair)
            if not graph.triangle_free():
                errors.append(f"command {command!r} needs a triangle-free defining graph; the graph has a triangle")
            if command != "extension-graph":
                if graph.min_valence() < 2:
                    errors.append(f"command {command!r} needs every vertex of valence >= 2")
                if not graph.connected():
                    errors.append(f"command {command!r} needs a connected defining graph")
    if errors:
        raise ConfigError(errors)
    kw = {k: raw[k] for k in TOP_KEYS - {"command", "pair"} if k in raw}
    cfg = RunConfig(command=command, pair=pair, **kw)
    try:
        build_oracle(pair)
    except CosetcError as exc:
        raise ConfigError([str(exc)]) from None
    return cfg


def _names(pair):
    if "generators" in pair:
        return list(pair["generators"])
    if "rank" in pair:
        return Alphabet.default(pair["rank"]).names
    return None


def validate_pair(pair, where="pair") -> list:
    errors = []
    kind = pair.get("group")
    if kind not in PAIR_KEYS:
        return [f"{where}.group must be one of {', '.join(PAIR_KEYS)}"]
    for k in sorted(set(pair) - PAIR_KEYS[kind]):
        errors.append(f"unknown key {where}.{k!r} for group {kind!r}")
    periph = pair.get("peripherals")
    if periph is None:
        errors.append(f"missing {where}.peripherals")
    if kind in ("free", "lattice"):
        names = _names(pair)
        if names is None:
            errors.append(f"{where} needs 'generators' or 'rank'")
            return errors
        try:
            alpha = Alphabet(names)
        except MalformedWordError as exc:
            return errors + [f"{where}.generators: {exc}"]
        if isinstance(periph, list):
            for i, gens in enumerate(periph):
                if not isinstance(gens, list) or not gens:
                    errors.append(f"{where}.peripherals[{i}] must be a nonempty list")
                    continue
                trivial = True
                if kind == "free":
                    for w in gens:
                        try:
                            trivial = trivial and not free_reduce(alpha.parse(w), alpha.rank)
                        except MalformedWordError as exc:
                            errors.append(f"{where}.peripherals[{i}]: {exc}")
                            trivial = False
                else:
                    for v in gens:
                        if not (isinstance(v, list) and len(v) == alpha.rank and all(isinstance(c, int) for c in v)):
                            errors.append(f"{where}.peripherals[{i}]: vector {v!r} must have {alpha.rank} integers")
                            trivial = False
                        elif any(v):
                            trivial = False
                if trivial:
                    errors.append(f"{where}.peripherals[{i}] is the trivial subgroup; peripherals must be infinite")
    elif kind == "raag":
        verts = pair.get("vertices")
        if not isinstance(verts, list) or not verts:
            return errors + [f"{where}.vertices must be a nonempty list of names"]
        try:
            Alphabet(verts)
        except MalformedWordError as exc:
            return errors + [f"{where}.vertices: {exc}"]
        for e in pair.get("edges", []):
            if not (isinstance(e, list) and len(e) == 2 and all(x in verts for x in e)) or (len(e) == 2 and e[0] == e[1]):
                errors.append(f"{where}.edges: bad edge {e!r}")
        if errors:
            return errors
        graph, _ = raag_graph(pair)
        if isinstance(periph, list):
            for i, s in enumerate(periph):
                if not isinstance(s, list) or not s or any(x not in verts for x in s):
                    errors.append(f"{where}.peripherals[{i}] must be a nonempty list of vertex names")
                    continue
                idx = [verts.index(x) for x in s]
                complete = all(graph.adjacent(u, v) for u in idx for v in idx if u != v)
                if len(idx) >= 2 and complete and not graph.triangle_free():
                    errors.append(f"{where}.peripherals[{i}]: abelian peripheral given explicitly but the graph has a triangle")
        elif periph is not None and periph not in ("maximal-standard-abelian", "stars"):
            errors.append(f"{where}.peripherals must be a list, 'maximal-standard-abelian' or 'stars'")
        if periph == "maximal-standard-abelian" and not graph.edges:
            errors.append(f"{where}: graph has no edges, so there are no maximal standard abelian subgroups of rank 2")
    elif kind == "bs":
        k = pair.get("k")
        if not isinstance(k, int) or k < 2:
            errors.append(f"{where}.k must be an integer >= 2")
        if isinstance(periph, list):
            for p in periph:
                if p not in ("t", "a"):
                    errors.append(f"{where}.peripherals: {p!r} is neither 't' nor 'a'")
    elif kind == "product":
        for side in ("left", "right"):
            sub = pair.get(side)
            if not isinstance(sub, dict):
                errors.append(f"missing table [{where}.{side}]")
            elif sub.get("group") == "product":
                errors.append(f"{where}.{side}: nested products are not supported")
            else:
                errors.extend(validate_pair(sub, f"{where}.{side}"))
        if isinstance(periph, list):
            for i, p in enumerate(periph):
                if not (isinstance(p, list) and len(p) == 2):
                    errors.append(f"{where}.peripherals[{i}] must be [left, right]")
                elif p == [TRIVIAL, TRIVIAL]:
                    errors.append(f"{where}.peripherals[{i}] is the trivial subgroup; peripherals must be infinite")
    return errors


def raag_graph(pair):
    verts = list(pair["vertices"])
    edges = [(verts.index(a), verts.index(b)) for a, b in pair.get("edges", [])]
    return DefiningGraph.from_edges(len(verts), edges), Alphabet(verts)


def build_oracle(pair: dict) -> Oracle:
    kind = pair["group"]
    if kind == "free":
        alpha = Alphabet(_names(pair))
        gens = [[alpha.parse(w) for w in ws] for ws in pair["peripherals"]]
        return FreeOracle(alpha.rank, gens, alpha)
    if kind == "lattice":
        alpha = Alphabet(_names(pair))
        return LatticeOracle(alpha.rank, pair["peripherals"], alpha)
    if kind == "raag":
        graph, alpha = raag_graph(pair)
        periph = pair["peripherals"]
        if periph == "maximal-standard-abelian":
            subsets, names = maximal_standard_abelians(graph), None
        elif periph == "stars":
            subsets = star_subsets(graph)
            names = [f"<Star({alpha.names[v]})>" for v in range(graph.n)]
        else:
            subsets, names = [[alpha.index[x] for x in s] for s in periph], None
        return RAAGOracle(graph, subsets, alpha, names)
    if kind == "bs":
        return BSOracle(pair["k"], tuple(pair["peripherals"]))
    if kind == "product":
        left = build_oracle(pair["left"])
        right = build_oracle(pair["right"])
        specs = [tuple(x if x in (ALL, TRIVIAL) else int(x) for x in p) for p in pair["peripherals"]]
        return ProductOracle(left, right, specs)
    raise ConfigError([f"unknown group {kind!r}"])
