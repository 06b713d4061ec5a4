"""Command-line entry point: ``cosetc COMMAND --config PATH [flags]``.

Graph-producing commands write ``<command>.<format>`` into ``--out`` (or stdout);
checks print a JSON report.  Failures print ``{"error": ..., "errors": [...]}``
and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, qilab
from .complex import (
    build_ball,
    build_coned_off,
    build_extension_graph,
    build_ktau,
    clique_and_dimension_stats,
    connectivity,
    edge_orbit_census,
)
from .config import COMMANDS, RunConfig, build_oracle, parse_config, raag_graph
from .errors import ConfigError, CosetcError
from .oracles import CosetId
from .stallings import height_exact_free

GRAPH_COMMANDS = ("build-complex", "ktau", "coned-off", "extension-graph")


def _plain(x):
    if isinstance(x, CosetId):
        return {"peripheral": x.peripheral, "rep": list(x.rep)}
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_plain(v) for v in x)
    return x


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def _params(cfg: RunConfig, *keys):
    d = {k: getattr(cfg, k) for k in keys}
    d["version"] = __version__
    return d


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute one command; returns ``(exit status, artifact text)``."""
    oracle = build_oracle(cfg.pair)
    pair = oracle.describe()
    cmd = cfg.command
    if cmd == "build-complex":
        ball = build_ball(oracle, cfg.radius, cfg.max_dim, cfg.cap_vertices)
        return 0, _graph_text(ball.to_export(), cfg)
    if cmd == "ktau":
        ball = build_ktau(oracle, cfg.radius, cfg.tau, cfg.max_dim, cfg.cap_vertices)
        return 0, _graph_text(ball.to_export(), cfg)
    if cmd == "coned-off":
        rel = [oracle.group.alphabet.parse(w) for w in cfg.relative_generators]
        return 0, _graph_text(build_coned_off(oracle, cfg.radius, rel, cfg.extended, cfg.cap_vertices), cfg)
    if cmd == "extension-graph":
        graph, alpha = raag_graph(cfg.pair)
        ext = build_extension_graph(graph, cfg.radius, cfg.cap_vertices)
        return 0, _graph_text(ext.to_export(alpha), cfg)

    if cmd == "height":
        h = height_exact_free(oracle.cores)
        rep = qilab.report("height", pair, _params(cfg), cfg.seed, h.value,
                           [{"height": h.value, "exact": h.exact}])
    elif cmd == "width-lower-bound":
        ball = build_ball(oracle, cfg.radius, cfg.max_dim, cfg.cap_vertices)
        st = clique_and_dimension_stats(ball)
        st["max_clique_cosets"] = [oracle.coset_label(ball.vertices[i]) for i in st["max_clique_vertices"]]
        rep = qilab.report("width-lower-bound", pair, _params(cfg, "radius", "max_dim"), cfg.seed,
                           st["max_clique_cardinality"], [st])
    elif cmd == "malnormal":
        res = qilab.malnormal_crosscheck(oracle, cfg.radius)
        verdict = ("malnormal" if res["malnormal"] else "not malnormal") if res["agree"] else "disagree"
        rep = qilab.report("malnormal", pair, _params(cfg, "radius"), cfg.seed, verdict, [res["evidence"]])
        if not res["agree"]:
            return 1, dumps(rep)
    elif cmd == "core":
        graph, alpha = raag_graph(cfg.pair)
        core = qilab.star_core(graph, radius=max(1, min(cfg.radius, 2)), samples=cfg.samples, seed=cfg.seed, alphabet=alpha)
        rep = qilab.report("core", pair, _params(cfg, "radius", "samples"), cfg.seed,
                           "verified" if core.ok else "failed",
                           [{"subgroups": core.subgroups}] + core.records)
    elif cmd == "packing":
        ball = build_ball(oracle, cfg.radius, cfg.max_dim, cfg.cap_vertices)
        res = qilab.packing_radius(ball)
        if res["simplex"] is not None:
            res["simplex_cosets"] = [oracle.coset_label(ball.vertices[i]) for i in res["simplex"]]
        rep = qilab.report("packing", pair, _params(cfg, "radius", "max_dim"), cfg.seed, res["radius"], [res])
    elif cmd == "fence":
        ball = build_ball(oracle, cfg.radius, 1, cfg.cap_vertices)
        res = edge_orbit_census(ball)
        res["connectivity"] = connectivity(ball)
        rep = qilab.report("fence", pair, _params(cfg, "radius"), cfg.seed, res["fence_estimate"], [res])
    elif cmd == "qi-chain":
        graph, alpha = raag_graph(cfg.pair)
        res = qilab.qi_chain(graph, cfg.radius, cfg.samples, cfg.seed, alpha)
        ok = all(s["holds"] for s in res["stages"].values()) and res["composite"]["consistent"]
        rep = qilab.report("qi-chain", pair, _params(cfg, "radius", "samples"), cfg.seed,
                           "consistent" if ok else "inconsistent", [res])
    elif cmd == "delta":
        if cfg.target == "extension":
            if cfg.pair["group"] != "raag":
                raise ConfigError(["delta with target 'extension' needs a raag pair"])
            graph, _ = raag_graph(cfg.pair)
            g = build_extension_graph(graph, cfg.radius, cfg.cap_vertices).graph()
        else:
            g = build_ball(oracle, cfg.radius, 1, cfg.cap_vertices).graph()
        res = qilab.four_point_delta(g, seed=cfg.seed)
        rep = qilab.report("delta", pair, _params(cfg, "radius", "target"), cfg.seed, res["delta"],
                           [res, {"caveat": "distances measured inside the finite ball"}])
    else:  # pragma: no cover - parse_config rejects unknown commands
        raise ConfigError([f"unknown command {cmd!r}"])
    return 0, dumps(rep)


def _graph_text(exp, cfg):
    return exp.to_json() if cfg.format == "json" else exp.to_dot()


def _error(exc) -> str:
    errors = exc.errors if isinstance(exc, ConfigError) else [str(exc)]
    return dumps({"error": type(exc).__name__, "errors": errors})


def build_parser():
    p = argparse.ArgumentParser(prog="cosetc", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS, help="overrides 'command' in the config")
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument("--out", help="directory for the artifact (default: stdout)")
    p.add_argument("--format", choices=("dot", "json"))
    p.add_argument("--seed", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--tau", type=int)
    p.add_argument("--max-dim", type=int, dest="max_dim")
    p.add_argument("--cap-vertices", type=int, dest="cap_vertices")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in ("command", "out", "format", "seed", "radius", "tau", "max_dim", "cap_vertices")}
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text, overrides)
        status, artifact = run(cfg)
    except ConfigError as exc:
        sys.stdout.write(_error(exc))
        return 2
    except (CosetcError, OSError) as exc:
        sys.stdout.write(_error(exc))
        return 1
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        ext = cfg.format if cfg.command in GRAPH_COMMANDS else "json"
        path = Path(cfg.out) / f"{cfg.command}.{ext}"
        path.write_text(artifact, encoding="utf-8")
    else:
        sys.stdout.write(artifact)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
