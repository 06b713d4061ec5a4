import json

import pytest

from cosetc.cli import main, run
from cosetc.config import COMMANDS, emit, parse_config
from cosetc.errors import ConfigError

FREE = """
command = "height"
[pair]
group = "free"
generators = ["x", "y"]
peripherals = [["x^2"]]
"""

C4 = """
command = "core"
seed = 1
radius = 1
[pair]
group = "raag"
vertices = ["a", "b", "c", "d"]
edges = [["a", "b"], ["b", "c"], ["c", "d"], ["d", "a"]]
peripherals = "maximal-standard-abelian"
"""

BS = """
command = "build-complex"
radius = 4
[pair]
group = "bs"
k = 2
peripherals = ["t"]
"""

TRIANGLE = """
command = "extension-graph"
[pair]
group = "raag"
vertices = ["a", "b", "c"]
edges = [["a", "b"], ["b", "c"], ["c", "a"]]
peripherals = "stars"
"""

PRODUCT = """
command = "build-complex"
radius = 1
max_dim = 2
[pair]
group = "product"
peripherals = [[0, "all"], ["trivial", 0]]
[pair.left]
group = "free"
rank = 2
peripherals = [["x"]]
[pair.right]
group = "lattice"
generators = ["z"]
peripherals = [[[1]]]
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_minimal_free_config_parses():
    cfg = parse_config(FREE)
    assert cfg.command == "height" and cfg.pair["group"] == "free"


def test_round_trip_is_stable():
    for text in (FREE, C4, BS, PRODUCT):
        once = emit(parse_config(text))
        assert emit(parse_config(once)) == once


def test_triangle_rejected_for_extension_graph():
    with pytest.raises(ConfigError) as err:
        parse_config(TRIANGLE)
    assert any("triangle" in e for e in err.value.errors)


def test_all_errors_reported():
    text = """
command = "nope"
radius = -1
extra = 3
[pair]
group = "free"
generators = ["x", "y"]
peripherals = [["x x^-1"], ["q"]]
"""
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    errs = err.value.errors
    assert any("unknown key 'extra'" in e for e in errs)
    assert any("unknown command" in e for e in errs)
    assert any("radius" in e for e in errs)
    assert any("trivial subgroup" in e for e in errs)
    assert any("peripherals[1]" in e for e in errs)


def test_sampling_command_needs_seed():
    with pytest.raises(ConfigError) as err:
        parse_config(C4.replace("seed = 1\n", ""))
    assert any("seed" in e for e in err.value.errors)


def test_bs_build_complex_edgeless(tmp_path, capsys):
    assert main(["--config", write(tmp_path, BS)]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["edges"] == [] and len(d["vertices"]) > 0


def test_core_on_c4(tmp_path, capsys):
    assert main(["--config", write(tmp_path, C4)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["check"] == "core" and rep["verdict"] == "verified"
    assert len(rep["evidence"][0]["subgroups"]) == 4
    assert set(rep) == {"check", "pair", "params", "seed", "verdict", "evidence"}


def test_height_on_x2(tmp_path, capsys):
    assert main(["--config", write(tmp_path, FREE)]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == 2


def test_error_json_and_exit(tmp_path, capsys):
    assert main(["--config", write(tmp_path, TRIANGLE)]) != 0
    d = json.loads(capsys.readouterr().out)
    assert d["error"] == "ConfigError" and d["errors"]


def test_missing_file(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "absent.toml")]) == 1
    assert json.loads(capsys.readouterr().out)["error"]


@pytest.mark.parametrize("command", COMMANDS)
def test_every_command_runs_deterministically(tmp_path, command):
    if command in ("ktau", "height", "malnormal", "packing", "fence", "width-lower-bound"):
        text = FREE
    elif command == "build-complex":
        text = PRODUCT
    else:
        text = C4
    cfg_path = write(tmp_path, text)
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        args = [command, "--config", cfg_path, "--out", str(out), "--seed", "5", "--radius", "2", "--tau", "1"]
        assert main(args) == 0
        files = sorted(out.iterdir())
        assert len(files) == 1
        outs.append(files[0].read_bytes())
    assert outs[0] == outs[1]


def test_dot_format(tmp_path):
    out = tmp_path / "o"
    assert main(["extension-graph", "--config", write(tmp_path, C4), "--radius", "0", "--format", "dot", "--out", str(out)]) == 0
    text = (out / "extension-graph.dot").read_text()
    assert text.startswith("graph G {") and text.count("--") == 4


def test_run_returns_artifact():
    status, text = run(parse_config(FREE.replace('"height"', '"malnormal"')))
    assert status == 0 and json.loads(text)["verdict"] == "not malnormal"
