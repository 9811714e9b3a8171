import json
import os

import pytest

from gibbslab import config as cfgmod
from gibbslab.cli import EXIT_FAIL, EXIT_HEALTH, EXIT_OK, main

SMALL = """\
# quick config for the command tests
orbit.radius = 8
orbit.target = [0.35, 0.2]
delta.window = [4, 8]
delta.shift_levels = [-0.5, 0.3]
decay.t_grid = [1, 2, 3, 4]
bounded.t_grid = [1, 2, 3, 4]
decay.samples = 4
birkhoff.samples = 4
birkhoff.horizon = 50
bounded.samples = 2
lemma.radius = 8
lemma.samples = 10
lemma.k_samples = 200
rn.min_atoms = 10
rn.arcs = 10
measure.shell = 3
equivariance.radius = 5
cocycle.samples = 3
"""


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.setenv("GIBBSLAB_CACHE_DIR", str(tmp_path / "cache"))
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    return tmp_path, cfg


def test_parse_formats():
    kv = cfgmod.parse_text("a.b = 3\n# comment\n\nc = [1, 2]\nname = octagon\n")
    assert kv == {"a.b": 3, "c": [1, 2], "name": "octagon"}
    js = cfgmod.parse_text('{"orbit": {"radius": 9}, "seed": 4}')
    assert js == {"orbit.radius": 9, "seed": 4}
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.parse_text("no equals sign here")
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.parse_text("{broken")


def test_validate():
    cfg = cfgmod.validate({"orbit.radius": 9})
    assert cfg["orbit.radius"] == 9 and cfg["group.kind"] == "octagon"
    with pytest.raises(cfgmod.ConfigError, match="unknown"):
        cfgmod.validate({"orbit.radis": 9})
    with pytest.raises(cfgmod.ConfigError, match="wrong type"):
        cfgmod.validate({"orbit.radius": "nine"})
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.validate({"seed": True})
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.validate({"group.kind": "torus"})
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.validate({"delta.window": [1, 2, 3]})
    assert cfgmod.config_hash(cfgmod.defaults()) == cfgmod.config_hash(cfgmod.validate({}))


@pytest.mark.parametrize("command", sorted(["enum-orbit", "estimate-delta", "build-measure", "cocycle-check",
                                            "decay-experiment", "lemma-checks", "lambda-estimate"]))
def test_commands_write_outputs(workspace, command, capsys):
    root, cfg = workspace
    out = root / "run"
    code = main([command, "--config", str(cfg), "--out", str(out)])
    text = capsys.readouterr().out
    assert code in (EXIT_OK, EXIT_FAIL)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["command"] == command
    assert (code == EXIT_OK) == summary["passed"]
    assert json.loads((out / "resolved_config.json").read_text())["orbit.radius"] == 8
    for name, ok in summary["verdicts"].items():
        assert f"{'PASS' if ok else 'FAIL'} {name}" in text
    assert not (out / ".lock").exists()
    if command not in ("enum-orbit", "cocycle-check"):
        assert list(out.glob("*.svg"))


def test_determinism(workspace):
    root, cfg = workspace
    for name in ("a", "b"):
        assert main(["decay-experiment", "--config", str(cfg), "--out", str(root / name)]) in (EXIT_OK, EXIT_FAIL)
    for f in ("decay_series.csv", "slopes.csv", "decay.svg"):
        assert (root / "a" / f).read_bytes() == (root / "b" / f).read_bytes()


def test_cache_hit_and_corruption(workspace, capsys):
    root, cfg = workspace
    assert main(["enum-orbit", "--config", str(cfg), "--out", str(root / "one")]) == EXIT_OK
    first = json.loads((root / "one" / "summary.json").read_text())["summary"]
    assert not first["cache_hit"]
    csv_path = first["cache_path"]
    data = open(csv_path, "rb").read()
    assert main(["enum-orbit", "--config", str(cfg), "--out", str(root / "two")]) == EXIT_OK
    second = json.loads((root / "two" / "summary.json").read_text())["summary"]
    assert second["cache_hit"] and open(csv_path, "rb").read() == data
    with open(csv_path, "wb") as fh:
        fh.write(data[: len(data) // 2])
    capsys.readouterr()
    assert main(["enum-orbit", "--config", str(cfg), "--out", str(root / "three")]) == EXIT_HEALTH
    assert "checksum" in capsys.readouterr().err


def test_lock_and_bad_config(workspace):
    root, cfg = workspace
    out = root / "locked"
    out.mkdir()
    (out / ".lock").write_text("12345")
    assert main(["enum-orbit", "--config", str(cfg), "--out", str(out)]) == EXIT_HEALTH
    bad = root / "bad.cfg"
    bad.write_text("orbit.radius = 8\nmystery.key = 1\n")
    assert main(["enum-orbit", "--config", str(bad), "--out", str(root / "x")]) == EXIT_HEALTH


def test_failing_criterion_exit_code(workspace):
    root, cfg = workspace
    strict = root / "strict.cfg"
    strict.write_text(SMALL + "lemma.floor = 0.99\n")
    assert main(["lemma-checks", "--config", str(strict), "--out", str(root / "s")]) == EXIT_FAIL


def test_bump_lambda(workspace):
    root, cfg = workspace
    bump = root / "bump.cfg"
    bump.write_text(SMALL.replace("orbit.radius = 8", "orbit.radius = 7")
                    + "potential.kind = bump-sum\ndelta.window = [4, 7]\n")
    code = main(["lambda-estimate", "--config", str(bump), "--out", str(root / "lam")])
    summary = json.loads((root / "lam" / "summary.json").read_text())
    assert summary["verdicts"]["lambda_agreement"]
    assert summary["summary"]["quadrature_halved_step_change"] < 1e-6
    assert code in (EXIT_OK, EXIT_FAIL)
    assert os.path.exists(root / "lam" / "birkhoff.svg")


def test_small_lemma_radius_is_a_health_error(workspace):
    root, cfg = workspace
    tiny = root / "tiny.cfg"
    tiny.write_text(SMALL.replace("lemma.radius = 8", "lemma.radius = 3"))
    assert main(["lemma-checks", "--config", str(tiny), "--out", str(root / "t")]) == EXIT_HEALTH
