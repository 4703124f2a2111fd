import json

import numpy as np
import pytest

from fblab import cli, container
from fblab.config import ConfigError, parse_config, read_manifest, write_manifest
from fblab.grids import Grid, SpaceTimeField

GOOD = """\
[run]
version = 1
scenario = collapsing_interval
stages = solve,boundary

[grid]
nx = 101
nt = 101

[schedule]
eps_min = 2e-3
stop_tol = 1e-6

[params]
alpha = 0.5
weiss_variant = proof-2x

[output]
out_dir = runs
"""


def test_parse_good_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(GOOD)
    cfg = parse_config(p)
    assert cfg.scenario == "collapsing_interval"
    assert cfg.stages == ("solve", "boundary")
    assert cfg.nx == 101
    assert cfg.eps_min == pytest.approx(2e-3)
    assert cfg.weiss_variant == "proof-2x"


def test_unknown_key_fails_closed(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(GOOD.replace("stop_tol", "stop_tollerance"))
    with pytest.raises(ConfigError) as ei:
        parse_config(p)
    assert "stop_tollerance" in str(ei.value)
    assert ei.value.line is not None


def test_unknown_section_and_scenario(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text(GOOD + "\n[extras]\nfoo = 1\n")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(p)
    p2 = tmp_path / "b.cfg"
    p2.write_text(GOOD.replace("collapsing_interval", "mystery"))
    with pytest.raises(ConfigError, match="unknown scenario"):
        parse_config(p2)


def test_missing_version(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("[run]\nscenario = time_only\n")
    with pytest.raises(ConfigError, match="version"):
        parse_config(p)
    p.write_text("[run]\nversion = 9\nscenario = time_only\n")
    with pytest.raises(ConfigError, match="schema version"):
        parse_config(p)


def test_manifest_roundtrip(tmp_path):
    m = {"a": 1.5, "b": [1, 2, {"c": np.float64(2.25)}],
         "arr": np.arange(3.0)}
    p = write_manifest(m, tmp_path / "m.json")
    back = read_manifest(p)
    assert back["a"] == 1.5
    assert back["b"][2]["c"] == 2.25
    assert back["arr"] == [0.0, 1.0, 2.0]


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(GOOD.replace("eps_min", "eps_mni"))
    rc = cli.main(["run", "--config", str(bad)])
    assert rc == 2
    assert "config error" in capsys.readouterr().err

    rc = cli.main(["list-scenarios"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "collapsing_interval" in out and "time_only" in out


def test_cli_export_roundtrip(tmp_path, capsys):
    g = Grid(1, 0.0, 1.0, 3, 0.0, 1.0, 3)
    u = SpaceTimeField(g, np.arange(9, dtype=float).reshape(3, 3))
    src = container.write_field(u, tmp_path / "f.fbf")
    dst = tmp_path / "f.csv"
    rc = cli.main(["export", str(src), str(dst)])
    assert rc == 0
    assert dst.read_text().startswith("t,x,value")
    rc = cli.main(["export", str(tmp_path / "missing.fbf"), str(dst)])
    assert rc == 3


def test_cli_run_pipeline(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FBLAB_OUT_DIR", str(tmp_path / "runs"))
    rc = cli.main(["run", "--scenario", "time_only", "--nx", "101",
                   "--nt", "201", "--eps-min", "5e-3",
                   "--stages", "solve,boundary"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "solve: ok" in out and "boundary: ok" in out
    man = json.loads((tmp_path / "runs" / "time_only" / "manifest.json")
                     .read_text())
    assert man["ok"]
    # schedule runs carry substep-averaging in the stored-level residual;
    # the sharp 1e-8 claim is for single-eps solves (acceptance criterion 4)
    assert man["stages"]["solve"]["residual_off_interface"] < 0.05


def test_cli_unknown_stage(tmp_path):
    rc = cli.main(["run", "--scenario", "time_only", "--stages", "warp"])
    assert rc == 2
