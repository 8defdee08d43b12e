import json
from pathlib import Path

import pytest
import yaml

from freebnd.cli import main, parse_config
from freebnd.errors import ConfigInvalid

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.yaml"))


def _write(tmp_path, cfg, name="c.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return p


@pytest.mark.parametrize("path", CONFIGS, ids=[p.stem for p in CONFIGS])
def test_shipped_configs_validate(path, capsys):
    assert main(["validate", str(path)]) == 0


def test_every_kind_has_a_config():
    kinds = {yaml.safe_load(p.read_text())["experiment"] for p in CONFIGS}
    assert kinds == {"solve-obstacle", "verify-lds", "expansion-decay", "boundary-harnack", "extension-check",
                     "liouville-fit", "holder-probe"}


def test_missing_kernel_block(tmp_path, capsys):
    p = _write(tmp_path, {"experiment": "liouville-fit", "analysis": {"u": {"tag": "constant"}}})
    assert main(["run", str(p)]) == 2
    assert "kernel" in capsys.readouterr().err


def test_bad_blocks():
    with pytest.raises(ConfigInvalid, match="experiment kind"):
        parse_config({"experiment": "nope"})
    with pytest.raises(ConfigInvalid, match="kernel"):
        parse_config({"experiment": "liouville-fit", "kernel": {"dim": 1, "s": 1.5}, "analysis": {}})
    with pytest.raises(ConfigInvalid, match="solver"):
        parse_config({"experiment": "solve-obstacle", "kernel": {"dim": 1, "s": 0.5},
                      "grid": {"lower": [-1], "upper": [1], "h": 0.1}, "obstacle": {"tag": "constant"},
                      "solver": {"omega": 2.5}})
    with pytest.raises(ConfigInvalid, match="analysis.u"):
        parse_config({"experiment": "liouville-fit", "kernel": {"dim": 1, "s": 0.5},
                      "analysis": {"u": {"tag": "unknown"}}})


def test_nonpositive_obstacle_run(tmp_path):
    cfg = {"experiment": "solve-obstacle", "kernel": {"dim": 1, "s": 0.5},
           "grid": {"lower": [-1.0], "upper": [1.0], "h": 0.0625},
           "obstacle": {"tag": "polynomial", "dim": 1, "terms": [[[0], -0.1], [[2], -1.0]]},
           "solver": {"tol": 1e-10}, "output": {"dir": str(tmp_path / "out")}}
    assert main(["run", str(_write(tmp_path, cfg))]) == 0
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    names = {c["name"]: c["verdict"] for c in rep["checks"]}
    assert names["v identically zero"] == "consistent"
    assert (tmp_path / "out" / "fields" / "v.grid").exists()


def test_violated_check_exit_1(tmp_path):
    cfg = {"experiment": "holder-probe",
           "analysis": {"f": {"tag": "radial-power", "dim": 1, "power": 0.5}, "expected": 0.8},
           "output": {"dir": str(tmp_path / "out")}}
    assert main(["run", str(_write(tmp_path, cfg))]) == 1
    assert json.loads((tmp_path / "out" / "report.json").read_text())["status"] == "violated"


def test_compute_failure_exit_3(tmp_path):
    # L(d^s) on the interval is constant, so its derivative sits below the quadrature noise
    cfg = {"experiment": "verify-lds", "kernel": {"dim": 1, "s": 0.5}, "domain": {"tag": "interval"},
           "analysis": {"j": 1, "levels": [3, 6]}, "output": {"dir": str(tmp_path / "out")}}
    assert main(["run", str(_write(tmp_path, cfg))]) == 3
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert rep["status"] == "compute-failure" and "QuadratureNoiseFloor" in rep["error"]


def test_env_override_and_report(tmp_path, monkeypatch, capsys):
    cfg = {"experiment": "liouville-fit", "kernel": {"dim": 1, "s": 0.3},
           "analysis": {"u": {"tag": "halfspace-power", "dim": 1, "power": 0.3}, "degree": 1},
           "output": {"dir": str(tmp_path / "ignored")}}
    monkeypatch.setenv("FREEBND_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", str(_write(tmp_path, cfg))]) == 0
    assert (tmp_path / "env" / "report.json").exists()
    assert not (tmp_path / "ignored").exists()
    capsys.readouterr()
    assert main(["report", str(tmp_path / "env")]) == 0
    out = capsys.readouterr().out
    assert "liouville-fit" in out and "consistent" in out
    assert main(["report", str(tmp_path / "nowhere")]) == 2


def test_seed_determinism(tmp_path):
    p = Path(__file__).parent.parent / "configs" / "obstacle_1d_oracle.yaml"
    for k in (1, 2):
        assert main(["run", str(p), "--out", str(tmp_path / f"r{k}")]) == 0
    for t in (tmp_path / "r1" / "tables").iterdir():
        assert t.read_bytes() == (tmp_path / "r2" / "tables" / t.name).read_bytes()
