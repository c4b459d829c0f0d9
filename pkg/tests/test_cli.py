import json
import math

import numpy as np
import pytest

from helix.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval(capsys):
    code, out, _ = run(capsys, "eval", "--sigma", "0.01", "--theta", "0.5", "--eps", "0.001")
    d = json.loads(out)
    assert code == 0
    assert d["s_value"] == pytest.approx(0.01 * (math.log(100) / math.log(2) + 1), rel=1e-12)
    assert d["regime"] == "branching"


def test_eval_validation_error(capsys):
    code, _, err = run(capsys, "eval", "--sigma", "0.01", "--theta", "0.9")
    assert code == 2 and "theta" in err


def test_construct_uniform_and_save(capsys, tmp_path):
    out_path = tmp_path / "f.npz"
    code, out, _ = run(capsys, "construct", "--kind", "uniform", "--sigma", "0.1", "--theta", "0.25",
                       "--grid-n", "64", "--out", str(out_path))
    d = json.loads(out)
    assert code == 0 and d["admissible"]
    assert d["energies"]["E1"]["total"] == pytest.approx(0.5625)
    z = np.load(out_path)
    assert z["values"].shape == (64, 64, 2)


def test_construct_vortex_regime_refusal(capsys):
    code, _, err = run(capsys, "construct", "--kind", "vortex", "--sigma", "0.3", "--theta", "0.25")
    assert code == 3 and "regime" in err


def test_construct_vortex(capsys):
    code, out, _ = run(capsys, "construct", "--kind", "vortex", "--sigma", "0.1", "--theta", "0.5")
    d = json.loads(out)
    assert code == 0 and d["admissible"] and d["atoms"] == 10


def test_sweep_to_stdout_and_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"theta_list": [0.5], "sigma_list": [0.1], "competitors": ["uniform"]}))
    code, out, _ = run(capsys, "sweep", "--config", str(cfg))
    assert code == 0
    assert out.splitlines()[0].startswith("sigma,theta,eps")
    assert len(out.splitlines()) == 3
    dest = tmp_path / "o.json"
    code, _, _ = run(capsys, "sweep", "--config", str(cfg), "--format", "json", "--out", str(dest))
    assert code == 0 and len(json.loads(dest.read_text())) == 2


def test_sweep_bad_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"theta_list": [0.5], "sigma_list": [0.1], "eps_rule": {"kind": "fixed", "values": 0.05}}))
    code, _, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 2
    code, _, _ = run(capsys, "sweep", "--config", str(tmp_path / "nope.json"))
    assert code == 2


def test_balls(capsys, tmp_path):
    src = tmp_path / "b.json"
    src.write_text(json.dumps([{"center": [0, 0], "radius": 1, "charge": 1},
                               {"center": [4, 0], "radius": 1, "charge": -1}]))
    code, out, _ = run(capsys, "balls", "--input", str(src), "--t", "1")
    d = json.loads(out)
    assert code == 0 and len(d["balls"]) == 1
    assert d["merge_log"][0]["time"] == pytest.approx(math.log(2))
    assert d["balls"][0]["charge"] == 0
    src.write_text(json.dumps([{"center": [0, 0], "radius": 1}, {"center": [1, 0], "radius": 1}]))
    assert run(capsys, "balls", "--input", str(src), "--t", "1")[0] == 2


def test_spin(capsys):
    code, out, _ = run(capsys, "spin", "--alpha", "2", "--m", "4", "--mode", "constant", "--report")
    d = json.loads(out)
    assert code == 0 and d["F"] == pytest.approx(-32) and d["vortices"] == []
    code, out, _ = run(capsys, "spin", "--alpha", "3", "--m", "16", "--report")
    d = json.loads(out)
    assert d["renormalized"] < 1e-10 and d["optimal_angle"] == pytest.approx(math.acos(0.75))
    assert run(capsys, "spin", "--alpha", "5", "--m", "8")[0] == 2


def test_check(capsys):
    code, out, _ = run(capsys, "check", "--construct", "uniform", "--sigma", "0.1", "--theta", "0.5", "--grid-n", "64")
    rows = json.loads(out)
    assert code == 0 and rows[-1]["name"] == "est_elliptic"
