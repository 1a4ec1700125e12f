import json
import math
import os
import pathlib

import pytest

import rbsde

SCENARIOS = pathlib.Path(os.environ.get("RBSDE_SCENARIOS", pathlib.Path(__file__).parents[2] / "scenarios"))


def read(name):
    return (SCENARIOS / f"{name}.json").read_text()


def test_martingale_mean():
    out = rbsde.solve(read("martingale"))
    assert out["y0"] == pytest.approx(0.5, abs=1e-14)
    assert out["skorokhod_worst"] == 0.0
    assert len(out["y"]) == 9
    assert all(v == 0.0 for row in out["k_plus"] for v in row)


def test_quadratic_matches_closed_form():
    cfg = read("quadratic")
    out = rbsde.solve(cfg, depth=6)
    xi = out["y"][-1]
    assert out["y0"] == pytest.approx(rbsde.quadratic_closed_form(0.5, xi), abs=1e-10)


def test_hash_tracks_depth():
    cfg = read("martingale")
    assert rbsde.config_hash(cfg) == rbsde.solve(cfg)["config_hash"]
    assert rbsde.solve(cfg, depth=4)["config_hash"] != rbsde.config_hash(cfg)


def test_errors():
    with pytest.raises(rbsde.ConfigError):
        rbsde.solve(read("bad_key"))
    with pytest.raises(rbsde.InfeasibleBarriers):
        rbsde.solve(read("infeasible"))


def test_envelope():
    vals = rbsde.envelope([0.25, 0.5, 0.75, 1.0], [0.0, 2.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], n=4.0)
    assert vals[0] == -math.inf
    assert vals[2] == 1.0
    assert rbsde.envelope([0.5, 1.0], [7.0, 3.0], [1.0, 0.0]) == [7.0, -math.inf]


def test_oracles():
    assert rbsde.exhaustive_stopping_value([[1.0], [2.0, 0.0], [3.0, 1.0, 0.0]], [3.0, 1.0, 0.0]) == 1.25
    assert rbsde.crr_american_put(1.0, 1.0, 0.3, 1.0, 8) > 0.0


def test_run_writes_manifest(tmp_path):
    code, stdout, _ = rbsde.run("solve", config=str(SCENARIOS / "martingale.json"), out=str(tmp_path))
    assert code == 0
    assert "Y0" in stdout
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["exit_code"] == 0
    assert manifest["config_hash"] == rbsde.config_hash(read("martingale"))
    code, _, _ = rbsde.run("solve", config=str(SCENARIOS / "infeasible.json"), out=str(tmp_path / "bad"))
    assert code == 2


def test_small_suite():
    results = rbsde.run_suite(seed=3, depth=4, cases=3)
    assert [r["id"] for r in results] == list(range(1, 11))
    assert all(r["passed"] for r in results), [r["line"] for r in results]
