import json

import pytest
import yaml

from ida_fec import report
from ida_fec.channel_sim import BlerComplexityPoint
from ida_fec.cli import main
from ida_fec.config import load_config

BASE = {
    "decoder": "chase",
    "channel": {"ebn0_db": [5.5], "seed": 7},
    "simulation": {"trials": 10},
    "oracle": {"p_max": 5, "n_store": 8},
    "references": [4, 5],
    "policies": [
        {"name": "ida", "kind": "ida", "gamma": 7.5, "phi": 12, "low": 4, "high": 5},
        {"name": "m", "kind": "m", "gamma": 5.0, "low": 4, "high": 5},
        {"name": "ladder", "kind": "multi_md", "thresholds": [6.0, 4.0, 2.0], "levels": [2, 3, 4, 5]},
    ],
}


def write(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def run(args):
    return main([str(a) for a in args])


def test_run_minimal(tmp_path):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "out"
    assert run(["run", "--config", cfg, "--out-dir", out]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["seed"] == 7
    assert [p.endswith("bler.csv") for p in manifest["outputs"]] == [True]
    lines = (out / "bler.csv").read_text().splitlines()
    assert lines[0].startswith("policy,ebn0_db,trials,block_errors,bler,bler_ci,complexity_pct")
    assert [l.split(",")[0] for l in lines[1:]] == ["chase-4", "chase-5", "ida", "m", "ladder"]
    assert all(l.split(",")[2] == "10" for l in lines[1:])


def test_rerun_byte_identical_and_worker_invariant(tmp_path):
    data = dict(BASE, simulation={"trials": 300, "chunk": 64})
    cfg = write(tmp_path, data)
    emits = ["--emit", "bler", "--emit", "table1", "--emit", "dist"]
    assert run(["run", "--config", cfg, "--out-dir", tmp_path / "a", *emits]) == 0
    assert run(["run", "--config", cfg, "--out-dir", tmp_path / "b", *emits]) == 0
    assert run(["run", "--config", cfg, "--out-dir", tmp_path / "c", "--workers", 2, *emits]) == 0
    for name in ("bler.csv", "table1.csv", "dist.csv"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes() == (tmp_path / "c" / name).read_bytes()
    da = json.loads((tmp_path / "a" / "manifest.json").read_text())["config_digest"]
    db = json.loads((tmp_path / "b" / "manifest.json").read_text())["config_digest"]
    dc = json.loads((tmp_path / "c" / "manifest.json").read_text())["config_digest"]
    assert da == db == dc


def test_digest_stable_under_key_order(tmp_path):
    a = write(tmp_path, BASE, "a.yaml")
    b = write(tmp_path, dict(reversed(list(BASE.items()))), "b.yaml")
    assert load_config(a).digest() == load_config(b).digest()
    assert load_config(a, {"channel.seed": 8}).digest() != load_config(a).digest()


def test_phi_zero_is_config_error(tmp_path, capsys):
    bad = dict(BASE, policies=[{"kind": "ida", "gamma": 7.5, "phi": 0, "low": 4, "high": 5}])
    out = tmp_path / "out"
    assert run(["run", "--config", write(tmp_path, bad), "--out-dir", out]) == 2
    assert "phi" in capsys.readouterr().err
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "config_error" and manifest["outputs"] == []


@pytest.mark.parametrize("patch", [
    {"simulation": {"trials": 10, "trails": 5}},
    {"colour": 1},
    {"policies": [{"kind": "m", "gamma": 1.0, "low": 4, "high": 5, "rank": 3}]},
])
def test_unknown_keys_rejected(tmp_path, capsys, patch):
    assert run(["run", "--config", write(tmp_path, dict(BASE, **patch)), "--out-dir", tmp_path]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_table1_and_dist(tmp_path):
    cfg = write(tmp_path, dict(BASE, simulation={"trials": 200}))
    assert run(["table1", "--config", cfg, "--out-dir", tmp_path / "t"]) == 0
    rows = (tmp_path / "t" / "table1.csv").read_text().splitlines()
    assert rows[0] == "ebn0_db,p_low,count,fraction,fraction_given_errors"
    assert len(rows) == 1 + 7 and rows[-1].split(",")[1] == "uncorrectable"
    assert sum(int(r.split(",")[2]) for r in rows[1:]) == 200
    assert run(["dist", "--config", cfg, "--out-dir", tmp_path / "d"]) == 0
    rows = (tmp_path / "d" / "dist.csv").read_text().splitlines()
    assert rows[0] == "ebn0_db,condition,bucket,rank,mean_mag,mean_diff,sample_count"
    assert len(rows) == 1 + 6 * 6


def test_patterns(tmp_path):
    assert run(["patterns", "--out-dir", tmp_path]) == 0
    rows = (tmp_path / "patterns.csv").read_text().splitlines()
    assert rows[0] == "index,weight,parts" and len(rows) == 536
    assert rows[1:5] == ["1,1,1", "2,2,2", "3,3,3", "4,3,1 2"]
    assert run(["patterns", "--w-max", "0", "--out-dir", tmp_path]) == 2


def test_save_records_and_tune(tmp_path):
    data = dict(BASE, simulation={"trials": 3000, "save_records": True},
                tune={"selector": "M", "levels": [3, 4, 5], "reference": 5, "slack": 1.0})
    cfg = write(tmp_path, data)
    assert run(["run", "--config", cfg, "--out-dir", tmp_path / "r"]) == 0
    rec_dir = tmp_path / "r" / "records-5p5"
    assert (rec_dir / "records.json").exists()
    assert run(["tune", "--config", cfg, "--records", rec_dir, "--out-dir", tmp_path / "t"]) == 0
    body = json.loads((tmp_path / "t" / "tune.json").read_text())
    assert body["feasible"] and body["levels"] == [3, 4, 5] and len(body["thresholds"]) == 2
    assert body["block_errors"] <= body["ceiling_errors"] and "complexity_pct" in body
    # an impossible ceiling exits with the infeasible code
    data["tune"] = {"selector": "MD", "levels": [0, 1], "reference": 5}
    cfg = write(tmp_path, data)
    assert run(["tune", "--config", cfg, "--records", rec_dir, "--out-dir", tmp_path / "u"]) == 3
    assert json.loads((tmp_path / "u" / "tune.json").read_text())["feasible"] is False


def test_io_failure_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(["run", "--config", write(tmp_path, BASE), "--out-dir", blocker / "sub"]) == 4
    assert run(["tune", "--config", write(tmp_path, BASE), "--records", tmp_path / "missing.npz",
                "--out-dir", tmp_path]) == 2  # no tune section
    tuned = write(tmp_path, dict(BASE, tune={"levels": [4, 5]}), "tuned.yaml")
    assert run(["tune", "--config", tuned, "--records", tmp_path / "missing.npz", "--out-dir", tmp_path]) == 4


def test_empty_points_and_json_roundtrip(tmp_path):
    assert report.bler_csv([]) == "policy,ebn0_db,trials,block_errors,bler,bler_ci,complexity_pct,low_confidence\n"
    pts = [("a", BlerComplexityPoint(6.5, 1e-4, 2e-5, 55.5, (0.25, 0.75), 10000, 1))]
    path = report.emit_report(pts, tmp_path / "p.json", "json")
    assert report.points_from_json(path.read_text()) == pts
    with pytest.raises(ValueError):
        report.emit_report(pts, tmp_path / "p.txt", "xml")
