import json
from pathlib import Path

import pytest

from xwalk.cli import main
from xwalk.geometry import Rect
from xwalk.synth import ScenarioSpec

SPEC = ScenarioSpec(seed=3, extent=Rect(0, 0, 3000, 3000), planted_new=6, planted_removed=3,
                    jitter_sigma=2.0, duplicate_rate=0.1, clutter_rate=0.05)


@pytest.fixture
def scenario(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(SPEC.to_json())
    assert main(["synth", "--scenario", str(spec), "--out", str(tmp_path / "s"),
                 "--crs", "EPSG:2236"]) == 0
    return tmp_path / "s"


def _pipeline(s, out, *extra):
    return main(["pipeline", "--old", str(s / "old.csv"), "--new", str(s / "new.csv"),
                 "--roads", str(s / "roads.geojson"), "--out", str(out), "--seed", "3", *extra])


def test_pipeline_runs_and_is_byte_identical(scenario, tmp_path, capsys):
    assert _pipeline(scenario, tmp_path / "a") == 0
    assert _pipeline(scenario, tmp_path / "b", "--jobs", "2") == 0
    for name in ("changes.geojson", "changes.csv", "discarded_fp.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    s = summary["summary"]
    assert s["on_system"] + s["off_system"] == s["total_changes"]
    assert summary["manifest"]["crs"] == "EPSG:2236"
    assert "changes\t" in capsys.readouterr().out


def test_stagewise_commands(scenario, tmp_path, capsys):
    out = tmp_path / "o"
    common = ["--old", str(scenario / "old.csv"), "--new", str(scenario / "new.csv")]
    assert main(["mask", *common, "--roads", str(scenario / "roads.geojson"),
                 "--out", str(out)]) == 0
    assert main(["changes", "--old", str(out / "old_masked.csv"),
                 "--new", str(out / "new_masked.csv"), "--out", str(out)]) == 0
    assert main(["post", "--changes", str(out / "candidates.geojson"),
                 "--roads", str(scenario / "roads.geojson"), "--out", str(out / "post")]) == 0
    assert main(["report", "--changes", str(out / "post" / "changes.geojson")]) == 0
    assert main(["eval", "--gt", str(scenario / "truth_new.csv"),
                 "--model", str(scenario / "new.csv"), "--out", str(out)]) == 0
    rep = json.loads((out / "eval.json").read_text())
    assert rep["completeness_pct"] == 100.0
    # the stage-wise route reproduces the pipeline's change inventory
    assert _pipeline(scenario, tmp_path / "p") == 0
    assert (out / "post" / "changes.geojson").read_bytes() == \
        (tmp_path / "p" / "changes.geojson").read_bytes()


def test_config_file_and_overrides(scenario, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"old": str(scenario / "old.csv"), "new": str(scenario / "new.csv"),
                               "roads": str(scenario / "roads.geojson"),
                               "thresholds": {"change_radius": 40.0}}))
    assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "c"),
                 "--dedup-radius", "20"]) == 0
    th = json.loads((tmp_path / "c" / "summary.json").read_text())["manifest"]["thresholds"]
    assert th["change_radius"] == 40.0 and th["dedup_radius"] == 20.0


def test_input_errors_exit_1(scenario, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y,confidence\n1,2,0.5\n1,oops,0.5\n")
    assert _pipeline_with(scenario, tmp_path, old=bad) == 1
    assert "row 2" in capsys.readouterr().err
    assert main(["pipeline", "--old", str(bad)]) == 1
    assert "--new" in capsys.readouterr().err
    assert _pipeline(scenario, tmp_path / "x", "--change-radius", "-1") == 1
    cfg = tmp_path / "c.json"
    cfg.write_text('{"nonsense": 1}')
    assert main(["pipeline", "--config", str(cfg)]) == 1


def test_crs_mismatch_exit_1(scenario, tmp_path, capsys):
    other = tmp_path / "new.csv"
    other.write_text((scenario / "new.csv").read_text().replace("EPSG:2236", "EPSG:4326"))
    assert _pipeline_with(scenario, tmp_path, new=other) == 1
    err = capsys.readouterr().err
    assert "EPSG:2236" in err and "EPSG:4326" in err


def test_missing_file_exit_1(tmp_path, capsys):
    assert main(["report", "--changes", str(tmp_path / "nope.geojson")]) == 1
    assert "nope.geojson" in capsys.readouterr().err


def _pipeline_with(s, tmp_path, old=None, new=None):
    return main(["pipeline", "--old", str(old or s / "old.csv"), "--new", str(new or s / "new.csv"),
                 "--roads", str(s / "roads.geojson"), "--out", str(tmp_path / "e")])


def test_zero_noise_five_planted(tmp_path):
    spec = ScenarioSpec(seed=9, extent=Rect(0, 0, 2500, 2500), planted_new=5)
    (tmp_path / "spec.json").write_text(spec.to_json())
    s = tmp_path / "s"
    assert main(["synth", "--scenario", str(tmp_path / "spec.json"), "--out", str(s)]) == 0
    assert _pipeline(s, tmp_path / "o") == 0
    feats = json.loads((tmp_path / "o" / "changes.geojson").read_text())["features"]
    assert [f["properties"]["kind"] for f in feats] == ["NEW-CANDIDATE"] * 5


def test_synth_seed_flag_changes_output(tmp_path):
    assert main(["synth", "--seed", "1", "--out", str(tmp_path / "a")]) == 0
    assert main(["synth", "--seed", "1", "--out", str(tmp_path / "b")]) == 0
    assert main(["synth", "--seed", "2", "--out", str(tmp_path / "c")]) == 0
    a, b, c = ((tmp_path / d / "old.csv").read_bytes() for d in "abc")
    assert a == b and a != c
