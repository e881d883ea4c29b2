import pytest

from xwalk.changedet import detect_changes
from xwalk.geometry import Rect, dist_pp
from xwalk.synth import ScenarioSpec, gen_scenario, oracle_changes, write_scenario

SMALL = ScenarioSpec(seed=11, extent=Rect(0, 0, 3000, 3000), planted_new=8, planted_removed=4,
                     jitter_sigma=3.0)


def test_deterministic_for_seed():
    a = gen_scenario(SMALL)
    b = gen_scenario(SMALL)
    assert a[1] == b[1] and a[2] == b[2]
    assert a[0].expected_new_changes == b[0].expected_new_changes
    c = gen_scenario(ScenarioSpec(**{**vars(SMALL), "seed": 12}))
    assert c[1] != a[1]


def test_planted_changes_recovered():
    truth, old, new = gen_scenario(SMALL)
    ch = detect_changes(old, new, 36.0)
    got_new = sorted(truth.planted_ids[c.source_id] for c in ch if c.kind == "NEW-CANDIDATE")
    got_rem = sorted(truth.planted_ids[c.source_id] for c in ch if c.kind == "REMOVED-CANDIDATE")
    assert got_new == sorted(truth.expected_new_changes)
    assert got_rem == sorted(truth.expected_removed_changes)


def test_planted_points_are_separated():
    truth, _, _ = gen_scenario(SMALL)
    planted = truth.expected_new_changes + truth.expected_removed_changes
    everything = set(truth.gt_old) | set(truth.gt_new)
    for p in planted:
        assert all(dist_pp(p, q) >= 72.0 for q in everything if q != p)


def test_clutter_is_low_confidence_and_off_intersection():
    spec = ScenarioSpec(**{**vars(SMALL), "clutter_rate": 0.1})
    truth, old, new = gen_scenario(spec)
    ixs = [ip.pos for ip in truth.intersections]
    clutter = [r for r in old + new if r.id in truth.clutter_ids]
    assert clutter
    for r in clutter:
        assert r.confidence < 0.5
        assert min(dist_pp(r.pos, q) for q in ixs) > 90.0


def test_spec_json_round_trip_and_validation():
    assert ScenarioSpec.from_json(SMALL.to_json()) == SMALL
    with pytest.raises(ValueError):
        ScenarioSpec.from_json('{"bogus": 1}')
    with pytest.raises(ValueError):
        ScenarioSpec(drop_rate=2.0)
    with pytest.raises(ValueError):
        ScenarioSpec(grid_spacing=50.0)


def test_write_scenario_files(tmp_path):
    paths = write_scenario(tmp_path, SMALL, "EPSG:2236")
    for key in ("roads", "old", "new", "expected_new", "scenario"):
        assert (tmp_path / paths[key].split("/")[-1]).exists()
    assert (tmp_path / "old.csv").read_text().startswith("# crs: EPSG:2236\n")


def test_oracle_changes_simple():
    old = [(0, 0), (100, 0)]
    new = [(36, 0), (300, 0)]
    assert oracle_changes(old, new, 36.0) == ([1], [1])
