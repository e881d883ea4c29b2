import math

import pytest

from xwalk.changedet import (NEW_CANDIDATE, REMOVED_CANDIDATE, ChangeRecord, Thresholds,
                             change_sort_key, detect_changes, detect_new, detect_removed,
                             mask_filter, sort_changes, split_by_system)
from xwalk.geometry import Polyline, WorldPoint
from xwalk.ingest import DetectionRecord, Road, RoadNetwork
from xwalk.synth import oracle_changes


def det(i, x, y, conf=0.9, epoch="OLD"):
    return DetectionRecord(f"{epoch[0]}{i}", WorldPoint(float(x), float(y)), conf, epoch)


NET = RoadNetwork((Road(Polyline("on", ((0, 0), (1000, 0))), "ON"),
                   Road(Polyline("off", ((0, 500), (1000, 500))), "OFF")))


def test_thresholds_validation():
    assert Thresholds().change_radius == 36.0
    with pytest.raises(ValueError):
        Thresholds(change_radius=0)
    with pytest.raises(ValueError):
        Thresholds(confidence_floor=1.5)
    with pytest.raises(ValueError):
        Thresholds(mask_radius=math.inf)


def test_mask_filter_closed_ball(backend):
    pts = [det(1, 10, 100.0), det(2, 10, 100.5), det(3, 10, 400), det(4, 10, -99)]
    kept = mask_filter(pts, NET, 100.0)
    assert [p.id for p in kept] == ["O1", "O3", "O4"]
    with pytest.raises(ValueError):
        mask_filter(pts, RoadNetwork(()))
    assert mask_filter([], NET) == []


def test_detect_new_removed_examples(backend):
    old = [det(1, 0, 0), det(2, 100, 0), det(3, 500, 0)]
    new = [det(1, 36, 0, epoch="NEW"), det(2, 100, 37, epoch="NEW"), det(3, 900, 0, epoch="NEW")]
    added = detect_new(new, old, 36.0)
    assert [(c.source_id, c.kind) for c in added] == [("N2", NEW_CANDIDATE), ("N3", NEW_CANDIDATE)]
    assert added[0].nearest_other_epoch_dist == 37.0
    removed = detect_removed(old, new, 36.0)
    assert [c.source_id for c in removed] == ["O2", "O3"]
    assert all(c.kind == REMOVED_CANDIDATE for c in removed)


def test_detect_changes_numbering_and_empty(backend):
    old = [det(1, 0, 0)]
    new = [det(1, 500, 0, epoch="NEW"), det(2, 900, 0, epoch="NEW")]
    ch = detect_changes(old, new, 36.0, labels=("2019", "2021"))
    assert [(c.change_id, c.kind) for c in ch] == [
        ("C1", NEW_CANDIDATE), ("C2", NEW_CANDIDATE), ("C3", REMOVED_CANDIDATE)]
    assert ch[0].source_epoch_labels == ("2019", "2021")
    only_new = detect_changes([], new)
    assert len(only_new) == 2 and all(math.isinf(c.nearest_other_epoch_dist) for c in only_new)
    assert detect_changes([], []) == []


def test_identical_epochs_yield_nothing(backend, rng):
    pts = [det(i, *rng.uniform(0, 1e4, 2)) for i in range(300)]
    new = [DetectionRecord(p.id, p.pos, p.confidence, "NEW") for p in pts]
    assert detect_changes(pts, new) == []


def test_detect_matches_oracle(backend, rng):
    for _ in range(5):
        old = [det(i, *rng.uniform(0, 3000, 2)) for i in range(400)]
        new = [det(i, *rng.uniform(0, 3000, 2), epoch="NEW") for i in range(400)]
        want_new, want_removed = oracle_changes(old, new, 36.0)
        assert [c.source_id for c in detect_new(new, old)] == [new[i].id for i in want_new]
        assert [c.source_id for c in detect_removed(old, new)] == [old[i].id for i in want_removed]


def test_change_radius_monotone(rng):
    old = [det(i, *rng.uniform(0, 2000, 2)) for i in range(300)]
    new = [det(i, *rng.uniform(0, 2000, 2), epoch="NEW") for i in range(300)]
    prev = None
    for r in (10, 20, 36, 60, 100):
        cur = {c.source_id for c in detect_new(new, old, r)}
        if prev is not None:
            assert cur <= prev
        prev = cur


def test_split_by_system():
    ch = [ChangeRecord("C1", WorldPoint(10, 50), NEW_CANDIDATE, 0.9, 50.0),
          ChangeRecord("C2", WorldPoint(10, 450), NEW_CANDIDATE, 0.9, 50.0),
          ChangeRecord("C3", WorldPoint(10, 100), NEW_CANDIDATE, 0.9, 50.0)]
    out = split_by_system(ch, NET, 100.0)
    assert [c.system for c in out] == ["ON", "OFF", "ON"]
    off_only = RoadNetwork((Road(Polyline("x", ((0, 0), (1, 0))), "OFF"),))
    assert {c.system for c in split_by_system(ch, off_only)} == {"OFF"}


def test_natural_sort():
    ids = ["C10", "C2", "C1", "X", "C100"]
    recs = [ChangeRecord(i, WorldPoint(0, 0), NEW_CANDIDATE, 0.5, 1.0) for i in ids]
    assert [c.change_id for c in sort_changes(recs)] == ["C1", "C2", "C10", "C100", "X"]
    assert change_sort_key("C2") < change_sort_key("C10")
