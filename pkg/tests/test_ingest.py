import io

import numpy as np
import pytest

from malformed_cases import CASES, DATA, TILES, parser_for
from xwalk import ingest
from xwalk.geometry import Polyline, Rect, WorldPoint, rect_intersects_polyline
from xwalk.ingest import (InputError, RoadNetwork, Road, TileMeta, check_crs, crs_label,
                          detections_to_text, parse_detections, parse_intersections,
                          parse_review, parse_roads, parse_tiles, pixel_to_world,
                          roads_to_geojson, select_tiles)


def test_parse_world_detections():
    text = "# crs: EPSG:2236\nx,y,confidence,id\n1.5,2.5,0.9,a\n3,4,0.25,b\n"
    recs = parse_detections(text, "NEW", source="d.csv")
    assert [r.id for r in recs] == ["a", "b"]
    assert recs[0].pos == WorldPoint(1.5, 2.5)
    assert recs[1].confidence == 0.25 and recs[1].epoch == "NEW"
    assert crs_label(text) == "EPSG:2236"


def test_default_ids_and_percent_scale():
    recs = parse_detections("x,y,confidence\n0,0,90\n\n1,1,45\n", "OLD", "percent")
    # blank lines still advance the row counter so ids match file rows
    assert [r.id for r in recs] == ["OLD-1", "OLD-3"]
    assert [r.confidence for r in recs] == [0.9, 0.45]


def test_pixel_mode_detections():
    recs = parse_detections("tile_id,px,py,confidence\nT1,100,200,0.8\n", "OLD", tiles=TILES)
    assert recs[0].pos == WorldPoint(50.0, 900.0)
    assert recs[0].tile_id == "T1"
    with pytest.raises(InputError, match="no tile metadata"):
        parse_detections("tile_id,px,py,confidence\nT1,1,1,0.8\n", "OLD")


def test_pixel_to_world_corners():
    t = TileMeta("T", WorldPoint(1000.0, 5000.0), 0.25, 400, 200)
    assert pixel_to_world(t, 0, 0) == (1000.0, 5000.0)
    assert pixel_to_world(t, 400, 200) == (1100.0, 4950.0)
    assert pixel_to_world(t, 400, 0) == (1100.0, 5000.0)
    assert t.rect == Rect(1000.0, 4950.0, 1100.0, 5000.0)
    for px, py in ((-1, 0), (0, 201), (401, 5)):
        with pytest.raises(ValueError):
            pixel_to_world(t, px, py)


def test_detections_round_trip(rng):
    recs = [ingest.DetectionRecord(f"id{i}", WorldPoint(*map(float, rng.uniform(-1e6, 1e6, 2))),
                                   float(rng.uniform()), "NEW", "T1" if i % 2 else None)
            for i in range(200)]
    text = detections_to_text(recs, "EPSG:2236")
    again = parse_detections(text, "NEW")
    assert again == recs
    assert detections_to_text(again, "EPSG:2236") == text


ROADS = """{"type":"FeatureCollection","crs":{"type":"name","properties":{"name":"EPSG:2236"}},
"features":[
{"type":"Feature","id":"r1","properties":{"system":"ON","name":"Main"},
 "geometry":{"type":"LineString","coordinates":[[0,0],[100,0]]}},
{"type":"Feature","properties":{"system":"OFF"},
 "geometry":{"type":"MultiLineString","coordinates":[[[0,0],[0,100]],[[50,-50],[50,50]]]}}]}"""


def test_parse_roads():
    net = parse_roads(ROADS, "roads.geojson")
    assert [r.id for r in net.roads] == ["r1", "F1.0", "F1.1"]
    assert net.crs == "EPSG:2236"
    assert net.segment_count == 3
    assert [p.id for p in net.by_system("OFF")] == ["F1.0", "F1.1"]
    again = parse_roads(roads_to_geojson(net))
    assert again == net


def test_parse_tiles_review_intersections():
    tiles = parse_tiles("tile_id,x_min,y_max,resolution,width_px,height_px\n"
                        "A,0,100,0.5,200,100\n")
    assert tiles[0].rect == Rect(0.0, 50.0, 100.0, 100.0)
    rev = parse_review("change_id,label,note\nC1,new,\nC2,FALSE-POSITIVE,shadow\n")
    assert [(a.change_id, a.label, a.note) for a in rev] == [
        ("C1", "NEW", None), ("C2", "FALSE-POSITIVE", "shadow")]
    assert parse_intersections("x,y\n1,2\n") == [WorldPoint(1.0, 2.0)]


def test_select_tiles_matches_brute_force(rng):
    tiles = [TileMeta(f"T{i}-{j}", WorldPoint(i * 500.0, (j + 1) * 500.0), 1.0, 500, 500)
             for i in range(10) for j in range(10)]
    lines = [Polyline(f"L{k}", tuple(map(tuple, rng.uniform(0, 5000, (3, 2)))))
             for k in range(6)]
    net = RoadNetwork(tuple(Road(ln, "OFF") for ln in lines))
    got = [t.tile_id for t in select_tiles(tiles, net)]
    want = [t.tile_id for t in tiles if any(rect_intersects_polyline(t.rect, ln) for ln in lines)]
    assert got == want
    assert select_tiles(tiles, RoadNetwork(())) == []


def test_check_crs():
    assert check_crs({"a": "X", "b": None, "c": "X"}) == "X"
    assert check_crs({"a": None}) is None
    with pytest.raises(InputError) as exc:
        check_crs({"a": "EPSG:2236", "b": "EPSG:4326"})
    assert "EPSG:2236" in str(exc.value) and "EPSG:4326" in str(exc.value)
    with pytest.raises(InputError, match="config"):
        check_crs({"a": "X"}, expected="Y")


def test_input_error_message_has_location():
    e = InputError("bad", "f.csv", row=3)
    assert str(e) == "f.csv, row 3: bad"
    assert InputError("bad", "g.geojson", feature=0).feature == 0


def test_parse_detections_accepts_file_objects():
    recs = parse_detections(io.BytesIO(b"x,y,confidence\n1,2,0.5\n"), "OLD")
    assert len(recs) == 1


@pytest.mark.parametrize("name", sorted(CASES))
def test_malformed_fixture_rejected_with_location(name):
    row, feature = CASES[name]
    text = (DATA / name).read_text()
    with pytest.raises(InputError) as exc:
        parser_for(name)(text, name)
    err = exc.value
    assert err.source == name
    assert err.row == row
    assert err.feature == feature
    assert str(err).startswith(name)


def test_every_fixture_is_listed():
    assert sorted(p.name for p in DATA.iterdir()) == sorted(CASES)
