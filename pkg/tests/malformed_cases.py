"""Malformed-input fixtures and where each one must be reported."""
from pathlib import Path

from xwalk import ingest, report
from xwalk.geometry import WorldPoint
from xwalk.ingest import TileMeta

DATA = Path(__file__).parent / "data" / "malformed"
TILES = {"T1": TileMeta("T1", WorldPoint(0.0, 1000.0), 0.5, 2000, 2000)}


def _det(text, src):
    return ingest.parse_detections(text, ingest.OLD, tiles=TILES, source=src)


PARSERS = {
    "det": _det,
    "tiles": ingest.parse_tiles,
    "review": ingest.parse_review,
    "roads": ingest.parse_roads,
    "changes": report.parse_changes_geojson,
}

# file name -> (row, feature); None means file-level
CASES = {
    "det_nonnumeric.csv": (2, None),
    "det_conf_range.csv": (2, None),
    "det_missing_column.csv": (None, None),
    "det_duplicate_id.csv": (2, None),
    "det_extra_field.csv": (2, None),
    "det_nan.csv": (2, None),
    "det_empty.csv": (None, None),
    "det_pixel_outside.csv": (2, None),
    "det_pixel_unknown_tile.csv": (1, None),
    "tiles_bad_resolution.csv": (2, None),
    "tiles_duplicate.csv": (2, None),
    "review_bad_label.csv": (2, None),
    "review_duplicate.csv": (2, None),
    "roads_bad_system.geojson": (None, 1),
    "roads_point_geometry.geojson": (None, 0),
    "roads_one_vertex.geojson": (None, 1),
    "roads_repeated_vertex.geojson": (None, 0),
    "roads_truncated.geojson": (None, None),
    "roads_not_collection.geojson": (None, None),
    "changes_bad_kind.geojson": (None, 0),
    "changes_missing_confidence.geojson": (None, 0),
}


def parser_for(name):
    return PARSERS[name.split("_", 1)[0]]
