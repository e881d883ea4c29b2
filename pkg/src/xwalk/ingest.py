"""Strict readers for detections, roads, tiles and review files.

Every rejection raises :class:`InputError` carrying the source name and the
offending row (CSV, 1-based over data rows) or feature index (GeoJSON,
0-based).  Nothing is skipped silently.

CSV files may start with ``#`` comment lines; a ``# crs: LABEL`` comment
declares the coordinate system label.  GeoJSON carries it as
``{"crs": {"type": "name", "properties": {"name": LABEL}}}``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO

import numpy as np

from .geometry import Polyline, Rect, WorldPoint, rect_intersects_polyline

OLD, NEW = "OLD", "NEW"
EPOCHS = (OLD, NEW)
ON, OFF = "ON", "OFF"
REVIEW_LABELS = ("NEW", "MODIFIED", "FALSE-POSITIVE")
CONFIDENCE_SCALES = ("fraction", "percent")


class InputError(ValueError):
    """Malformed or inconsistent input, located by file and row/feature."""

    def __init__(self, message, source=None, row=None, feature=None):
        self.source = source
        self.row = row
        self.feature = feature
        where = []
        if source:
            where.append(str(source))
        if row is not None:
            where.append(f"row {row}")
        if feature is not None:
            where.append(f"feature {feature}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class DetectionRecord:
    id: str
    pos: WorldPoint
    confidence: float
    epoch: str
    tile_id: Optional[str] = None


@dataclass(frozen=True)
class TileMeta:
    tile_id: str
    corner: WorldPoint
    resolution: float
    width_px: int
    height_px: int

    @property
    def rect(self) -> Rect:
        return Rect(self.corner.x,
                    self.corner.y - self.height_px * self.resolution,
                    self.corner.x + self.width_px * self.resolution,
                    self.corner.y)


@dataclass(frozen=True)
class Road:
    line: Polyline
    system: str
    name: Optional[str] = None

    @property
    def id(self):
        return self.line.id


@dataclass(frozen=True)
class RoadNetwork:
    roads: tuple[Road, ...]
    crs: Optional[str] = None

    @property
    def polylines(self) -> list[Polyline]:
        return [r.line for r in self.roads]

    def by_system(self, system: str) -> list[Polyline]:
        return [r.line for r in self.roads if r.system == system]

    def __len__(self):
        return len(self.roads)

    @property
    def segment_count(self) -> int:
        return sum(len(r.line.vertices) - 1 for r in self.roads)


@dataclass(frozen=True)
class ReviewAnnotation:
    change_id: str
    label: str
    note: Optional[str] = None


def _text(stream) -> str:
    if isinstance(stream, str):
        return stream
    data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def crs_label(text: str) -> Optional[str]:
    """CRS label declared in a CSV comment or a GeoJSON ``crs`` member."""
    stripped = text.lstrip("﻿ \t\r\n")
    if stripped.startswith("{"):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError:
            return None
        crs = doc.get("crs") if isinstance(doc, dict) else None
        if isinstance(crs, dict):
            name = (crs.get("properties") or {}).get("name")
            return str(name) if name is not None else None
        return None
    for line in stripped.splitlines():
        if not line.startswith("#"):
            break
        body = line.lstrip("#").strip()
        key, sep, value = body.partition(":")
        if sep and key.strip().lower() == "crs":
            return value.strip()
    return None


def _csv_rows(text: str, source, required: Iterable[str]):
    """Yield ``(row_number, dict)``; validates the header first."""
    lines = text.lstrip("﻿").splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    reader = csv.reader(body)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputError("empty file, header row expected", source) from None
    missing = [c for c in required if c not in header]
    if missing:
        raise InputError(f"missing required column(s) {', '.join(missing)}", source)
    if len(set(header)) != len(header):
        raise InputError("duplicate column names in header", source)
    for n, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) > len(header):
            raise InputError(f"expected {len(header)} fields, found {len(row)}", source, row=n)
        row = row + [""] * (len(header) - len(row))
        yield n, header, dict(zip(header, (c.strip() for c in row)))


def _number(value: str, column: str, source, row) -> float:
    try:
        v = float(value)
    except ValueError:
        raise InputError(f"column {column!r}: not a number: {value!r}", source, row=row) from None
    if not math.isfinite(v):
        raise InputError(f"column {column!r}: not finite: {value!r}", source, row=row)
    return v


def _integer(value: str, column: str, source, row) -> int:
    try:
        return int(value)
    except ValueError:
        raise InputError(f"column {column!r}: not an integer: {value!r}", source, row=row) from None


def parse_detections(stream, epoch: str, confidence_scale: str = "fraction",
                     tiles: Optional[dict[str, TileMeta]] = None,
                     source=None) -> list[DetectionRecord]:
    """Read a detections CSV for one epoch.

    World mode: ``x,y,confidence[,id][,tile_id]``.  Pixel mode:
    ``tile_id,px,py,confidence[,id]``, georeferenced through ``tiles``.
    Without an ``id`` column, ids are ``"<epoch>-<row>"``.
    """
    if epoch not in EPOCHS:
        raise ValueError(f"epoch must be one of {EPOCHS}")
    if confidence_scale not in CONFIDENCE_SCALES:
        raise ValueError(f"confidence_scale must be one of {CONFIDENCE_SCALES}")
    text = _text(stream)
    head = next((ln for ln in text.lstrip("﻿").splitlines() if not ln.startswith("#")), "")
    cols = [c.strip() for c in next(csv.reader([head]), [])]
    pixel_mode = "x" not in cols and {"px", "py"} <= set(cols)
    required = ("tile_id", "px", "py", "confidence") if pixel_mode else ("x", "y", "confidence")
    if pixel_mode and tiles is None:
        raise InputError("pixel coordinates given but no tile metadata supplied", source)
    scale = 100.0 if confidence_scale == "percent" else 1.0
    out: list[DetectionRecord] = []
    seen: set[str] = set()
    for n, header, row in _csv_rows(text, source, required):
        conf = _number(row["confidence"], "confidence", source, n) / scale
        if not 0.0 <= conf <= 1.0:
            raise InputError(f"confidence {row['confidence']!r} outside the "
                             f"{confidence_scale} range", source, row=n)
        tile_id = row.get("tile_id") or None
        if pixel_mode:
            tile = tiles.get(tile_id)
            if tile is None:
                raise InputError(f"unknown tile_id {tile_id!r}", source, row=n)
            px = _number(row["px"], "px", source, n)
            py = _number(row["py"], "py", source, n)
            try:
                pos = pixel_to_world(tile, px, py)
            except ValueError as exc:
                raise InputError(str(exc), source, row=n) from None
        else:
            pos = WorldPoint(_number(row["x"], "x", source, n), _number(row["y"], "y", source, n))
        rid = row.get("id") or f"{epoch}-{n}"
        if rid in seen:
            raise InputError(f"duplicate id {rid!r}", source, row=n)
        seen.add(rid)
        out.append(DetectionRecord(rid, pos, conf, epoch, tile_id))
    return out


def write_detections(records: Iterable[DetectionRecord], stream: TextIO,
                     crs: Optional[str] = None) -> None:
    """World-mode CSV; floats use ``repr`` so re-parsing is exact."""
    if crs:
        stream.write(f"# crs: {crs}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["x", "y", "confidence", "id", "tile_id"])
    for r in records:
        w.writerow([repr(float(r.pos.x)), repr(float(r.pos.y)), repr(float(r.confidence)),
                    r.id, r.tile_id or ""])


def detections_to_text(records, crs=None) -> str:
    buf = io.StringIO()
    write_detections(records, buf, crs)
    return buf.getvalue()


def _line_parts(geom, index, source):
    gtype = geom.get("type") if isinstance(geom, dict) else None
    coords = geom.get("coordinates") if isinstance(geom, dict) else None
    if gtype == "LineString":
        parts = [coords]
    elif gtype == "MultiLineString":
        parts = coords
    else:
        raise InputError(f"geometry type {gtype!r} is not a line", source, feature=index)
    if not isinstance(parts, list):
        raise InputError("coordinates missing", source, feature=index)
    out = []
    for part in parts:
        if not isinstance(part, list) or len(part) < 2:
            raise InputError("line needs at least 2 vertices", source, feature=index)
        verts = []
        for c in part:
            try:
                x, y = float(c[0]), float(c[1])
            except (TypeError, ValueError, IndexError):
                raise InputError(f"bad coordinate {c!r}", source, feature=index) from None
            verts.append(WorldPoint(x, y))
        out.append(verts)
    return out


def parse_roads(stream, source=None) -> RoadNetwork:
    """GeoJSON FeatureCollection of line features with a ``system`` property."""
    text = _text(stream)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}", source) from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise InputError("expected a GeoJSON FeatureCollection", source)
    feats = doc.get("features")
    if not isinstance(feats, list):
        raise InputError("FeatureCollection has no features array", source)
    roads: list[Road] = []
    seen = set()
    for i, feat in enumerate(feats):
        if not isinstance(feat, dict) or feat.get("type") != "Feature":
            raise InputError("not a Feature", source, feature=i)
        props = feat.get("properties") or {}
        system = props.get("system")
        if system not in (ON, OFF):
            raise InputError(f"property 'system' must be 'ON' or 'OFF', got {system!r}",
                             source, feature=i)
        fid = feat.get("id", props.get("id"))
        fid = f"F{i}" if fid is None else str(fid)
        parts = _line_parts(feat.get("geometry"), i, source)
        for k, verts in enumerate(parts):
            pid = fid if len(parts) == 1 else f"{fid}.{k}"
            if pid in seen:
                raise InputError(f"duplicate road id {pid!r}", source, feature=i)
            seen.add(pid)
            try:
                line = Polyline(pid, tuple(verts))
            except ValueError as exc:
                raise InputError(str(exc), source, feature=i) from None
            roads.append(Road(line, system, props.get("name")))
    return RoadNetwork(tuple(roads), crs_label(text))


def roads_to_geojson(network: RoadNetwork) -> str:
    doc = {"type": "FeatureCollection"}
    if network.crs:
        doc["crs"] = {"type": "name", "properties": {"name": network.crs}}
    feats = []
    for r in network.roads:
        props = {"system": r.system}
        if r.name is not None:
            props["name"] = r.name
        feats.append({"type": "Feature", "id": r.id, "properties": props,
                      "geometry": {"type": "LineString",
                                   "coordinates": [[v.x, v.y] for v in r.line.vertices]}})
    doc["features"] = feats
    return json.dumps(doc, separators=(",", ":")) + "\n"


def parse_tiles(stream, source=None) -> list[TileMeta]:
    text = _text(stream)
    cols = ("tile_id", "x_min", "y_max", "resolution", "width_px", "height_px")
    out: list[TileMeta] = []
    seen = set()
    for n, _, row in _csv_rows(text, source, cols):
        tid = row["tile_id"]
        if not tid:
            raise InputError("empty tile_id", source, row=n)
        if tid in seen:
            raise InputError(f"duplicate tile_id {tid!r}", source, row=n)
        seen.add(tid)
        res = _number(row["resolution"], "resolution", source, n)
        if res <= 0:
            raise InputError(f"resolution must be positive, got {res}", source, row=n)
        w = _integer(row["width_px"], "width_px", source, n)
        h = _integer(row["height_px"], "height_px", source, n)
        if w < 1 or h < 1:
            raise InputError("pixel dimensions must be >= 1", source, row=n)
        corner = WorldPoint(_number(row["x_min"], "x_min", source, n),
                            _number(row["y_max"], "y_max", source, n))
        out.append(TileMeta(tid, corner, res, w, h))
    return out


def pixel_to_world(tile: TileMeta, px: float, py: float) -> WorldPoint:
    """North-up mapping from a pixel-edge position to world feet."""
    if not (0 <= px <= tile.width_px and 0 <= py <= tile.height_px):
        raise ValueError(f"pixel ({px}, {py}) outside tile {tile.tile_id!r} "
                         f"({tile.width_px}x{tile.height_px})")
    return WorldPoint(tile.corner.x + px * tile.resolution,
                      tile.corner.y - py * tile.resolution)


def select_tiles(tiles: Iterable[TileMeta], roads: RoadNetwork) -> list[TileMeta]:
    """Tiles whose closed footprint meets at least one centerline."""
    tiles = list(tiles)
    lines = roads.polylines
    if not tiles or not lines:
        return []
    boxes = np.array([[min(v.x for v in ln.vertices), min(v.y for v in ln.vertices),
                       max(v.x for v in ln.vertices), max(v.y for v in ln.vertices)]
                      for ln in lines])
    keep = []
    for t in tiles:
        r = t.rect
        cand = np.nonzero((boxes[:, 0] <= r.x_max) & (boxes[:, 2] >= r.x_min)
                          & (boxes[:, 1] <= r.y_max) & (boxes[:, 3] >= r.y_min))[0]
        if any(rect_intersects_polyline(r, lines[i]) for i in cand):
            keep.append(t)
    return keep


def parse_review(stream, source=None) -> list[ReviewAnnotation]:
    text = _text(stream)
    out: list[ReviewAnnotation] = []
    seen = set()
    for n, _, row in _csv_rows(text, source, ("change_id", "label")):
        cid, label = row["change_id"], row["label"].upper()
        if not cid:
            raise InputError("empty change_id", source, row=n)
        if label not in REVIEW_LABELS:
            raise InputError(f"unknown label {row['label']!r}; expected one of "
                             f"{', '.join(REVIEW_LABELS)}", source, row=n)
        if cid in seen:
            raise InputError(f"duplicate change_id {cid!r}", source, row=n)
        seen.add(cid)
        out.append(ReviewAnnotation(cid, label, row.get("note") or None))
    return out


def parse_points(stream, source=None) -> list[WorldPoint]:
    """Plain ``x,y`` point list; other columns are ignored."""
    text = _text(stream)
    return [WorldPoint(_number(row["x"], "x", source, n), _number(row["y"], "y", source, n))
            for n, _, row in _csv_rows(text, source, ("x", "y"))]


def parse_intersections(stream, source=None) -> list[WorldPoint]:
    """Optional ``x,y`` override for the derived intersection layer."""
    return parse_points(stream, source)


def check_crs(labels: dict[str, Optional[str]], expected: Optional[str] = None) -> Optional[str]:
    """Return the common CRS label; raise naming both labels on mismatch.

    Files that declare nothing are accepted; ``expected`` (from config) must
    match every declared label.
    """
    current, current_src = expected, "config"
    for src, label in labels.items():
        if label is None:
            continue
        if current is None:
            current, current_src = label, src
        elif label != current:
            raise InputError(f"CRS mismatch: {current_src} declares {current!r} but "
                             f"{src} declares {label!r}", src)
    return current
