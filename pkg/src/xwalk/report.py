"""Change inventories, summaries and run manifests.

Outputs are byte-stable: features sorted by change id, numbers written with
exactly three decimals, JSON keys in a fixed order.  An infinite
``nearest_other_epoch_dist_ft`` (other epoch empty) is written as ``null``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import __version__
from .changedet import KINDS, STATUSES, ChangeRecord, sort_changes
from .geometry import WorldPoint
from .ingest import OFF, ON, InputError

PROPERTY_ORDER = ("change_id", "kind", "status", "system", "confidence",
                  "nearest_other_epoch_dist_ft", "source_id", "epoch_old", "epoch_new")
CSV_COLUMNS = ("change_id", "x", "y") + PROPERTY_ORDER[1:]


@dataclass(frozen=True)
class ChangeSummary:
    total_changes: int
    on_system: int
    off_system: int
    by_status: dict = field(default_factory=dict)
    by_kind: dict = field(default_factory=dict)
    epochs: tuple = ("OLD", "NEW")
    thresholds: Optional[dict] = None

    def as_dict(self) -> dict:
        return {
            "total_changes": self.total_changes,
            "on_system": self.on_system,
            "off_system": self.off_system,
            "by_status": dict(self.by_status),
            "by_kind": dict(self.by_kind),
            "epochs": {"old": self.epochs[0], "new": self.epochs[1]},
            "thresholds": self.thresholds,
        }


def summarize(changes: Sequence[ChangeRecord], thresholds=None, epochs=None) -> ChangeSummary:
    by_status = {s: 0 for s in STATUSES}
    by_kind = {k: 0 for k in KINDS}
    on = off = 0
    for c in changes:
        by_status[c.status] += 1
        by_kind[c.kind] += 1
        if c.system == ON:
            on += 1
        else:
            off += 1
    if epochs is None:
        epochs = changes[0].source_epoch_labels if changes else ("OLD", "NEW")
    if thresholds is not None and not isinstance(thresholds, dict):
        thresholds = dict(vars(thresholds))
    return ChangeSummary(len(changes), on, off, by_status, by_kind, tuple(epochs), thresholds)


def _num(v: Optional[float]) -> str:
    if v is None or (isinstance(v, float) and math.isinf(v)):
        return "null"
    return f"{v:.3f}"


def _properties(c: ChangeRecord) -> list[tuple[str, str]]:
    old_label, new_label = c.source_epoch_labels
    props = [
        ("change_id", json.dumps(c.change_id)),
        ("kind", json.dumps(c.kind)),
        ("status", json.dumps(c.status)),
        ("system", json.dumps(c.system)),
        ("confidence", _num(c.confidence)),
        ("nearest_other_epoch_dist_ft", _num(c.nearest_other_epoch_dist)),
        ("source_id", json.dumps(c.source_id)),
        ("epoch_old", json.dumps(old_label)),
        ("epoch_new", json.dumps(new_label)),
    ]
    if c.discard_reason is not None:
        props.append(("discard_reason", json.dumps(c.discard_reason)))
    return props


def export_geojson(changes: Iterable[ChangeRecord], crs: Optional[str] = None) -> str:
    """FeatureCollection of Point features, one per line."""
    lines = ['{"type":"FeatureCollection",']
    if crs:
        lines.append(f'"crs":{{"type":"name","properties":{{"name":{json.dumps(crs)}}}}},')
    feats = []
    for c in sort_changes(changes):
        props = ",".join(f"{json.dumps(k)}:{v}" for k, v in _properties(c))
        feats.append('{"type":"Feature","geometry":{"type":"Point","coordinates":['
                     f"{_num(c.pos.x)},{_num(c.pos.y)}]}},\"properties\":{{{props}}}}}")
    if feats:
        lines.append('"features":[\n' + ",\n".join(feats) + "\n]}")
    else:
        lines.append('"features":[]}')
    return "\n".join(lines) + "\n"


def _require(props, key, index, source):
    if key not in props:
        raise InputError(f"missing property {key!r}", source, feature=index)
    return props[key]


def parse_changes_geojson(stream, source=None) -> list[ChangeRecord]:
    text = stream if isinstance(stream, str) else stream.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}", source) from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection" \
            or not isinstance(doc.get("features"), list):
        raise InputError("expected a GeoJSON FeatureCollection", source)
    out = []
    for i, feat in enumerate(doc["features"]):
        geom = (feat or {}).get("geometry") or {}
        if geom.get("type") != "Point":
            raise InputError("change features must be Points", source, feature=i)
        try:
            x, y = (float(v) for v in geom["coordinates"][:2])
        except (KeyError, TypeError, ValueError):
            raise InputError("bad Point coordinates", source, feature=i) from None
        props = feat.get("properties") or {}
        kind = _require(props, "kind", i, source)
        status = _require(props, "status", i, source)
        system = props.get("system")
        if kind not in KINDS:
            raise InputError(f"unknown kind {kind!r}", source, feature=i)
        if status not in STATUSES:
            raise InputError(f"unknown status {status!r}", source, feature=i)
        if system not in (ON, OFF, None):
            raise InputError(f"unknown system {system!r}", source, feature=i)
        dist = props.get("nearest_other_epoch_dist_ft")
        try:
            conf = float(_require(props, "confidence", i, source))
            dist = math.inf if dist is None else float(dist)
        except (TypeError, ValueError):
            raise InputError("non-numeric confidence or distance", source, feature=i) from None
        out.append(ChangeRecord(
            change_id=str(_require(props, "change_id", i, source)),
            pos=WorldPoint(x, y), kind=kind, confidence=conf,
            nearest_other_epoch_dist=dist, system=system, status=status,
            source_id=props.get("source_id"),
            source_epoch_labels=(props.get("epoch_old", "OLD"), props.get("epoch_new", "NEW")),
            discard_reason=props.get("discard_reason")))
    return out


def export_csv(changes: Iterable[ChangeRecord], with_reason: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = CSV_COLUMNS + (("discard_reason",) if with_reason else ())
    w.writerow(cols)
    for c in sort_changes(changes):
        dist = c.nearest_other_epoch_dist
        row = [c.change_id, f"{c.pos.x:.3f}", f"{c.pos.y:.3f}", c.kind, c.status,
               c.system or "", f"{c.confidence:.3f}",
               "" if math.isinf(dist) else f"{dist:.3f}", c.source_id or "",
               c.source_epoch_labels[0], c.source_epoch_labels[1]]
        if with_reason:
            row.append(c.discard_reason or "")
        w.writerow(row)
    return buf.getvalue()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(inputs: dict, thresholds=None, seed=None, extra=None) -> dict:
    """``inputs`` maps a role name to a file path (None entries skipped)."""
    files = {}
    for role in sorted(inputs):
        path = inputs[role]
        if path is None:
            continue
        files[role] = {"path": Path(path).name, "sha256": file_digest(path)}
    if thresholds is not None and not isinstance(thresholds, dict):
        thresholds = dict(vars(thresholds))
    manifest = {"tool": "xwalk", "version": __version__, "inputs": files,
                "thresholds": thresholds, "seed": seed}
    if extra:
        manifest.update(extra)
    return manifest


def export_summary(summary: ChangeSummary, manifest: Optional[dict] = None) -> str:
    doc = {"summary": summary.as_dict(), "manifest": manifest or {}}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
