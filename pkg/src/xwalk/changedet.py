"""Bi-temporal comparison of two masked detection epochs.

All "within r" tests are closed balls (distance <= r, with a 1e-6 ft
allowance), so a point exactly on a threshold counts as inside.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .geometry import EPS, WorldPoint
from .ingest import NEW, OFF, OLD, ON, DetectionRecord, RoadNetwork
from .spatial_index import PointIndex, SegmentIndex

NEW_CANDIDATE = "NEW-CANDIDATE"
REMOVED_CANDIDATE = "REMOVED-CANDIDATE"
KINDS = (NEW_CANDIDATE, REMOVED_CANDIDATE)

CANDIDATE, ST_NEW, MODIFIED, FALSE_POSITIVE = "CANDIDATE", "NEW", "MODIFIED", "FALSE-POSITIVE"
STATUSES = (CANDIDATE, ST_NEW, MODIFIED, FALSE_POSITIVE)


@dataclass(frozen=True)
class Thresholds:
    mask_radius: float = 100.0
    change_radius: float = 36.0
    dedup_radius: float = 24.0
    eval_radius: float = 30.0
    intersection_radius: float = 90.0
    confidence_floor: float = 0.5

    def __post_init__(self):
        for name in ("mask_radius", "change_radius", "dedup_radius", "eval_radius",
                     "intersection_radius"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive number, got {v!r}")
        if not 0.0 <= self.confidence_floor <= 1.0:
            raise ValueError(f"confidence_floor must lie in [0, 1], got {self.confidence_floor!r}")


@dataclass(frozen=True)
class ChangeRecord:
    change_id: str
    pos: WorldPoint
    kind: str
    confidence: float
    nearest_other_epoch_dist: float
    system: Optional[str] = None
    status: str = CANDIDATE
    source_id: Optional[str] = None
    source_epoch_labels: tuple[str, str] = field(default=(OLD, NEW))
    discard_reason: Optional[str] = None


_ID_RE = re.compile(r"^(.*?)(\d+)$")


def change_sort_key(change_id: str):
    """Natural order: ``C2`` before ``C10``."""
    m = _ID_RE.match(change_id)
    if m:
        return (m.group(1), int(m.group(2)), change_id)
    return (change_id, -1, change_id)


def sort_changes(changes):
    return sorted(changes, key=lambda c: change_sort_key(c.change_id))


def _coords(points: Sequence[DetectionRecord]):
    x = np.fromiter((p.pos.x for p in points), dtype=np.float64, count=len(points))
    y = np.fromiter((p.pos.y for p in points), dtype=np.float64, count=len(points))
    return x, y


def mask_filter(points: Sequence[DetectionRecord], roads: RoadNetwork,
                mask_radius: float = 100.0, index: Optional[SegmentIndex] = None,
                ) -> list[DetectionRecord]:
    """Keep detections within ``mask_radius`` of any centerline, in order."""
    if index is None:
        if not len(roads):
            raise ValueError("road network is empty; nothing to mask against")
        index = SegmentIndex(roads.polylines)
    if not points:
        return []
    _, dist = index.nearest_many(*_coords(points))
    keep = dist <= mask_radius + EPS
    return [p for p, k in zip(points, keep) if k]


def _inverse_selection(query: Sequence[DetectionRecord], ref: Sequence[DetectionRecord],
                       radius: float, kind: str, start: int, labels) -> list[ChangeRecord]:
    if not query:
        return []
    if ref:
        index = PointIndex((i, p.pos) for i, p in enumerate(ref))
        _, dist = index.nearest_many(*_coords(query))
    else:
        dist = np.full(len(query), math.inf)
    out = []
    n = start
    for p, d in zip(query, dist):
        if d > radius + EPS:
            out.append(ChangeRecord(f"C{n}", p.pos, kind, p.confidence, float(d),
                                    source_id=p.id, source_epoch_labels=tuple(labels)))
            n += 1
    return out


def detect_new(new_pts, old_pts, change_radius: float = 36.0, start: int = 1,
               labels=(OLD, NEW)) -> list[ChangeRecord]:
    """New-epoch points with no old-epoch point within ``change_radius``."""
    return _inverse_selection(new_pts, old_pts, change_radius, NEW_CANDIDATE, start, labels)


def detect_removed(old_pts, new_pts, change_radius: float = 36.0, start: int = 1,
                   labels=(OLD, NEW)) -> list[ChangeRecord]:
    return _inverse_selection(old_pts, new_pts, change_radius, REMOVED_CANDIDATE, start, labels)


def detect_changes(old_pts, new_pts, change_radius: float = 36.0, labels=(OLD, NEW),
                   executor=None) -> list[ChangeRecord]:
    """Both directions; ids are ``C1..`` over new candidates then removed ones."""
    if executor is not None:
        f_new = executor.submit(detect_new, new_pts, old_pts, change_radius, 1, labels)
        f_rem = executor.submit(detect_removed, old_pts, new_pts, change_radius, 1, labels)
        added, removed = f_new.result(), f_rem.result()
    else:
        added = detect_new(new_pts, old_pts, change_radius, 1, labels)
        removed = detect_removed(old_pts, new_pts, change_radius, 1, labels)
    offset = len(added)
    removed = [replace(c, change_id=f"C{k + offset}") for k, c in
               enumerate(removed, start=1)]
    return added + removed


def split_by_system(changes: Sequence[ChangeRecord], roads: RoadNetwork,
                    mask_radius: float = 100.0) -> list[ChangeRecord]:
    """Tag each change ON when an ON-system centerline lies within ``mask_radius``."""
    on_lines = roads.by_system(ON)
    if not changes:
        return []
    if not on_lines:
        return [replace(c, system=OFF) for c in changes]
    index = SegmentIndex(on_lines)
    x = np.array([c.pos.x for c in changes])
    y = np.array([c.pos.y for c in changes])
    _, dist = index.nearest_many(x, y)
    return [replace(c, system=ON if d <= mask_radius + EPS else OFF)
            for c, d in zip(changes, dist)]
