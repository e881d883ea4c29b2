"""Deduplication, intersection derivation, false-positive filtering, review."""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .changedet import FALSE_POSITIVE, ChangeRecord, change_sort_key
from .geometry import EPS, WorldPoint, _seg_dist, classify_intersection
from .ingest import InputError, ReviewAnnotation, RoadNetwork
from .spatial_index import PointIndex

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntersectionPoint:
    pos: WorldPoint
    degree: int
    polyline_ids: tuple = ()


def _record_id(r):
    cid = getattr(r, "change_id", None)
    return cid if cid is not None else r.id


def nms_order(records: Sequence) -> list[int]:
    """Visiting order: confidence desc, then x, y, id ascending."""
    return sorted(range(len(records)),
                  key=lambda i: (-records[i].confidence, records[i].pos[0], records[i].pos[1],
                                 change_sort_key(str(_record_id(records[i])))))


def dedup_witnesses(records: Sequence, dedup_radius: float = 24.0):
    """Greedy NMS returning ``(keep_mask, witness_index)`` over ``records``."""
    if dedup_radius <= 0:
        raise ValueError("dedup_radius must be positive")
    n = len(records)
    if n == 0:
        return np.zeros(0, dtype=bool), np.zeros(0, dtype=np.int64)
    index = PointIndex((i, r.pos) for i, r in enumerate(records))
    return index.nms(nms_order(records), dedup_radius + EPS)


def dedup(records: Sequence, dedup_radius: float = 24.0) -> list:
    """Drop lower-confidence points within ``dedup_radius`` of a kept one.

    Retained records keep their input order.
    """
    keep, _ = dedup_witnesses(records, dedup_radius)
    return [r for r, k in zip(records, keep) if k]


def _polyline_endpoints(line):
    return (line.vertices[0], line.vertices[-1])


def derive_intersections(roads: RoadNetwork, snap_tol: float = 1.0,
                         overlaps: Optional[list] = None) -> list[IntersectionPoint]:
    """Junctions between distinct polylines, clustered within ``snap_tol``.

    Raw junction points are proper crossings, endpoint touches, and polyline
    endpoints lying within ``snap_tol`` of another polyline.  Collinear
    overlaps yield no point; they are appended to ``overlaps`` when given.
    """
    if snap_tol <= 0:
        raise ValueError("snap_tol must be positive")
    lines = sorted(roads.polylines, key=lambda ln: ln.id)
    segs = []  # (line index, ordinal, a, b)
    for li, line in enumerate(lines):
        for k, (a, b) in enumerate(line.segments()):
            segs.append((li, k, a, b))
    if not segs:
        return []
    lens = [math.dist(a, b) for _, _, a, b in segs]
    cell = max(float(np.median(lens)), 4 * snap_tol, 1.0)
    buckets = defaultdict(list)
    for s, (_, _, a, b) in enumerate(segs):
        x0 = math.floor((min(a[0], b[0]) - snap_tol) / cell)
        x1 = math.floor((max(a[0], b[0]) + snap_tol) / cell)
        y0 = math.floor((min(a[1], b[1]) - snap_tol) / cell)
        y1 = math.floor((max(a[1], b[1]) + snap_tol) / cell)
        for ix in range(x0, x1 + 1):
            for iy in range(y0, y1 + 1):
                buckets[(ix, iy)].append(s)
    pairs = set()
    for members in buckets.values():
        for i in range(len(members)):
            si = members[i]
            for sj in members[i + 1:]:
                if segs[si][0] != segs[sj][0]:
                    pairs.add((si, sj) if si < sj else (sj, si))

    raw: list[tuple[WorldPoint, int, int]] = []
    for si, sj in sorted(pairs):
        li, _, a1, a2 = segs[si]
        lj, _, b1, b2 = segs[sj]
        point, overlap = classify_intersection(a1, a2, b1, b2)
        if overlap:
            if overlaps is not None:
                overlaps.append((lines[li].id, lines[lj].id))
            log.warning("collinear overlap between %s and %s", lines[li].id, lines[lj].id)
            continue
        if point is not None:
            raw.append((point, li, lj))
            continue
        # near-miss endpoint touches
        for li_, lj_, ends, (c, d) in ((li, lj, (a1, a2), (b1, b2)), (lj, li, (b1, b2), (a1, a2))):
            line_ends = _polyline_endpoints(lines[li_])
            for e in ends:
                if e in line_ends and _seg_dist(e[0], e[1], c[0], c[1], d[0], d[1]) <= snap_tol + EPS:
                    raw.append((WorldPoint(float(e[0]), float(e[1])), li_, lj_))
    if not raw:
        return []

    # single-linkage clustering under snap_tol
    index = PointIndex((i, p) for i, (p, _, _) in enumerate(raw))
    parent = list(range(len(raw)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, (p, _, _) in enumerate(raw):
        for j in index.within_indices(p, snap_tol + EPS):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    clusters = defaultdict(list)
    for i in range(len(raw)):
        clusters[find(i)].append(i)
    out = []
    for members in clusters.values():
        pts = sorted(raw[i][0] for i in members)
        incident = {raw[i][1] for i in members} | {raw[i][2] for i in members}
        x = math.fsum(p[0] for p in pts) / len(pts)
        y = math.fsum(p[1] for p in pts) / len(pts)
        ids = tuple(sorted(lines[i].id for i in incident))
        out.append(IntersectionPoint(WorldPoint(x, y), len(incident), ids))
    out.sort(key=lambda ip: (ip.pos.x, ip.pos.y))
    return out


def _positions(intersections: Iterable) -> list[WorldPoint]:
    return [getattr(p, "pos", p) for p in intersections]


def fp_filter(changes: Sequence[ChangeRecord], intersections: Iterable,
              confidence_floor: float = 0.5, intersection_radius: float = 90.0):
    """Split changes into ``(retained, discarded)``.

    A change is discarded only when its confidence is below the floor AND it
    lies farther than ``intersection_radius`` from every intersection.
    Discarded records come back with status FALSE-POSITIVE and a reason.
    """
    pts = _positions(intersections)
    if not changes:
        return [], []
    if pts:
        index = PointIndex(enumerate(pts))
        _, dist = index.nearest_many([c.pos.x for c in changes], [c.pos.y for c in changes])
    else:
        dist = np.full(len(changes), math.inf)
    retained, discarded = [], []
    for c, d in zip(changes, dist):
        if c.confidence < confidence_floor and d > intersection_radius + EPS:
            reason = (f"confidence {c.confidence:.3f} < {confidence_floor:g} and nearest "
                      f"intersection {d:.3f} ft > {intersection_radius:g} ft")
            discarded.append(replace(c, status=FALSE_POSITIVE, discard_reason=reason))
        else:
            retained.append(c)
    return retained, discarded


def apply_review(changes: Sequence[ChangeRecord],
                 annotations: Iterable[ReviewAnnotation]) -> list[ChangeRecord]:
    """Set NEW / MODIFIED / FALSE-POSITIVE from manual review labels."""
    labels = {}
    for a in annotations:
        if a.change_id in labels:
            raise InputError(f"duplicate annotation for {a.change_id!r}", "review")
        labels[a.change_id] = a.label
    known = {c.change_id for c in changes}
    unknown = sorted((cid for cid in labels if cid not in known), key=change_sort_key)
    if unknown:
        raise InputError(f"unknown change id(s): {', '.join(unknown)}", "review")
    return [replace(c, status=labels[c.change_id]) if c.change_id in labels else c
            for c in changes]
