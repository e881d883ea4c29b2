"""Seeded synthetic scenarios and O(n^2) reference oracles.

A scenario is a jittered street grid with a few diagonals, ground-truth
crosswalks on the legs of every derived intersection, and two detection
epochs produced from the truth by jitter, drops, duplicates and clutter.
Planted changes are kept at least two change radii from every other truth
point, so with jitter truncated at 3 sigma they remain recoverable.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geometry import EPS, Polyline, Rect, WorldPoint, _seg_dist, dist_pp
from .ingest import NEW, OFF, OLD, ON, DetectionRecord, Road, RoadNetwork, \
    roads_to_geojson, write_detections
from .postprocess import IntersectionPoint, derive_intersections
from .spatial_index import PointIndex


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 0
    extent: Rect = Rect(0.0, 0.0, 6000.0, 6000.0)
    grid_spacing: float = 500.0
    road_count: Optional[int] = None
    diagonal_count: int = 1
    on_fraction: float = 0.25
    vertex_spacing: float = 250.0
    road_jitter: float = 5.0
    crosswalks_per_intersection: int = 4
    crosswalk_offset: float = 40.0
    planted_new: int = 0
    planted_removed: int = 0
    jitter_sigma: float = 0.0
    drop_rate: float = 0.0
    duplicate_rate: float = 0.0
    clutter_rate: float = 0.0
    clutter_confidence_range: tuple = (0.05, 0.45)
    true_confidence_range: tuple = (0.6, 0.99)
    change_radius: float = 36.0
    dedup_radius: float = 24.0
    mask_radius: float = 100.0
    intersection_radius: float = 90.0

    def __post_init__(self):
        if not isinstance(self.extent, Rect):
            object.__setattr__(self, "extent", Rect(*self.extent))
        for name in ("clutter_confidence_range", "true_confidence_range"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi <= 1")
            object.__setattr__(self, name, (float(lo), float(hi)))
        for name in ("drop_rate", "duplicate_rate", "on_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be non-negative")
        if self.grid_spacing <= 2 * self.crosswalk_offset:
            raise ValueError("grid_spacing too small for the crosswalk offset")
        if self.jitter_sigma < 0 or self.road_jitter < 0:
            raise ValueError("jitter must be non-negative")

    def to_json(self) -> str:
        d = asdict(self)
        e = self.extent
        d["extent"] = [e.x_min, e.y_min, e.x_max, e.y_max]
        d["clutter_confidence_range"] = list(self.clutter_confidence_range)
        d["true_confidence_range"] = list(self.true_confidence_range)
        return json.dumps(d, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        d = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {', '.join(sorted(unknown))}")
        if "extent" in d:
            d["extent"] = Rect(*d["extent"])
        for k in ("clutter_confidence_range", "true_confidence_range"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass
class ScenarioTruth:
    roads: RoadNetwork
    intersections: list[IntersectionPoint]
    gt_old: list[WorldPoint]
    gt_new: list[WorldPoint]
    expected_new_changes: list[WorldPoint]
    expected_removed_changes: list[WorldPoint]
    planted_ids: dict = field(default_factory=dict)   # detection id -> truth point
    clutter_ids: set = field(default_factory=set)
    duplicate_ids: set = field(default_factory=set)
    dropped: int = 0


def _densify(points: Sequence[tuple[float, float]], step: float):
    out = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        n = max(1, math.ceil(dist_pp(a, b) / step))
        for k in range(1, n + 1):
            t = k / n
            out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return out


def _grid_network(spec: ScenarioSpec, rng) -> RoadNetwork:
    e = spec.extent
    xs = np.arange(e.x_min + spec.grid_spacing / 2, e.x_max, spec.grid_spacing)
    ys = np.arange(e.y_min + spec.grid_spacing / 2, e.y_max, spec.grid_spacing)
    specs = [("V", x) for x in xs] + [("H", y) for y in ys]
    if spec.road_count is not None:
        # alternate directions so a cap keeps a grid, not a comb
        v = [s for s in specs if s[0] == "V"]
        h = [s for s in specs if s[0] == "H"]
        merged = [s for pair in zip(v, h) for s in pair] + v[len(h):] + h[len(v):]
        specs = merged[:spec.road_count]
    lines = []
    for k, (axis, c) in enumerate(specs):
        if axis == "V":
            base = _densify([(c, e.y_min), (c, e.y_max)], spec.vertex_spacing)
            verts = [(x + rng.uniform(-spec.road_jitter, spec.road_jitter), y) for x, y in base]
        else:
            base = _densify([(e.x_min, c), (e.x_max, c)], spec.vertex_spacing)
            verts = [(x, y + rng.uniform(-spec.road_jitter, spec.road_jitter)) for x, y in base]
        lines.append((f"R{k:04d}", verts))
    w, h = e.x_max - e.x_min, e.y_max - e.y_min
    for d in range(spec.diagonal_count):
        # diagonals start a third of a block off the grid lines
        off = (d + 1 / 3) * spec.grid_spacing
        if d % 2 == 0:
            a, b = (e.x_min + off, e.y_min), (e.x_max, e.y_max - off)
        else:
            a, b = (e.x_min, e.y_max - off), (e.x_max - off, e.y_min)
        if a[0] >= e.x_max or b[1] >= e.y_max or min(w, h) <= off:
            continue
        lines.append((f"D{d:03d}", _densify([a, b], spec.vertex_spacing)))
    n_on = round(spec.on_fraction * len(lines))
    on_idx = set(rng.choice(len(lines), size=n_on, replace=False).tolist()) if n_on else set()
    roads = tuple(Road(Polyline(pid, tuple(v)), ON if i in on_idx else OFF)
                  for i, (pid, v) in enumerate(lines))
    return RoadNetwork(roads)


class _Chainage:
    """Arc-length access along a polyline."""

    def __init__(self, line: Polyline):
        self.v = line.vertices
        self.cum = [0.0]
        for a, b in line.segments():
            self.cum.append(self.cum[-1] + dist_pp(a, b))

    @property
    def length(self):
        return self.cum[-1]

    def locate(self, p) -> float:
        best, best_s = math.inf, 0.0
        for k, (a, b) in enumerate(zip(self.v[:-1], self.v[1:])):
            d = _seg_dist(p[0], p[1], a[0], a[1], b[0], b[1])
            if d < best:
                seg = self.cum[k + 1] - self.cum[k]
                t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (seg * seg)
                best, best_s = d, self.cum[k] + min(max(t, 0.0), 1.0) * seg
        return best_s

    def at(self, s: float) -> WorldPoint:
        k = min(max(bisect.bisect_right(self.cum, s) - 1, 0), len(self.v) - 2)
        seg = self.cum[k + 1] - self.cum[k]
        t = (s - self.cum[k]) / seg
        a, b = self.v[k], self.v[k + 1]
        return WorldPoint(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def _place_crosswalks(spec, roads, intersections) -> list[WorldPoint]:
    chain = {r.id: _Chainage(r.line) for r in roads.roads}
    out: list[WorldPoint] = []
    for ip in intersections:
        legs = []
        for pid in ip.polyline_ids:
            c = chain[pid]
            s = c.locate(ip.pos)
            for sign in (-1, 1):
                t = s + sign * spec.crosswalk_offset
                if 0.0 <= t <= c.length:
                    legs.append(c.at(t))
        legs.sort(key=lambda p: math.atan2(p[1] - ip.pos[1], p[0] - ip.pos[0]))
        out.extend(legs[:spec.crosswalks_per_intersection])
    return out


class _Separation:
    """Incremental minimum-separation check against an accepted point set."""

    def __init__(self, cell: float):
        self.cell = cell
        self.cells: dict = {}

    def _key(self, p):
        return (math.floor(p[0] / self.cell), math.floor(p[1] / self.cell))

    def clear(self, p, radius: float) -> bool:
        kx, ky = self._key(p)
        reach = math.ceil(radius / self.cell)
        for ix in range(kx - reach, kx + reach + 1):
            for iy in range(ky - reach, ky + reach + 1):
                for q in self.cells.get((ix, iy), ()):
                    if dist_pp(p, q) < radius:
                        return False
        return True

    def add(self, p):
        self.cells.setdefault(self._key(p), []).append(p)


def _point_on_network(rng, roads: RoadNetwork, chains, lateral: float) -> WorldPoint:
    line = roads.roads[int(rng.integers(len(roads.roads)))]
    c = chains[line.id]
    s = float(rng.uniform(0.0, c.length))
    p = c.at(s)
    if lateral <= 0:
        return p
    q = c.at(min(s + 1.0, c.length)) if s + 1.0 <= c.length else c.at(s - 1.0)
    dx, dy = q[0] - p[0], q[1] - p[1]
    n = math.sqrt(dx * dx + dy * dy) or 1.0
    off = float(rng.uniform(-lateral, lateral))
    return WorldPoint(p[0] - dy / n * off, p[1] + dx / n * off)


def _plant(rng, count, roads, chains, taken: _Separation, sep, ix_index, extent, what):
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 200 * count + 1000:
            raise ValueError(f"infeasible planting: could not place {count} {what} "
                             f"points {sep:g} ft apart inside the extent")
        p = _point_on_network(rng, roads, chains, 0.0)
        if not extent.contains(p):
            continue
        if ix_index is not None:
            hit = ix_index.query_nearest(p)
            if hit is not None and hit[1] < sep:
                continue
        if taken.clear(p, sep):
            taken.add(p)
            out.append(p)
    return out


def _jitter(rng, sigma):
    if sigma <= 0:
        return 0.0, 0.0
    while True:
        dx, dy = rng.normal(0.0, sigma, 2)
        if dx * dx + dy * dy <= 9.0 * sigma * sigma:
            return float(dx), float(dy)


def gen_scenario(spec: ScenarioSpec):
    """Build ``(truth, old detections, new detections)`` from ``spec``."""
    rng = np.random.default_rng(spec.seed)
    roads = _grid_network(spec, rng)
    intersections = derive_intersections(roads)
    common = _place_crosswalks(spec, roads, intersections)
    chains = {r.id: _Chainage(r.line) for r in roads.roads}

    sep = 2.0 * spec.change_radius
    taken = _Separation(max(sep, 1.0))
    for p in common:
        taken.add(p)
    ix_index = PointIndex(enumerate(ip.pos for ip in intersections)) if intersections else None
    planted_new = _plant(rng, spec.planted_new, roads, chains, taken, sep, ix_index,
                         spec.extent, "new")
    planted_removed = _plant(rng, spec.planted_removed, roads, chains, taken, sep, ix_index,
                             spec.extent, "removed")

    truth = ScenarioTruth(roads, intersections, common + planted_removed, common + planted_new,
                          planted_new, planted_removed)
    planted_new_set = set(planted_new)
    planted_removed_set = set(planted_removed)

    # clutter: low confidence, off intersections, away from every truth point
    lateral = 0.8 * spec.mask_radius
    clutter_sep = spec.intersection_radius + 1.0
    clutter = {}
    for epoch, gt in ((OLD, truth.gt_old), (NEW, truth.gt_new)):
        want = round(spec.clutter_rate * len(gt))
        pts, attempts = [], 0
        while len(pts) < want:
            attempts += 1
            if attempts > 200 * want + 1000:
                raise ValueError("infeasible clutter placement")
            p = _point_on_network(rng, roads, chains, lateral)
            if not spec.extent.contains(p):
                continue
            if ix_index is not None and ix_index.query_nearest(p)[1] <= clutter_sep:
                continue
            if not taken.clear(p, sep):
                continue
            pts.append(p)
        clutter[epoch] = pts

    lo, hi = spec.true_confidence_range
    clo, chi = spec.clutter_confidence_range
    epochs = {}
    for epoch, gt in ((OLD, truth.gt_old), (NEW, truth.gt_new)):
        recs: list[DetectionRecord] = []
        tag = epoch[0].lower()

        def emit(p, conf):
            rid = f"{tag}{len(recs) + 1}"
            recs.append(DetectionRecord(rid, WorldPoint(float(p[0]), float(p[1])),
                                        float(conf), epoch))
            return rid

        for p in gt:
            if rng.random() < spec.drop_rate:
                truth.dropped += 1
                continue
            dx, dy = _jitter(rng, spec.jitter_sigma)
            q = (p[0] + dx, p[1] + dy)
            conf = float(rng.uniform(lo, hi))
            rid = emit(q, conf)
            if p in planted_new_set or p in planted_removed_set:
                truth.planted_ids[rid] = p
            if rng.random() < spec.duplicate_rate:
                ang = float(rng.uniform(0, 2 * math.pi))
                rad = float(rng.uniform(0.0, 0.5 * spec.dedup_radius))
                dup = (q[0] + rad * math.cos(ang), q[1] + rad * math.sin(ang))
                did = emit(dup, conf * float(rng.uniform(0.5, 0.95)))
                truth.duplicate_ids.add(did)
                if p in planted_new_set or p in planted_removed_set:
                    truth.planted_ids[did] = p
        for p in clutter[epoch]:
            truth.clutter_ids.add(emit(p, rng.uniform(clo, chi)))
        epochs[epoch] = recs
    return truth, epochs[OLD], epochs[NEW]


def write_scenario(out_dir, spec: ScenarioSpec, crs: Optional[str] = None) -> dict:
    """Generate and write the scenario as ingestable files; returns the paths."""
    truth, old, new = gen_scenario(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    roads = RoadNetwork(truth.roads.roads, crs)
    paths = {
        "roads": out / "roads.geojson",
        "old": out / "old.csv",
        "new": out / "new.csv",
        "truth_old": out / "truth_old.csv",
        "truth_new": out / "truth_new.csv",
        "expected_new": out / "expected_new.csv",
        "expected_removed": out / "expected_removed.csv",
        "scenario": out / "scenario.json",
    }
    paths["roads"].write_text(roads_to_geojson(roads))
    for key, recs in (("old", old), ("new", new)):
        with open(paths[key], "w", newline="") as fh:
            write_detections(recs, fh, crs)
    for key, pts in (("truth_old", truth.gt_old), ("truth_new", truth.gt_new),
                     ("expected_new", truth.expected_new_changes),
                     ("expected_removed", truth.expected_removed_changes)):
        lines = [f"# crs: {crs}"] if crs else []
        lines.append("x,y")
        lines.extend(f"{p[0]!r},{p[1]!r}" for p in pts)
        paths[key].write_text("\n".join(lines) + "\n")
    paths["scenario"].write_text(spec.to_json())
    return {k: str(v) for k, v in paths.items()}


def demo_spec(seed: int = 0) -> ScenarioSpec:
    """Small scenario with a few planted changes and every noise source on."""
    return ScenarioSpec(seed=seed, planted_new=12, planted_removed=6, jitter_sigma=3.0,
                        drop_rate=0.01, duplicate_rate=0.05, clutter_rate=0.03)


def county_scale_spec(seed: int = 2019) -> ScenarioSpec:
    """County-sized scenario for scale testing.

    Yields about 12.8k old and 12.1k new detections, ~2.1k raw change
    candidates of which ~300 lie on ON-system roads, over ~14k segments.
    """
    return ScenarioSpec(
        seed=seed, extent=Rect(0.0, 0.0, 42000.0, 42000.0), grid_spacing=732.0,
        diagonal_count=4, on_fraction=0.13, vertex_spacing=350.0,
        crosswalks_per_intersection=3, planted_new=70, planted_removed=720,
        jitter_sigma=3.0, drop_rate=0.015, duplicate_rate=0.06, clutter_rate=0.04)


# ---------------------------------------------------------------- oracles

def _xy(points):
    pts = [getattr(p, "pos", p) for p in points]
    return (np.array([p[0] for p in pts], dtype=np.float64),
            np.array([p[1] for p in pts], dtype=np.float64))


def _min_dists(query, ref, block: int = 512):
    """Exhaustive nearest distance from every query point to ``ref``."""
    qx, qy = _xy(query)
    rx, ry = _xy(ref)
    out = np.full(len(qx), np.inf)
    if len(rx) == 0:
        return out
    for s in range(0, len(qx), block):
        dx = rx[None, :] - qx[s:s + block, None]
        dy = ry[None, :] - qy[s:s + block, None]
        out[s:s + block] = np.sqrt(dx * dx + dy * dy).min(axis=1)
    return out


def oracle_changes(old: Sequence, new: Sequence, r: float):
    """Exhaustive pairwise version of new/removed inverse selection.

    Returns ``(new_indices, removed_indices)``: positions in ``new`` with no
    ``old`` point within ``r`` and vice versa.
    """
    added = np.nonzero(_min_dists(new, old) > r + EPS)[0].tolist()
    removed = np.nonzero(_min_dists(old, new) > r + EPS)[0].tolist()
    return added, removed


def oracle_match(gt: Sequence, m: Sequence, r: float) -> dict:
    """Direct application of the determination rules over all pairs."""
    fn = int(np.count_nonzero(_min_dists(gt, m) > r + EPS))
    fp = int(np.count_nonzero(_min_dists(m, gt) > r + EPS))
    return {"gt": len(gt), "m": len(m), "tp": len(gt) - fn, "fn": fn, "fp": fp}
