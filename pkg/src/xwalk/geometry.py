"""Planar geometry in a single projected CRS (US survey feet).

Distances everywhere are computed as ``sqrt(dx*dx + dy*dy)`` so that the
accelerated kernels, the brute-force oracles and these primitives agree to
the last bit at threshold boundaries.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

# absolute tolerance used at every distance threshold (ft)
EPS = 1e-6
MIN_VERTEX_GAP = 1e-6


class WorldPoint(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Polyline:
    id: str
    vertices: tuple[WorldPoint, ...]

    def __post_init__(self):
        verts = tuple(WorldPoint(float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise ValueError(f"polyline {self.id!r} needs at least 2 vertices")
        for i, (x, y) in enumerate(verts):
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"polyline {self.id!r} vertex {i} is not finite")
        for i in range(1, len(verts)):
            if dist_pp(verts[i - 1], verts[i]) <= MIN_VERTEX_GAP:
                raise ValueError(
                    f"polyline {self.id!r} has coincident vertices at {i - 1},{i}")

    def segments(self):
        v = self.vertices
        return zip(v[:-1], v[1:])

    @property
    def length(self) -> float:
        return sum(dist_pp(a, b) for a, b in self.segments())


@dataclass(frozen=True)
class Rect:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted rectangle {self}")

    def contains(self, p: WorldPoint) -> bool:
        return self.x_min <= p[0] <= self.x_max and self.y_min <= p[1] <= self.y_max


class CollinearOverlap(UserWarning):
    """Two segments share more than one point (digitizing defect)."""


def dist_pp(a, b) -> float:
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    return math.sqrt(dx * dx + dy * dy)


def _seg_dist(px, py, ax, ay, bx, by) -> float:
    # mirrored exactly by the kernels
    vx = bx - ax
    vy = by - ay
    wx = px - ax
    wy = py - ay
    c1 = vx * wx + vy * wy
    if c1 <= 0.0:
        return math.sqrt(wx * wx + wy * wy)
    c2 = vx * vx + vy * vy
    if c2 <= c1:
        dx = px - bx
        dy = py - by
        return math.sqrt(dx * dx + dy * dy)
    t = c1 / c2
    dx = px - (ax + t * vx)
    dy = py - (ay + t * vy)
    return math.sqrt(dx * dx + dy * dy)


def dist_point_segment(p, a, b) -> float:
    """Distance from ``p`` to the closed segment ``ab``."""
    if a[0] == b[0] and a[1] == b[1]:
        raise ValueError("degenerate segment: endpoints coincide")
    return _seg_dist(p[0], p[1], a[0], a[1], b[0], b[1])


def dist_point_polyline(p, line: Polyline) -> float:
    px, py = p[0], p[1]
    return min(_seg_dist(px, py, a[0], a[1], b[0], b[1]) for a, b in line.segments())


def _cross(ox, oy, ax, ay, bx, by) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def classify_intersection(a1, a2, b1, b2):
    """Return ``(point, overlap)`` for two closed segments.

    ``point`` is the single shared point or None; ``overlap`` is True when the
    segments are collinear and share a stretch of positive length.
    """
    rx, ry = a2[0] - a1[0], a2[1] - a1[1]
    sx, sy = b2[0] - b1[0], b2[1] - b1[1]
    la = math.sqrt(rx * rx + ry * ry)
    lb = math.sqrt(sx * sx + sy * sy)
    if la == 0.0 or lb == 0.0:
        raise ValueError("degenerate segment: endpoints coincide")
    qx, qy = b1[0] - a1[0], b1[1] - a1[1]
    denom = rx * sy - ry * sx
    if abs(denom) <= 1e-12 * la * lb:
        # parallel; collinear only if b1 lies on the line through a
        if abs(qx * ry - qy * rx) / la > EPS:
            return None, False
        t0 = (qx * rx + qy * ry) / (la * la)
        t1 = t0 + (sx * rx + sy * ry) / (la * la)
        lo, hi = min(t0, t1), max(t0, t1)
        lo_c, hi_c = max(lo, 0.0), min(hi, 1.0)
        tol = EPS / la
        if hi_c < lo_c - tol:
            return None, False
        if (hi_c - lo_c) * la <= EPS:
            t = 0.5 * (lo_c + hi_c)
            return WorldPoint(a1[0] + t * rx, a1[1] + t * ry), False
        return None, True
    t = (qx * sy - qy * sx) / denom
    u = (qx * ry - qy * rx) / denom
    ta, tb = EPS / la, EPS / lb
    if t < -ta or t > 1.0 + ta or u < -tb or u > 1.0 + tb:
        return None, False
    t = min(max(t, 0.0), 1.0)
    u = min(max(u, 0.0), 1.0)
    # snap exact endpoint hits so T-touches return the shared vertex
    if u == 0.0:
        return WorldPoint(float(b1[0]), float(b1[1])), False
    if u == 1.0:
        return WorldPoint(float(b2[0]), float(b2[1])), False
    return WorldPoint(a1[0] + t * rx, a1[1] + t * ry), False


def segment_intersect(a1, a2, b1, b2) -> Optional[WorldPoint]:
    point, overlap = classify_intersection(a1, a2, b1, b2)
    if overlap:
        warnings.warn("collinear overlapping segments", CollinearOverlap, stacklevel=2)
    return point


def _clip_segment(r: Rect, ax, ay, bx, by) -> bool:
    # Liang-Barsky against the closed rectangle
    dx, dy = bx - ax, by - ay
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, ax - r.x_min), (dx, r.x_max - ax),
                 (-dy, ay - r.y_min), (dy, r.y_max - ay)):
        if p == 0.0:
            if q < 0.0:
                return False
            continue
        t = q / p
        if p < 0.0:
            if t > t1:
                return False
            t0 = max(t0, t)
        else:
            if t < t0:
                return False
            t1 = min(t1, t)
    return t0 <= t1


def rect_intersects_polyline(r: Rect, line: Polyline) -> bool:
    for a, b in line.segments():
        if r.contains(a) or r.contains(b):
            return True
        if _clip_segment(r, a[0], a[1], b[0], b[1]):
            return True
    return False


def _arc(cx, cy, radius, start, sweep, arc_step):
    """Points on a circular arc; ``sweep`` is signed, in radians."""
    n = max(1, math.ceil(abs(math.degrees(sweep)) / arc_step - 1e-9))
    return [WorldPoint(cx + radius * math.cos(start + sweep * k / n),
                       cy + radius * math.sin(start + sweep * k / n))
            for k in range(n + 1)]


def _offset_side(verts: Sequence[WorldPoint], radius: float, arc_step: float):
    """Left offset of ``verts`` with round joins on convex turns."""
    out: list[WorldPoint] = []
    headings = [math.atan2(b[1] - a[1], b[0] - a[0]) for a, b in zip(verts[:-1], verts[1:])]
    for i, h in enumerate(headings):
        a, b = verts[i], verts[i + 1]
        nx, ny = -math.sin(h), math.cos(h)
        start = WorldPoint(a[0] + radius * nx, a[1] + radius * ny)
        end = WorldPoint(b[0] + radius * nx, b[1] + radius * ny)
        if i == 0:
            out.append(start)
        if i + 1 == len(headings):
            out.append(end)
            break
        turn = (headings[i + 1] - h + math.pi) % (2 * math.pi) - math.pi
        if turn < 0:
            # right turn: left side is the outside, round join
            out.extend(_arc(b[0], b[1], radius, h + math.pi / 2, turn, arc_step))
        elif turn > 0:
            # left turn: inside corner, offset lines meet at the miter point
            m = radius / math.cos(turn / 2)
            ang = h + math.pi / 2 + turn / 2
            out.append(WorldPoint(b[0] + m * math.cos(ang), b[1] + m * math.sin(ang)))
        else:
            out.append(end)
    return out


def buffer_ring(line: Polyline, radius: float, arc_step: float = 5.0) -> list[WorldPoint]:
    """Closed ring approximating the round-capped buffer of ``line``.

    Only meant for export; membership tests use :func:`dist_point_polyline`.
    The first vertex is repeated at the end.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    if not 1.0 <= arc_step <= 45.0:
        raise ValueError("arc_step must lie in [1, 45] degrees")
    if not isinstance(line, Polyline):
        line = Polyline("buffer", tuple(line))
    verts = list(line.vertices)
    left = _offset_side(verts, radius, arc_step)
    right = _offset_side(verts[::-1], radius, arc_step)
    a, b = verts[0], verts[1]
    y, z = verts[-2], verts[-1]
    h_end = math.atan2(z[1] - y[1], z[0] - y[0])
    h_start = math.atan2(a[1] - b[1], a[0] - b[0])
    ring = left[:-1]
    ring.extend(_arc(z[0], z[1], radius, h_end + math.pi / 2, -math.pi, arc_step))
    ring.extend(right[1:-1])
    ring.extend(_arc(a[0], a[1], radius, h_start + math.pi / 2, -math.pi, arc_step)[:-1])
    ring.append(ring[0])
    return ring


def point_in_ring(p, ring: Sequence) -> bool:
    """Nonzero-winding containment; boundary points are not guaranteed."""
    x, y = p[0], p[1]
    wn = 0
    n = len(ring)
    for i in range(n - 1 if ring[0] == ring[-1] else n):
        ax, ay = ring[i]
        bx, by = ring[(i + 1) % n]
        if ay <= y:
            if by > y and _cross(ax, ay, bx, by, x, y) > 0:
                wn += 1
        elif by <= y and _cross(ax, ay, bx, by, x, y) < 0:
            wn -= 1
    return wn != 0


def bounding_rect(points: Iterable) -> Rect:
    xs, ys = [], []
    for p in points:
        xs.append(p[0])
        ys.append(p[1])
    if not xs:
        raise ValueError("no points")
    return Rect(min(xs), min(ys), max(xs), max(ys))
