"""Uniform-grid indexes over points and polyline segments.

Query answers are exactly those of a linear scan: candidate cells are only a
filter, the distance test itself is the same arithmetic as
:func:`xwalk.geometry.dist_pp` / ``dist_point_segment``.  Ties on distance
resolve to the smallest id.
"""
from __future__ import annotations

import math
from typing import Hashable, Iterable, Optional

import numpy as np

from . import kernels
from .geometry import Polyline, WorldPoint


class _Grid:
    """CSR cell table: cell ``iy*nx+ix`` holds ``items[start[c]:start[c+1]]``."""

    def __init__(self, x0, y0, cell, nx, ny, cells_per_item, kern):
        self.x0, self.y0, self.cell = float(x0), float(y0), float(cell)
        self.nx, self.ny = int(nx), int(ny)
        # cells_per_item: list of (item, cell) pairs as two int arrays
        item_idx, cell_idx = cells_per_item
        order = np.lexsort((item_idx, cell_idx))
        counts = np.bincount(cell_idx, minlength=self.nx * self.ny)
        start = np.zeros(self.nx * self.ny + 1, dtype=np.int64)
        np.cumsum(counts, out=start[1:])
        self.start = kern.as_buffer(start)
        self.items = kern.as_buffer(item_idx[order].astype(np.int64))

    def args(self):
        return (self.x0, self.y0, self.cell, self.nx, self.ny, self.start, self.items)


def _grid_shape(xmin, ymin, xmax, ymax, cell, max_cells):
    w, h = xmax - xmin, ymax - ymin
    while True:
        nx = int(math.floor(w / cell)) + 1
        ny = int(math.floor(h / cell)) + 1
        if nx * ny <= max_cells:
            return nx, ny, cell
        cell *= 1.5


def _id_ranks(ids):
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    rank = np.empty(len(ids), dtype=np.int64)
    rank[order] = np.arange(len(ids), dtype=np.int64)
    return rank


class PointIndex:
    """Immutable index over ``(id, point)`` pairs."""

    def __init__(self, points: Iterable[tuple[Hashable, WorldPoint]] = (),
                 cell_size: Optional[float] = None, backend=None):
        self._k = kernels.active if backend is None else kernels.load(backend)
        ids, xs, ys = [], [], []
        seen = set()
        for pid, p in points:
            if pid in seen:
                raise ValueError(f"duplicate point id {pid!r}")
            seen.add(pid)
            ids.append(pid)
            xs.append(float(p[0]))
            ys.append(float(p[1]))
        self.ids = ids
        self.x = np.asarray(xs, dtype=np.float64)
        self.y = np.asarray(ys, dtype=np.float64)
        n = len(ids)
        rank = _id_ranks(ids) if n else np.zeros(0, dtype=np.int64)
        if n:
            xmin, xmax = self.x.min(), self.x.max()
            ymin, ymax = self.y.min(), self.y.max()
            if cell_size is None:
                area = max((xmax - xmin) * (ymax - ymin), 1.0)
                cell_size = max(math.sqrt(2.0 * area / n), 1.0)
        else:
            xmin = ymin = xmax = ymax = 0.0
            cell_size = cell_size or 1.0
        nx, ny, cell = _grid_shape(xmin, ymin, xmax, ymax, cell_size, max(4 * n, 64))
        ix = np.floor((self.x - xmin) / cell).astype(np.int64)
        iy = np.floor((self.y - ymin) / cell).astype(np.int64)
        np.clip(ix, 0, nx - 1, out=ix)
        np.clip(iy, 0, ny - 1, out=iy)
        self._grid = _Grid(xmin, ymin, cell, nx, ny,
                           (np.arange(n, dtype=np.int64), iy * nx + ix), self._k)
        self._px = self._k.as_buffer(self.x)
        self._py = self._k.as_buffer(self.y)
        self._rank = self._k.as_buffer(rank)

    def __len__(self):
        return len(self.ids)

    @property
    def backend(self) -> str:
        return self._k.BACKEND

    def within_indices(self, c, r: float) -> list[int]:
        if r < 0:
            raise ValueError("radius must be non-negative")
        if not self.ids:
            return []
        return list(self._k.within_points(float(c[0]), float(c[1]), float(r),
                                          self._px, self._py, *self._grid.args()))

    def query_within(self, c, r: float) -> list[tuple[Hashable, float]]:
        """All ``(id, distance)`` with distance <= r, sorted by (distance, id)."""
        out = []
        for j in self.within_indices(c, r):
            dx = self.x[j] - c[0]
            dy = self.y[j] - c[1]
            out.append((self.ids[j], math.sqrt(dx * dx + dy * dy)))
        out.sort(key=lambda t: (t[1], t[0]))
        return out

    def nearest_many(self, qx, qy):
        """Vectorized nearest neighbor: ``(index array, distance array)``.

        Index -1 and distance inf when the index is empty.
        """
        qx = np.asarray(qx, dtype=np.float64)
        qy = np.asarray(qy, dtype=np.float64)
        idx, dist = self._k.nearest_points(self._k.as_buffer(qx), self._k.as_buffer(qy),
                                           self._px, self._py, self._rank,
                                           *self._grid.args())
        return np.asarray(idx, dtype=np.int64), np.asarray(dist, dtype=np.float64)

    def query_nearest(self, c) -> Optional[tuple[Hashable, float]]:
        if not self.ids:
            return None
        idx, dist = self.nearest_many([c[0]], [c[1]])
        return self.ids[int(idx[0])], float(dist[0])

    def nms(self, order, radius: float):
        """Greedy suppression visiting point indices in ``order``."""
        proc = self._k.as_buffer(np.asarray(order, dtype=np.int64))
        keep, witness = self._k.greedy_nms(self._px, self._py, proc, float(radius),
                                           *self._grid.args())
        return np.asarray(keep, dtype=bool), np.asarray(witness, dtype=np.int64)


def build_point_index(points, cell_size=None, backend=None) -> PointIndex:
    return PointIndex(points, cell_size=cell_size, backend=backend)


class SegmentIndex:
    """Nearest-segment queries over a collection of polylines.

    A segment is registered in every cell its bounding box touches, so the
    closest point of any segment lies in a cell that lists it.
    """

    def __init__(self, polylines: Iterable[Polyline], cell_size: Optional[float] = None,
                 backend=None):
        self._k = kernels.active if backend is None else kernels.load(backend)
        keys, ax, ay, bx, by = [], [], [], [], []
        for line in polylines:
            for ordinal, (a, b) in enumerate(line.segments()):
                keys.append((line.id, ordinal))
                ax.append(a[0])
                ay.append(a[1])
                bx.append(b[0])
                by.append(b[1])
        self.keys = keys
        self.ax, self.ay = np.asarray(ax, float), np.asarray(ay, float)
        self.bx, self.by = np.asarray(bx, float), np.asarray(by, float)
        n = len(keys)
        if n:
            xlo = np.minimum(self.ax, self.bx)
            xhi = np.maximum(self.ax, self.bx)
            ylo = np.minimum(self.ay, self.by)
            yhi = np.maximum(self.ay, self.by)
            xmin, xmax, ymin, ymax = xlo.min(), xhi.max(), ylo.min(), yhi.max()
            if cell_size is None:
                seglen = float(np.median(np.hypot(self.bx - self.ax, self.by - self.ay)))
                area = max((xmax - xmin) * (ymax - ymin), 1.0)
                cell_size = max(seglen, math.sqrt(area / n), 1.0)
            nx, ny, cell = _grid_shape(xmin, ymin, xmax, ymax, cell_size, max(8 * n, 64))
            ix0 = np.clip(np.floor((xlo - xmin) / cell).astype(np.int64), 0, nx - 1)
            ix1 = np.clip(np.floor((xhi - xmin) / cell).astype(np.int64), 0, nx - 1)
            iy0 = np.clip(np.floor((ylo - ymin) / cell).astype(np.int64), 0, ny - 1)
            iy1 = np.clip(np.floor((yhi - ymin) / cell).astype(np.int64), 0, ny - 1)
            span_x = ix1 - ix0 + 1
            span_y = iy1 - iy0 + 1
            per = span_x * span_y
            item = np.repeat(np.arange(n, dtype=np.int64), per)
            local = np.arange(per.sum(), dtype=np.int64) - np.repeat(np.cumsum(per) - per, per)
            sx = np.repeat(span_x, per)
            cx = np.repeat(ix0, per) + local % sx
            cy = np.repeat(iy0, per) + local // sx
            cells = cy * nx + cx
        else:
            xmin = ymin = 0.0
            nx = ny = 1
            cell = cell_size or 1.0
            item = cells = np.zeros(0, dtype=np.int64)
        self._grid = _Grid(xmin, ymin, cell, nx, ny, (item, cells), self._k)
        self._bufs = tuple(self._k.as_buffer(a) for a in (self.ax, self.ay, self.bx, self.by))
        self._rank = self._k.as_buffer(_id_ranks(keys) if n else np.zeros(0, np.int64))

    def __len__(self):
        return len(self.keys)

    def nearest_many(self, qx, qy):
        """``(segment index array, distance array)`` for many query points."""
        if not self.keys:
            raise ValueError("segment index is empty")
        qx = np.asarray(qx, dtype=np.float64)
        qy = np.asarray(qy, dtype=np.float64)
        idx, dist = self._k.nearest_segments(self._k.as_buffer(qx), self._k.as_buffer(qy),
                                             *self._bufs, self._rank, *self._grid.args())
        return np.asarray(idx, dtype=np.int64), np.asarray(dist, dtype=np.float64)

    def query_segment_distance(self, p) -> tuple[Hashable, float]:
        idx, dist = self.nearest_many([p[0]], [p[1]])
        return self.keys[int(idx[0])][0], float(dist[0])


def build_segment_index(polylines, cell_size=None, backend=None) -> SegmentIndex:
    return SegmentIndex(polylines, cell_size=cell_size, backend=backend)


def query_within(ix: PointIndex, c, r: float):
    return ix.query_within(c, r)


def query_nearest(ix: PointIndex, c):
    return ix.query_nearest(c)


def query_segment_distance(ix: SegmentIndex, p):
    return ix.query_segment_distance(p)
