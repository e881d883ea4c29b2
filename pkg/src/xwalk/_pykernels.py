"""Pure-Python kernels; reference twin of ``_ckernels.pyx``.

Grids are CSR-style: the items of cell ``iy * nx + ix`` are
``items[cell_start[c]:cell_start[c + 1]]``.  Every function here has an
identical signature and identical floating-point behavior in the compiled
module.
"""
from math import floor, inf, sqrt

BACKEND = "python"

# ring-termination slack, in cells; covers rounding in the cell assignment
_SLACK = 1e-6


def as_buffer(a):
    return a.tolist()


def _cell_of(v, origin, cell):
    return int(floor((v - origin) / cell))


def _kstart(cx, cy, nx, ny):
    # Chebyshev distance from (cx, cy) to the grid rectangle
    gx = -cx if cx < 0 else (cx - nx + 1 if cx >= nx else 0)
    gy = -cy if cy < 0 else (cy - ny + 1 if cy >= ny else 0)
    return max(gx, gy)


def _kstop(cx, cy, nx, ny):
    return max(cx, nx - 1 - cx, cy, ny - 1 - cy, 0)


def _ring(cx, cy, k, nx, ny):
    if k == 0:
        if 0 <= cx < nx and 0 <= cy < ny:
            yield cy * nx + cx
        return
    x_lo, x_hi = max(cx - k, 0), min(cx + k, nx - 1)
    for iy in (cy - k, cy + k):
        if 0 <= iy < ny:
            base = iy * nx
            for ix in range(x_lo, x_hi + 1):
                yield base + ix
    y_lo, y_hi = max(cy - k + 1, 0), min(cy + k - 1, ny - 1)
    for ix in (cx - k, cx + k):
        if 0 <= ix < nx:
            for iy in range(y_lo, y_hi + 1):
                yield iy * nx + ix


def nearest_points(qx, qy, px, py, rank, x0, y0, cell, nx, ny, cell_start, items):
    n = len(qx)
    out_i = [-1] * n
    out_d = [inf] * n
    if not items:
        return out_i, out_d
    for q in range(n):
        x, y = qx[q], qy[q]
        cx, cy = _cell_of(x, x0, cell), _cell_of(y, y0, cell)
        best, bestd, bestr = -1, inf, 0
        k = _kstart(cx, cy, nx, ny)
        kstop = _kstop(cx, cy, nx, ny)
        while k <= kstop:
            for c in _ring(cx, cy, k, nx, ny):
                for j in items[cell_start[c]:cell_start[c + 1]]:
                    dx = px[j] - x
                    dy = py[j] - y
                    d = sqrt(dx * dx + dy * dy)
                    if d < bestd or (d == bestd and rank[j] < bestr):
                        best, bestd, bestr = j, d, rank[j]
            if best >= 0 and bestd < (k - _SLACK) * cell:
                break
            k += 1
        out_i[q] = best
        out_d[q] = bestd
    return out_i, out_d


def _seg_dist(px, py, ax, ay, bx, by):
    vx = bx - ax
    vy = by - ay
    wx = px - ax
    wy = py - ay
    c1 = vx * wx + vy * wy
    if c1 <= 0.0:
        return sqrt(wx * wx + wy * wy)
    c2 = vx * vx + vy * vy
    if c2 <= c1:
        dx = px - bx
        dy = py - by
        return sqrt(dx * dx + dy * dy)
    t = c1 / c2
    dx = px - (ax + t * vx)
    dy = py - (ay + t * vy)
    return sqrt(dx * dx + dy * dy)


def nearest_segments(qx, qy, ax, ay, bx, by, rank, x0, y0, cell, nx, ny,
                     cell_start, items):
    n = len(qx)
    out_i = [-1] * n
    out_d = [inf] * n
    if not items:
        return out_i, out_d
    for q in range(n):
        x, y = qx[q], qy[q]
        cx, cy = _cell_of(x, x0, cell), _cell_of(y, y0, cell)
        best, bestd, bestr = -1, inf, 0
        k = _kstart(cx, cy, nx, ny)
        kstop = _kstop(cx, cy, nx, ny)
        while k <= kstop:
            for c in _ring(cx, cy, k, nx, ny):
                for j in items[cell_start[c]:cell_start[c + 1]]:
                    d = _seg_dist(x, y, ax[j], ay[j], bx[j], by[j])
                    if d < bestd or (d == bestd and rank[j] < bestr):
                        best, bestd, bestr = j, d, rank[j]
            if best >= 0 and bestd < (k - _SLACK) * cell:
                break
            k += 1
        out_i[q] = best
        out_d[q] = bestd
    return out_i, out_d


def _span(lo, hi, origin, cell, n):
    a = max(_cell_of(lo, origin, cell) - 1, 0)
    b = min(_cell_of(hi, origin, cell) + 1, n - 1)
    return a, b


def within_points(x, y, r, px, py, x0, y0, cell, nx, ny, cell_start, items):
    """Indices of points with distance <= r, in grid order."""
    out = []
    ix0, ix1 = _span(x - r, x + r, x0, cell, nx)
    iy0, iy1 = _span(y - r, y + r, y0, cell, ny)
    for iy in range(iy0, iy1 + 1):
        base = iy * nx
        for ix in range(ix0, ix1 + 1):
            c = base + ix
            for j in items[cell_start[c]:cell_start[c + 1]]:
                dx = px[j] - x
                dy = py[j] - y
                if sqrt(dx * dx + dy * dy) <= r:
                    out.append(j)
    return out


def greedy_nms(px, py, proc, r, x0, y0, cell, nx, ny, cell_start, items):
    """Greedy suppression in ``proc`` order.

    Returns ``(keep, witness)``: keep flags per point, and for each suppressed
    point the index of the kept point that suppressed it (-1 otherwise).
    """
    n = len(px)
    keep = [0] * n
    witness = [-1] * n
    suppressed = [False] * n
    for i in proc:
        if suppressed[i]:
            continue
        keep[i] = 1
        x, y = px[i], py[i]
        for j in within_points(x, y, r, px, py, x0, y0, cell, nx, ny, cell_start, items):
            if j != i and not suppressed[j] and not keep[j]:
                suppressed[j] = True
                witness[j] = i
    return keep, witness
