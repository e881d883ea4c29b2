# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_pykernels``; same signatures, same arithmetic."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt, INFINITY

ctypedef cnp.int64_t i64

cnp.import_array()

BACKEND = "cython"

cdef double _SLACK = 1e-6


def as_buffer(a):
    if a.dtype.kind == "f":
        return np.ascontiguousarray(a, dtype=np.float64)
    return np.ascontiguousarray(a, dtype=np.int64)


cdef inline i64 _cell_of(double v, double origin, double cell) noexcept nogil:
    return <i64>floor((v - origin) / cell)


cdef inline i64 _kstart(i64 cx, i64 cy, i64 nx, i64 ny) noexcept nogil:
    cdef i64 gx = 0, gy = 0
    if cx < 0:
        gx = -cx
    elif cx >= nx:
        gx = cx - nx + 1
    if cy < 0:
        gy = -cy
    elif cy >= ny:
        gy = cy - ny + 1
    return gx if gx > gy else gy


cdef inline i64 _kstop(i64 cx, i64 cy, i64 nx, i64 ny) noexcept nogil:
    cdef i64 m = 0
    if cx > m:
        m = cx
    if nx - 1 - cx > m:
        m = nx - 1 - cx
    if cy > m:
        m = cy
    if ny - 1 - cy > m:
        m = ny - 1 - cy
    return m


cdef inline double _seg_dist(double px, double py, double ax, double ay,
                             double bx, double by) noexcept nogil:
    cdef double vx = bx - ax, vy = by - ay
    cdef double wx = px - ax, wy = py - ay
    cdef double c1 = vx * wx + vy * wy
    cdef double c2, t, dx, dy
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


cdef void _scan_point_cell(i64 c, double x, double y, const double[:] px,
                           const double[:] py, const i64[:] rank,
                           const i64[:] cell_start, const i64[:] items,
                           i64* best, double* bestd, i64* bestr) noexcept nogil:
    cdef i64 s, j
    cdef double dx, dy, d
    for s in range(cell_start[c], cell_start[c + 1]):
        j = items[s]
        dx = px[j] - x
        dy = py[j] - y
        d = sqrt(dx * dx + dy * dy)
        if d < bestd[0] or (d == bestd[0] and rank[j] < bestr[0]):
            best[0] = j
            bestd[0] = d
            bestr[0] = rank[j]


cdef void _scan_seg_cell(i64 c, double x, double y, const double[:] ax,
                         const double[:] ay, const double[:] bx, const double[:] by,
                         const i64[:] rank, const i64[:] cell_start,
                         const i64[:] items, i64* best, double* bestd,
                         i64* bestr) noexcept nogil:
    cdef i64 s, j
    cdef double d
    for s in range(cell_start[c], cell_start[c + 1]):
        j = items[s]
        d = _seg_dist(x, y, ax[j], ay[j], bx[j], by[j])
        if d < bestd[0] or (d == bestd[0] and rank[j] < bestr[0]):
            best[0] = j
            bestd[0] = d
            bestr[0] = rank[j]


def nearest_points(const double[:] qx, const double[:] qy, const double[:] px,
                   const double[:] py, const i64[:] rank, double x0, double y0,
                   double cell, i64 nx, i64 ny, const i64[:] cell_start,
                   const i64[:] items):
    cdef Py_ssize_t n = qx.shape[0], q
    out_i_arr = np.full(n, -1, dtype=np.int64)
    out_d_arr = np.full(n, np.inf, dtype=np.float64)
    cdef i64[:] out_i = out_i_arr
    cdef double[:] out_d = out_d_arr
    cdef i64 cx, cy, k, kstop, ix, iy, x_lo, x_hi, y_lo, y_hi, best, bestr
    cdef double x, y, bestd
    if items.shape[0] == 0:
        return out_i_arr, out_d_arr
    with nogil:
        for q in range(n):
            x = qx[q]
            y = qy[q]
            cx = _cell_of(x, x0, cell)
            cy = _cell_of(y, y0, cell)
            best = -1
            bestd = INFINITY
            bestr = 0
            k = _kstart(cx, cy, nx, ny)
            kstop = _kstop(cx, cy, nx, ny)
            while k <= kstop:
                if k == 0:
                    if 0 <= cx < nx and 0 <= cy < ny:
                        _scan_point_cell(cy * nx + cx, x, y, px, py, rank,
                                         cell_start, items, &best, &bestd, &bestr)
                else:
                    x_lo = cx - k if cx - k > 0 else 0
                    x_hi = cx + k if cx + k < nx - 1 else nx - 1
                    iy = cy - k
                    if 0 <= iy < ny:
                        for ix in range(x_lo, x_hi + 1):
                            _scan_point_cell(iy * nx + ix, x, y, px, py, rank,
                                             cell_start, items, &best, &bestd, &bestr)
                    iy = cy + k
                    if 0 <= iy < ny:
                        for ix in range(x_lo, x_hi + 1):
                            _scan_point_cell(iy * nx + ix, x, y, px, py, rank,
                                             cell_start, items, &best, &bestd, &bestr)
                    y_lo = cy - k + 1 if cy - k + 1 > 0 else 0
                    y_hi = cy + k - 1 if cy + k - 1 < ny - 1 else ny - 1
                    ix = cx - k
                    if 0 <= ix < nx:
                        for iy in range(y_lo, y_hi + 1):
                            _scan_point_cell(iy * nx + ix, x, y, px, py, rank,
                                             cell_start, items, &best, &bestd, &bestr)
                    ix = cx + k
                    if 0 <= ix < nx:
                        for iy in range(y_lo, y_hi + 1):
                            _scan_point_cell(iy * nx + ix, x, y, px, py, rank,
                                             cell_start, items, &best, &bestd, &bestr)
                if best >= 0 and bestd < (k - _SLACK) * cell:
                    break
                k += 1
            out_i[q] = best
            out_d[q] = bestd
    return out_i_arr, out_d_arr


def nearest_segments(const double[:] qx, const double[:] qy, const double[:] ax,
                     const double[:] ay, const double[:] bx, const double[:] by,
                     const i64[:] rank, double x0, double y0, double cell,
                     i64 nx, i64 ny, const i64[:] cell_start, const i64[:] items):
    cdef Py_ssize_t n = qx.shape[0], q
    out_i_arr = np.full(n, -1, dtype=np.int64)
    out_d_arr = np.full(n, np.inf, dtype=np.float64)
    cdef i64[:] out_i = out_i_arr
    cdef double[:] out_d = out_d_arr
    cdef i64 cx, cy, k, kstop, ix, iy, x_lo, x_hi, y_lo, y_hi, best, bestr
    cdef double x, y, bestd
    if items.shape[0] == 0:
        return out_i_arr, out_d_arr
    with nogil:
        for q in range(n):
            x = qx[q]
            y = qy[q]
            cx = _cell_of(x, x0, cell)
            cy = _cell_of(y, y0, cell)
            best = -1
            bestd = INFINITY
            bestr = 0
            k = _kstart(cx, cy, nx, ny)
            kstop = _kstop(cx, cy, nx, ny)
            while k <= kstop:
                if k == 0:
                    if 0 <= cx < nx and 0 <= cy < ny:
                        _scan_seg_cell(cy * nx + cx, x, y, ax, ay, bx, by, rank,
                                       cell_start, items, &best, &bestd, &bestr)
                else:
                    x_lo = cx - k if cx - k > 0 else 0
                    x_hi = cx + k if cx + k < nx - 1 else nx - 1
                    iy = cy - k
                    if 0 <= iy < ny:
                        for ix in range(x_lo, x_hi + 1):
                            _scan_seg_cell(iy * nx + ix, x, y, ax, ay, bx, by, rank,
                                           cell_start, items, &best, &bestd, &bestr)
                    iy = cy + k
                    if 0 <= iy < ny:
                        for ix in range(x_lo, x_hi + 1):
                            _scan_seg_cell(iy * nx + ix, x, y, ax, ay, bx, by, rank,
                                           cell_start, items, &best, &bestd, &bestr)
                    y_lo = cy - k + 1 if cy - k + 1 > 0 else 0
                    y_hi = cy + k - 1 if cy + k - 1 < ny - 1 else ny - 1
                    ix = cx - k
                    if 0 <= ix < nx:
                        for iy in range(y_lo, y_hi + 1):
                            _scan_seg_cell(iy * nx + ix, x, y, ax, ay, bx, by, rank,
                                           cell_start, items, &best, &bestd, &bestr)
                    ix = cx + k
                    if 0 <= ix < nx:
                        for iy in range(y_lo, y_hi + 1):
                            _scan_seg_cell(iy * nx + ix, x, y, ax, ay, bx, by, rank,
                                           cell_start, items, &best, &bestd, &bestr)
                if best >= 0 and bestd < (k - _SLACK) * cell:
                    break
                k += 1
            out_i[q] = best
            out_d[q] = bestd
    return out_i_arr, out_d_arr


cdef inline void _span(double lo, double hi, double origin, double cell, i64 n,
                       i64* a, i64* b) noexcept nogil:
    a[0] = _cell_of(lo, origin, cell) - 1
    if a[0] < 0:
        a[0] = 0
    b[0] = _cell_of(hi, origin, cell) + 1
    if b[0] > n - 1:
        b[0] = n - 1


def within_points(double x, double y, double r, const double[:] px,
                  const double[:] py, double x0, double y0, double cell, i64 nx,
                  i64 ny, const i64[:] cell_start, const i64[:] items):
    cdef i64 ix0, ix1, iy0, iy1, ix, iy, c, s, j
    cdef double dx, dy
    out = []
    _span(x - r, x + r, x0, cell, nx, &ix0, &ix1)
    _span(y - r, y + r, y0, cell, ny, &iy0, &iy1)
    for iy in range(iy0, iy1 + 1):
        for ix in range(ix0, ix1 + 1):
            c = iy * nx + ix
            for s in range(cell_start[c], cell_start[c + 1]):
                j = items[s]
                dx = px[j] - x
                dy = py[j] - y
                if sqrt(dx * dx + dy * dy) <= r:
                    out.append(j)
    return out


def greedy_nms(const double[:] px, const double[:] py, const i64[:] proc, double r,
               double x0, double y0, double cell, i64 nx, i64 ny,
               const i64[:] cell_start, const i64[:] items):
    cdef Py_ssize_t n = px.shape[0], p
    keep_arr = np.zeros(n, dtype=np.int64)
    witness_arr = np.full(n, -1, dtype=np.int64)
    supp_arr = np.zeros(n, dtype=np.uint8)
    cdef i64[:] keep = keep_arr
    cdef i64[:] witness = witness_arr
    cdef unsigned char[:] suppressed = supp_arr
    cdef i64 i, j, ix0, ix1, iy0, iy1, ix, iy, c, s
    cdef double x, y, dx, dy
    with nogil:
        for p in range(proc.shape[0]):
            i = proc[p]
            if suppressed[i]:
                continue
            keep[i] = 1
            x = px[i]
            y = py[i]
            _span(x - r, x + r, x0, cell, nx, &ix0, &ix1)
            _span(y - r, y + r, y0, cell, ny, &iy0, &iy1)
            for iy in range(iy0, iy1 + 1):
                for ix in range(ix0, ix1 + 1):
                    c = iy * nx + ix
                    for s in range(cell_start[c], cell_start[c + 1]):
                        j = items[s]
                        if j == i or suppressed[j] or keep[j]:
                            continue
                        dx = px[j] - x
                        dy = py[j] - y
                        if sqrt(dx * dx + dy * dy) <= r:
                            suppressed[j] = 1
                            witness[j] = i
    return keep_arr, witness_arr
