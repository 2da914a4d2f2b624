# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled geometry kernels: segment intersection, grid-accelerated
occlusion queries, and the per-drop classification scans.

A pure-Python twin with identical signatures lives in _kernels_py.py; the
backend is chosen at import time in geometry.py.
"""

from libc.math cimport floor, sqrt, fabs, pow, INFINITY


cdef inline double _fmin(double a, double b) nogil:
    return a if a < b else b


cdef inline double _fmax(double a, double b) nogil:
    return a if a > b else b


cdef inline double _orient(double px, double py, double qx, double qy,
                           double rx, double ry) nogil:
    return (qx - px) * (ry - py) - (qy - py) * (rx - px)


cdef inline bint _on_bbox(double px, double py, double qx, double qy,
                          double rx, double ry) nogil:
    return (_fmin(px, qx) <= rx <= _fmax(px, qx)
            and _fmin(py, qy) <= ry <= _fmax(py, qy))


cdef inline bint _seg_int(double ax, double ay, double bx, double by,
                          double cx, double cy, double dx, double dy) nogil:
    # Closed test: endpoint touching and collinear overlap count as blocked.
    cdef double d1 = _orient(cx, cy, dx, dy, ax, ay)
    cdef double d2 = _orient(cx, cy, dx, dy, bx, by)
    cdef double d3 = _orient(ax, ay, bx, by, cx, cy)
    cdef double d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) \
            and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and _on_bbox(cx, cy, dx, dy, ax, ay):
        return True
    if d2 == 0 and _on_bbox(cx, cy, dx, dy, bx, by):
        return True
    if d3 == 0 and _on_bbox(ax, ay, bx, by, cx, cy):
        return True
    if d4 == 0 and _on_bbox(ax, ay, bx, by, dx, dy):
        return True
    return False


def seg_intersect(double ax, double ay, double bx, double by,
                  double cx, double cy, double dx, double dy):
    """Closed segment-segment intersection test."""
    return bool(_seg_int(ax, ay, bx, by, cx, cy, dx, dy))


def build_grid(const double[::1] x1, const double[::1] y1,
               const double[::1] x2, const double[::1] y2,
               double cell, double gx0, double gy0, int nx, int ny):
    """Two-pass CSR registration of segment bounding boxes into grid cells.

    Returns (cell_start, cell_items) int32 arrays.
    """
    import numpy as np

    cdef long n = x1.shape[0]
    cdef int[::1] cell_start = np.zeros(nx * ny + 1, dtype=np.int32)
    cdef long s
    cdef int cx0, cxm, cy0, cym, ix, iy, c
    cdef double lo, hi
    cdef double pad = 1e-9
    for s in range(n):
        lo = _fmin(x1[s], x2[s]) - pad
        hi = _fmax(x1[s], x2[s]) + pad
        cx0 = <int>floor((lo - gx0) / cell)
        cxm = <int>floor((hi - gx0) / cell)
        if cx0 < 0: cx0 = 0
        if cxm > nx - 1: cxm = nx - 1
        lo = _fmin(y1[s], y2[s]) - pad
        hi = _fmax(y1[s], y2[s]) + pad
        cy0 = <int>floor((lo - gy0) / cell)
        cym = <int>floor((hi - gy0) / cell)
        if cy0 < 0: cy0 = 0
        if cym > ny - 1: cym = ny - 1
        for iy in range(cy0, cym + 1):
            for ix in range(cx0, cxm + 1):
                cell_start[iy * nx + ix + 1] += 1
    for c in range(1, nx * ny + 1):
        cell_start[c] += cell_start[c - 1]

    cdef int[::1] cell_items = np.empty(cell_start[nx * ny], dtype=np.int32)
    cdef int[::1] cursor = np.array(cell_start[:nx * ny], dtype=np.int32)
    for s in range(n):
        lo = _fmin(x1[s], x2[s]) - pad
        hi = _fmax(x1[s], x2[s]) + pad
        cx0 = <int>floor((lo - gx0) / cell)
        cxm = <int>floor((hi - gx0) / cell)
        if cx0 < 0: cx0 = 0
        if cxm > nx - 1: cxm = nx - 1
        lo = _fmin(y1[s], y2[s]) - pad
        hi = _fmax(y1[s], y2[s]) + pad
        cy0 = <int>floor((lo - gy0) / cell)
        cym = <int>floor((hi - gy0) / cell)
        if cy0 < 0: cy0 = 0
        if cym > ny - 1: cym = ny - 1
        for iy in range(cy0, cym + 1):
            for ix in range(cx0, cxm + 1):
                c = iy * nx + ix
                cell_items[cursor[c]] = <int>s
                cursor[c] += 1
    return np.asarray(cell_start), np.asarray(cell_items)


cdef bint _any_hit(const double[::1] sx1, const double[::1] sy1,
                   const double[::1] sx2, const double[::1] sy2,
                   const int[::1] cstart, const int[::1] citems,
                   double cell, double gx0, double gy0, int nx, int ny,
                   double ax, double ay, double bx, double by,
                   int exclude) nogil:
    # Amanatides-Woo walk over the grid cells crossed by segment a->b.
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef int ix = <int>floor((ax - gx0) / cell)
    cdef int iy = <int>floor((ay - gy0) / cell)
    cdef int jx = <int>floor((bx - gx0) / cell)
    cdef int jy = <int>floor((by - gy0) / cell)
    cdef int stepx = 1 if dx > 0 else (-1 if dx < 0 else 0)
    cdef int stepy = 1 if dy > 0 else (-1 if dy < 0 else 0)
    cdef double tmaxx = INFINITY, tmaxy = INFINITY
    cdef double tdx = INFINITY, tdy = INFINITY
    cdef double boundary
    if dx != 0:
        tdx = cell / fabs(dx)
        boundary = gx0 + (ix + (1 if dx > 0 else 0)) * cell
        tmaxx = (boundary - ax) / dx
    if dy != 0:
        tdy = cell / fabs(dy)
        boundary = gy0 + (iy + (1 if dy > 0 else 0)) * cell
        tmaxy = (boundary - ay) / dy

    cdef int c, k, s
    # enough steps to cross every cell the query can touch, even when the
    # endpoints start outside the grid
    cdef long guard = <long>(fabs(dx) / cell) + <long>(fabs(dy) / cell) + nx + ny + 8
    while True:
        if 0 <= ix < nx and 0 <= iy < ny:
            c = iy * nx + ix
            for k in range(cstart[c], cstart[c + 1]):
                s = citems[k]
                if s == exclude:
                    continue
                if _seg_int(ax, ay, bx, by, sx1[s], sy1[s], sx2[s], sy2[s]):
                    return True
        if ix == jx and iy == jy:
            return False
        guard -= 1
        if guard < 0:
            return False
        if tmaxx < tmaxy:
            ix += stepx
            tmaxx += tdx
        else:
            iy += stepy
            tmaxy += tdy


def any_hit(const double[::1] sx1, const double[::1] sy1,
            const double[::1] sx2, const double[::1] sy2,
            const int[::1] cstart, const int[::1] citems,
            double cell, double gx0, double gy0, int nx, int ny,
            double ax, double ay, double bx, double by, int exclude=-1):
    """True iff any indexed segment (except `exclude`) blocks a->b."""
    return bool(_any_hit(sx1, sy1, sx2, sy2, cstart, citems,
                         cell, gx0, gy0, nx, ny, ax, ay, bx, by, exclude))


cdef inline bint _same_side(double e1x, double e1y, double e2x, double e2y,
                            double px, double py, double qx, double qy) nogil:
    # Strict: points on the host line count as not-same-side.
    cdef double cp = (e2x - e1x) * (py - e1y) - (e2y - e1y) * (px - e1x)
    cdef double cq = (e2x - e1x) * (qy - e1y) - (e2y - e1y) * (qx - e1x)
    return cp * cq > 0


cdef int _classify(const double[::1] sx1, const double[::1] sy1,
                   const double[::1] sx2, const double[::1] sy2,
                   const int[::1] cstart, const int[::1] citems,
                   double cell, double gx0, double gy0, int nx, int ny,
                   const double[::1] midx, const double[::1] midy,
                   double ux, double uy, double bsx, double bsy,
                   const int[::1] cand, signed char[::1] vis_memo,
                   int* irs_out) nogil:
    # 0 = LoS, 1 = NLoS, 2 = reconfigured LoS (irs_out = serving host index).
    cdef int i, s
    irs_out[0] = -1
    if not _any_hit(sx1, sy1, sx2, sy2, cstart, citems, cell, gx0, gy0,
                    nx, ny, ux, uy, bsx, bsy, -1):
        return 0
    for i in range(cand.shape[0]):
        s = cand[i]
        if not _same_side(sx1[s], sy1[s], sx2[s], sy2[s], ux, uy, bsx, bsy):
            continue
        if vis_memo[i] == -1:
            if _any_hit(sx1, sy1, sx2, sy2, cstart, citems, cell, gx0, gy0,
                        nx, ny, ux, uy, midx[s], midy[s], s):
                vis_memo[i] = 0
            else:
                vis_memo[i] = 1
        if vis_memo[i] == 0:
            continue
        if _any_hit(sx1, sy1, sx2, sy2, cstart, citems, cell, gx0, gy0,
                    nx, ny, midx[s], midy[s], bsx, bsy, s):
            continue
        irs_out[0] = s
        return 2
    return 1


def classify_one(const double[::1] sx1, const double[::1] sy1,
                 const double[::1] sx2, const double[::1] sy2,
                 const int[::1] cstart, const int[::1] citems,
                 double cell, double gx0, double gy0, int nx, int ny,
                 const double[::1] midx, const double[::1] midy,
                 double ux, double uy, double bsx, double bsy,
                 const int[::1] cand, signed char[::1] vis_memo):
    """LoS-state of one user-BS link.

    `cand` holds IRS host indices within serving range of the user, sorted
    by user-IRS distance; `vis_memo` caches user-IRS visibility per
    candidate (-1 unknown, 0 blocked, 1 clear).
    """
    cdef int irs = -1
    cdef int state = _classify(sx1, sy1, sx2, sy2, cstart, citems, cell,
                               gx0, gy0, nx, ny, midx, midy,
                               ux, uy, bsx, bsy, cand, vis_memo, &irs)
    return state, irs


def best_association(const double[::1] sx1, const double[::1] sy1,
                     const double[::1] sx2, const double[::1] sy2,
                     const int[::1] cstart, const int[::1] citems,
                     double cell, double gx0, double gy0, int nx, int ny,
                     const double[::1] midx, const double[::1] midy,
                     double ux, double uy,
                     const double[::1] bsx, const double[::1] bsy,
                     const double[::1] dist, const long[::1] order,
                     double c_l, double c_n, double c_r,
                     double al, double an, double d_serve,
                     const int[::1] cand, const double[::1] cand_r,
                     signed char[::1] vis_memo, bint exact_geom):
    """Max-power association scan over BSs sorted by distance.

    Walks BSs nearest-first and stops once an upper power bound for all
    remaining BSs falls below the incumbent. Returns
    (bs_index, state, irs_index, power).
    """
    cdef double best_p = -1.0
    cdef int best_i = -1, best_state = -1, best_irs = -1
    cdef double rmin = cand_r[0] if cand.shape[0] > 0 else -1.0
    cdef int k, i, state, irs
    cdef double x, bound, b2, dp, p, rr, dprime
    for k in range(order.shape[0]):
        i = <int>order[k]
        x = dist[i]
        if x < 1e-9:
            x = 1e-9
        bound = c_l * pow(x, -al)
        b2 = c_n * pow(x, -an)
        if b2 > bound:
            bound = b2
        if rmin > 0:
            if exact_geom:
                dp = x - d_serve
                if dp < 1e-9:
                    dp = 1e-9
            else:
                dp = x
            b2 = c_r * pow(rmin * dp, -al)
            if b2 > bound:
                bound = b2
        if bound <= best_p:
            break
        state = _classify(sx1, sy1, sx2, sy2, cstart, citems, cell, gx0, gy0,
                          nx, ny, midx, midy, ux, uy, bsx[i], bsy[i],
                          cand, vis_memo, &irs)
        if state == 0:
            p = c_l * pow(x, -al)
        elif state == 1:
            p = c_n * pow(x, -an)
        else:
            rr = sqrt((midx[irs] - ux) ** 2 + (midy[irs] - uy) ** 2)
            if exact_geom:
                dprime = sqrt((midx[irs] - bsx[i]) ** 2 + (midy[irs] - bsy[i]) ** 2)
            else:
                dprime = x
            if rr < 1e-9:
                rr = 1e-9
            if dprime < 1e-9:
                dprime = 1e-9
            p = c_r * pow(rr * dprime, -al)
        if p > best_p:
            best_p = p
            best_i = i
            best_state = state
            best_irs = irs
    return best_i, best_state, best_irs, best_p


def any_beating(const double[::1] sx1, const double[::1] sy1,
                const double[::1] sx2, const double[::1] sy2,
                const int[::1] cstart, const int[::1] citems,
                double cell, double gx0, double gy0, int nx, int ny,
                const double[::1] midx, const double[::1] midy,
                double ux, double uy,
                const double[::1] bsx, const double[::1] bsy,
                const double[::1] dist_pre, const long[::1] order, double v,
                double c_l, double c_n, double al, double an,
                double p_serve, int exclude,
                const int[::1] cand, signed char[::1] vis_memo):
    """True iff some BS other than `exclude` beats p_serve after the move.

    Candidates count at LoS power when the post-move direct link is clear
    and at NLoS power when blocked with no reachable IRS; blocked BSs whose
    link state is reconfigured LoS are not handover targets and are
    skipped. `order`/`dist_pre` index BSs by pre-move distance; post-move
    distances differ by at most v, which the pruning bound accounts for.
    """
    cdef int k, i, state, irs
    cdef double bd, bound, b2, d, p
    for k in range(order.shape[0]):
        i = <int>order[k]
        if i == exclude:
            continue
        bd = dist_pre[i] - v
        if bd < 1e-9:
            bd = 1e-9
        bound = c_l * pow(bd, -al)
        b2 = c_n * pow(bd, -an)
        if b2 > bound:
            bound = b2
        if bound <= p_serve:
            break
        d = sqrt((bsx[i] - ux) ** 2 + (bsy[i] - uy) ** 2)
        if d < 1e-9:
            d = 1e-9
        if _any_hit(sx1, sy1, sx2, sy2, cstart, citems, cell, gx0, gy0,
                    nx, ny, ux, uy, bsx[i], bsy[i], -1):
            p = c_n * pow(d, -an)
            if p > p_serve:
                # only now does NLoS vs reconfigured-LoS matter
                state = _classify(sx1, sy1, sx2, sy2, cstart, citems, cell,
                                  gx0, gy0, nx, ny, midx, midy,
                                  ux, uy, bsx[i], bsy[i], cand, vis_memo, &irs)
                if state == 1:
                    return True
        else:
            p = c_l * pow(d, -al)
            if p > p_serve:
                return True
    return False


cdef bint _any_brute(const double[::1] sx1, const double[::1] sy1,
                     const double[::1] sx2, const double[::1] sy2,
                     long lo, long hi,
                     double ax, double ay, double bx, double by,
                     long exclude) nogil:
    cdef long s
    for s in range(lo, hi):
        if s == exclude:
            continue
        if _seg_int(ax, ay, bx, by, sx1[s], sy1[s], sx2[s], sy2[s]):
            return True
    return False


def density_trials(const long[::1] off,
                   const double[::1] sx1, const double[::1] sy1,
                   const double[::1] sx2, const double[::1] sy2,
                   const double[::1] midx, const double[::1] midy,
                   const unsigned char[::1] irs,
                   double d, double d_serve,
                   signed char[::1] out):
    """Classify the link user(0,0) -> BS(d,0) for a batch of blockage fields.

    Trial t owns segments off[t]..off[t+1]; out[t] gets 0/1/2 for
    LoS/NLoS/reconfigured LoS. Fields are small enough that brute-force
    within a trial beats building a grid.
    """
    cdef long t, lo, hi, s, pick
    cdef double d2 = d_serve * d_serve
    cdef double r2, best_r2
    cdef int found
    cdef long n_trials = off.shape[0] - 1
    for t in range(n_trials):
        lo = off[t]
        hi = off[t + 1]
        if not _any_brute(sx1, sy1, sx2, sy2, lo, hi, 0.0, 0.0, d, 0.0, -1):
            out[t] = 0
            continue
        out[t] = 1
        # candidates nearest-first without materializing a sorted list
        best_r2 = -1.0
        while True:
            pick = -1
            for s in range(lo, hi):
                if not irs[s]:
                    continue
                r2 = midx[s] * midx[s] + midy[s] * midy[s]
                if r2 > d2 or r2 <= best_r2:
                    continue
                if pick == -1 or r2 < (midx[pick] * midx[pick]
                                       + midy[pick] * midy[pick]):
                    pick = s
            if pick == -1:
                break
            best_r2 = midx[pick] * midx[pick] + midy[pick] * midy[pick]
            if not _same_side(sx1[pick], sy1[pick], sx2[pick], sy2[pick],
                              0.0, 0.0, d, 0.0):
                continue
            if _any_brute(sx1, sy1, sx2, sy2, lo, hi,
                          0.0, 0.0, midx[pick], midy[pick], pick):
                continue
            if _any_brute(sx1, sy1, sx2, sy2, lo, hi,
                          midx[pick], midy[pick], d, 0.0, pick):
                continue
            out[t] = 2
            break


def irs_trials(const long[::1] off,
               const double[::1] sx1, const double[::1] sy1,
               const double[::1] sx2, const double[::1] sy2,
               const double[::1] hx1, const double[::1] hy1,
               const double[::1] hx2, const double[::1] hy2,
               double ix, double iy, double d,
               unsigned char[::1] out_blocked, unsigned char[::1] out_ok):
    """Conditional reconfiguration events for an IRS host pinned at (ix, iy).

    Per trial: out_blocked = direct user->BS link blocked (host counts);
    out_ok = host line leaves user and BS on one side and both reflection
    legs are clear of the background field (host excluded).
    """
    cdef long t, lo, hi
    cdef long n_trials = off.shape[0] - 1
    cdef bint blocked, ok
    for t in range(n_trials):
        lo = off[t]
        hi = off[t + 1]
        blocked = _seg_int(0.0, 0.0, d, 0.0, hx1[t], hy1[t], hx2[t], hy2[t])
        if not blocked:
            blocked = _any_brute(sx1, sy1, sx2, sy2, lo, hi, 0.0, 0.0, d, 0.0, -1)
        out_blocked[t] = 1 if blocked else 0
        ok = _same_side(hx1[t], hy1[t], hx2[t], hy2[t], 0.0, 0.0, d, 0.0)
        if ok:
            ok = not _any_brute(sx1, sy1, sx2, sy2, lo, hi, 0.0, 0.0, ix, iy, -1)
        if ok:
            ok = not _any_brute(sx1, sy1, sx2, sy2, lo, hi, ix, iy, d, 0.0, -1)
        out_ok[t] = 1 if ok else 0
