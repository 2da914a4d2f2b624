"""Pure-numpy fallback for the compiled geometry kernels.

Signature-compatible with _kernels.pyx so geometry.py can swap backends at
import time. Occlusion queries test every segment (vectorized) instead of
walking the grid; results are identical, throughput is much lower.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "seg_intersect",
    "any_hit",
    "classify_one",
    "best_association",
    "any_beating",
    "density_trials",
    "irs_trials",
]


def _orient(px, py, qx, qy, rx, ry):
    return (qx - px) * (ry - py) - (qy - py) * (rx - px)


def _on_bbox(px, py, qx, qy, rx, ry):
    return (
        (np.minimum(px, qx) <= rx)
        & (rx <= np.maximum(px, qx))
        & (np.minimum(py, qy) <= ry)
        & (ry <= np.maximum(py, qy))
    )


def _intersect_mask(ax, ay, bx, by, cx, cy, dx, dy):
    """Vectorized closed segment-segment intersection against arrays c-d."""
    d1 = _orient(cx, cy, dx, dy, ax, ay)
    d2 = _orient(cx, cy, dx, dy, bx, by)
    d3 = _orient(ax, ay, bx, by, cx, cy)
    d4 = _orient(ax, ay, bx, by, dx, dy)
    proper = (
        ((d1 > 0) != (d2 > 0))
        & ((d3 > 0) != (d4 > 0))
        & (d1 != 0)
        & (d2 != 0)
        & (d3 != 0)
        & (d4 != 0)
    )
    touch = (
        ((d1 == 0) & _on_bbox(cx, cy, dx, dy, ax, ay))
        | ((d2 == 0) & _on_bbox(cx, cy, dx, dy, bx, by))
        | ((d3 == 0) & _on_bbox(ax, ay, bx, by, cx, cy))
        | ((d4 == 0) & _on_bbox(ax, ay, bx, by, dx, dy))
    )
    return proper | touch


def build_grid(x1, y1, x2, y2, cell, gx0, gy0, nx, ny):
    """Numpy CSR registration of segment bounding boxes into grid cells."""
    n = len(x1)
    pad = 1e-9
    xmin, xmax = np.minimum(x1, x2) - pad, np.maximum(x1, x2) + pad
    ymin, ymax = np.minimum(y1, y2) - pad, np.maximum(y1, y2) + pad
    cx0 = np.clip(((xmin - gx0) // cell).astype(np.int64), 0, nx - 1)
    cx1 = np.clip(((xmax - gx0) // cell).astype(np.int64), 0, nx - 1)
    cy0 = np.clip(((ymin - gy0) // cell).astype(np.int64), 0, ny - 1)
    cy1 = np.clip(((ymax - gy0) // cell).astype(np.int64), 0, ny - 1)
    span_x, span_y = cx1 - cx0, cy1 - cy0
    cells_acc, segs_acc = [], []
    idx = np.arange(n, dtype=np.int64)
    for dx in range(int(span_x.max()) + 1 if n else 0):
        mx = span_x >= dx
        for dy in range(int(span_y.max()) + 1):
            m = mx & (span_y >= dy)
            if not m.any():
                continue
            cells_acc.append((cy0[m] + dy) * nx + (cx0[m] + dx))
            segs_acc.append(idx[m])
    cell_start = np.zeros(nx * ny + 1, dtype=np.int32)
    if not cells_acc:
        return cell_start, np.zeros(0, dtype=np.int32)
    cells = np.concatenate(cells_acc)
    segs = np.concatenate(segs_acc)
    order = np.argsort(cells, kind="stable")
    counts = np.bincount(cells, minlength=nx * ny)
    np.cumsum(counts, out=cell_start[1:])
    return cell_start, segs[order].astype(np.int32)


def seg_intersect(ax, ay, bx, by, cx, cy, dx, dy):
    return bool(
        _intersect_mask(
            ax,
            ay,
            bx,
            by,
            np.asarray([cx]),
            np.asarray([cy]),
            np.asarray([dx]),
            np.asarray([dy]),
        )[0]
    )


def _any_hit(sx1, sy1, sx2, sy2, ax, ay, bx, by, exclude):
    hits = _intersect_mask(ax, ay, bx, by, sx1, sy1, sx2, sy2)
    if exclude >= 0:
        hits[exclude] = False
    return bool(hits.any())


def any_hit(sx1, sy1, sx2, sy2, cstart, citems, cell, gx0, gy0, nx, ny,
            ax, ay, bx, by, exclude=-1):
    return _any_hit(sx1, sy1, sx2, sy2, ax, ay, bx, by, exclude)


def _same_side(e1x, e1y, e2x, e2y, px, py, qx, qy):
    cp = (e2x - e1x) * (py - e1y) - (e2y - e1y) * (px - e1x)
    cq = (e2x - e1x) * (qy - e1y) - (e2y - e1y) * (qx - e1x)
    return cp * cq > 0


def _classify(sx1, sy1, sx2, sy2, midx, midy, ux, uy, bsx, bsy, cand, vis_memo):
    if not _any_hit(sx1, sy1, sx2, sy2, ux, uy, bsx, bsy, -1):
        return 0, -1
    for i, s in enumerate(cand):
        if not _same_side(sx1[s], sy1[s], sx2[s], sy2[s], ux, uy, bsx, bsy):
            continue
        if vis_memo[i] == -1:
            vis_memo[i] = 0 if _any_hit(
                sx1, sy1, sx2, sy2, ux, uy, midx[s], midy[s], s
            ) else 1
        if vis_memo[i] == 0:
            continue
        if _any_hit(sx1, sy1, sx2, sy2, midx[s], midy[s], bsx, bsy, s):
            continue
        return 2, int(s)
    return 1, -1


def classify_one(sx1, sy1, sx2, sy2, cstart, citems, cell, gx0, gy0, nx, ny,
                 midx, midy, ux, uy, bsx, bsy, cand, vis_memo):
    return _classify(sx1, sy1, sx2, sy2, midx, midy, ux, uy, bsx, bsy,
                     cand, vis_memo)


def best_association(sx1, sy1, sx2, sy2, cstart, citems, cell, gx0, gy0,
                     nx, ny, midx, midy, ux, uy, bsx, bsy, dist, order,
                     c_l, c_n, c_r, al, an, d_serve, cand, cand_r,
                     vis_memo, exact_geom):
    best_p = -1.0
    best = (-1, -1, -1)
    rmin = float(cand_r[0]) if len(cand) > 0 else -1.0
    for i in order:
        x = max(float(dist[i]), 1e-9)
        bound = max(c_l * x**-al, c_n * x**-an)
        if rmin > 0:
            dp = max(x - d_serve, 1e-9) if exact_geom else x
            bound = max(bound, c_r * (rmin * dp) ** -al)
        if bound <= best_p:
            break
        state, irs = _classify(sx1, sy1, sx2, sy2, midx, midy,
                               ux, uy, bsx[i], bsy[i], cand, vis_memo)
        if state == 0:
            p = c_l * x**-al
        elif state == 1:
            p = c_n * x**-an
        else:
            rr = max(math.hypot(midx[irs] - ux, midy[irs] - uy), 1e-9)
            dprime = (
                max(math.hypot(midx[irs] - bsx[i], midy[irs] - bsy[i]), 1e-9)
                if exact_geom
                else x
            )
            p = c_r * (rr * dprime) ** -al
        if p > best_p:
            best_p = p
            best = (int(i), state, irs)
    return best[0], best[1], best[2], best_p


def any_beating(sx1, sy1, sx2, sy2, cstart, citems, cell, gx0, gy0, nx, ny,
                midx, midy, ux, uy, bsx, bsy, dist_pre, order, v,
                c_l, c_n, al, an, p_serve, exclude, cand, vis_memo):
    for i in order:
        if i == exclude:
            continue
        bd = max(float(dist_pre[i]) - v, 1e-9)
        if max(c_l * bd**-al, c_n * bd**-an) <= p_serve:
            break
        d = max(math.hypot(bsx[i] - ux, bsy[i] - uy), 1e-9)
        if _any_hit(sx1, sy1, sx2, sy2, ux, uy, bsx[i], bsy[i], -1):
            if c_n * d**-an > p_serve:
                state, _ = _classify(sx1, sy1, sx2, sy2, midx, midy,
                                     ux, uy, bsx[i], bsy[i], cand, vis_memo)
                if state == 1:
                    return True
        elif c_l * d**-al > p_serve:
            return True
    return False


def density_trials(off, sx1, sy1, sx2, sy2, midx, midy, irs, d, d_serve, out):
    d2 = d_serve * d_serve
    for t in range(len(off) - 1):
        lo, hi = int(off[t]), int(off[t + 1])
        tx1, ty1 = sx1[lo:hi], sy1[lo:hi]
        tx2, ty2 = sx2[lo:hi], sy2[lo:hi]
        if not _any_hit(tx1, ty1, tx2, ty2, 0.0, 0.0, d, 0.0, -1):
            out[t] = 0
            continue
        out[t] = 1
        r2 = midx[lo:hi] ** 2 + midy[lo:hi] ** 2
        cand = np.flatnonzero(irs[lo:hi] & (r2 <= d2))
        for j in cand[np.argsort(r2[cand], kind="stable")]:
            if not _same_side(tx1[j], ty1[j], tx2[j], ty2[j], 0.0, 0.0, d, 0.0):
                continue
            if _any_hit(tx1, ty1, tx2, ty2, 0.0, 0.0, midx[lo + j], midy[lo + j], j):
                continue
            if _any_hit(tx1, ty1, tx2, ty2, midx[lo + j], midy[lo + j], d, 0.0, j):
                continue
            out[t] = 2
            break


def irs_trials(off, sx1, sy1, sx2, sy2, hx1, hy1, hx2, hy2, ix, iy, d,
               out_blocked, out_ok):
    for t in range(len(off) - 1):
        lo, hi = int(off[t]), int(off[t + 1])
        tx1, ty1 = sx1[lo:hi], sy1[lo:hi]
        tx2, ty2 = sx2[lo:hi], sy2[lo:hi]
        blocked = seg_intersect(0.0, 0.0, d, 0.0, hx1[t], hy1[t], hx2[t], hy2[t])
        if not blocked:
            blocked = _any_hit(tx1, ty1, tx2, ty2, 0.0, 0.0, d, 0.0, -1)
        out_blocked[t] = 1 if blocked else 0
        ok = _same_side(hx1[t], hy1[t], hx2[t], hy2[t], 0.0, 0.0, d, 0.0)
        if ok:
            ok = not _any_hit(tx1, ty1, tx2, ty2, 0.0, 0.0, ix, iy, -1)
        if ok:
            ok = not _any_hit(tx1, ty1, tx2, ty2, ix, iy, d, 0.0, -1)
        out_ok[t] = 1 if ok else 0
