"""Independent oracles used by the tests.

Everything here is deliberately written from scratch against textbook
constructions (polygon clipping, lens areas, direct sampling), not by
calling the package's own numerics.
"""

from __future__ import annotations

import math

import numpy as np


def clip_polygon(subject, clipper):
    """Sutherland-Hodgman clip of a convex `subject` by convex `clipper`
    (both counter-clockwise lists of (x, y))."""

    def inside(p, a, b):
        return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-12

    def intersection(p1, p2, a, b):
        x1, y1 = p1
        x2, y2 = p2
        x3, y3 = a
        x4, y4 = b
        den = (x1 - x2) * (y3 - y4) - (y1 - y2) * (x3 - x4)
        t = ((x1 - x3) * (y3 - y4) - (y1 - y3) * (x3 - x4)) / den
        return (x1 + t * (x2 - x1), y1 + t * (y2 - y1))

    output = list(subject)
    n = len(clipper)
    for i in range(n):
        a, b = clipper[i], clipper[(i + 1) % n]
        if not output:
            return []
        points, output = output, []
        s = points[-1]
        for e in points:
            if inside(e, a, b):
                if not inside(s, a, b):
                    output.append(intersection(s, e, a, b))
                output.append(e)
            elif inside(s, a, b):
                output.append(intersection(s, e, a, b))
            s = e
    return output


def polygon_area(poly) -> float:
    s = 0.0
    for i in range(len(poly)):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % len(poly)]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def ccw(poly):
    s = 0.0
    for i in range(len(poly)):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % len(poly)]
        s += x1 * y2 - x2 * y1
    return list(poly) if s > 0 else list(poly)[::-1]


def blocking_parallelogram(p, q, beta: float, length: float):
    """Midpoint region of blockages (orientation beta, given length) that
    cross segment p-q: the Minkowski sum of the segment with the centered
    blockage segment."""
    hx = 0.5 * length * math.cos(beta)
    hy = 0.5 * length * math.sin(beta)
    return ccw(
        [
            (p[0] - hx, p[1] - hy),
            (q[0] - hx, q[1] - hy),
            (q[0] + hx, q[1] + hy),
            (p[0] + hx, p[1] + hy),
        ]
    )


def overlap_area_oracle(x1: float, phi1: float, v: float, beta: float,
                        length: float) -> float:
    """Exact |S_t1 and S_t2 overlap| via polygon clipping."""
    bs = (x1 * math.cos(phi1), x1 * math.sin(phi1))
    s1 = blocking_parallelogram((0.0, 0.0), bs, beta, length)
    s2 = blocking_parallelogram((v, 0.0), bs, beta, length)
    out = clip_polygon(s1, s2)
    return polygon_area(out) if out else 0.0


def escape_area_oracle(x1: float, phi1: float, v: float, beta: float,
                       length: float) -> float:
    """Exact |S_trajectory and S_t2 overlap| via polygon clipping."""
    bs = (x1 * math.cos(phi1), x1 * math.sin(phi1))
    s2 = blocking_parallelogram((v, 0.0), bs, beta, length)
    st = blocking_parallelogram((0.0, 0.0), (v, 0.0), beta, length)
    out = clip_polygon(st, s2)
    return polygon_area(out) if out else 0.0


def lens_area(r1: float, r2: float, d: float) -> float:
    """Area of the intersection of two disks with radii r1, r2 at center
    distance d (standard circle-circle lens formula)."""
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        rm = min(r1, r2)
        return math.pi * rm * rm
    a1 = r1 * r1 * math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    a2 = r2 * r2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    tri = 0.5 * math.sqrt(
        max((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2), 0.0)
    )
    return a1 + a2 - tri


def nakagami_power_samples(rng, m: float, size) -> np.ndarray:
    """Power gains of Nakagami-m fading with unit mean: Gamma(m, 1/m)."""
    return rng.gamma(m, 1.0 / m, size)
