import math

import numpy as np
import pytest

from irsnet.mc import _kernels_py, geometry
from irsnet.mc.geometry import SegmentSet, seg_intersect

try:
    from irsnet.mc import _kernels as compiled
except ImportError:
    compiled = None


def test_backend_reported():
    assert geometry.BACKEND in ("compiled", "python")


@pytest.mark.parametrize(
    "segs,expected",
    [
        (((0, 0, 10, 0), (5, -1, 5, 1)), True),   # perpendicular crossing
        (((0, 0, 10, 0), (0, 1, 10, 1)), False),  # parallel offset
        (((0, 0, 10, 0), (5, 0, 5, 3)), True),    # endpoint touching
        (((0, 0, 10, 0), (4, 0, 6, 0)), True),    # collinear overlap
        (((0, 0, 10, 0), (11, 0, 14, 0)), False), # collinear disjoint
        (((0, 0, 10, 0), (5, 1e-12, 5, 2)), False),  # off by a hair
    ],
)
def test_seg_intersect_cases(segs, expected):
    (a, b) = segs
    assert seg_intersect(*a, *b) is expected


def _random_world(rng, n=400, radius=500.0):
    mx = rng.uniform(-radius, radius, n)
    my = rng.uniform(-radius, radius, n)
    ln = rng.uniform(1.0, 30.0, n)
    beta = rng.uniform(0, 2 * math.pi, n)
    hx, hy = 0.5 * ln * np.cos(beta), 0.5 * ln * np.sin(beta)
    irs = (rng.random(n) < 0.5).astype(np.uint8)
    return SegmentSet.build(mx - hx, my - hy, mx + hx, my + hy, mx, my, irs)


def test_grid_query_matches_brute_force():
    rng = np.random.default_rng(11)
    segs = _random_world(rng)
    for _ in range(500):
        ax, ay, bx, by = rng.uniform(-480, 480, 4)
        brute = bool(
            _kernels_py._intersect_mask(
                ax, ay, bx, by, segs.x1, segs.y1, segs.x2, segs.y2
            ).any()
        )
        assert segs.blocked(ax, ay, bx, by) is brute


@pytest.mark.skipif(compiled is None, reason="compiled backend unavailable")
def test_backend_parity_on_classification():
    rng = np.random.default_rng(13)
    segs = _random_world(rng, n=300)
    cand = np.flatnonzero(segs.irs)
    for _ in range(200):
        ux, uy, bx, by = rng.uniform(-300, 300, 4)
        r = np.hypot(segs.mid_x[cand] - ux, segs.mid_y[cand] - uy)
        keep = cand[r <= 60.0][np.argsort(r[r <= 60.0], kind="stable")]
        keep = keep.astype(np.int32)
        memo_a = np.full(len(keep), -1, dtype=np.int8)
        memo_b = np.full(len(keep), -1, dtype=np.int8)
        got_c = compiled.classify_one(
            *segs._grid_args(), segs.mid_x, segs.mid_y, ux, uy, bx, by,
            keep, memo_a,
        )
        got_p = _kernels_py.classify_one(
            *segs._grid_args(), segs.mid_x, segs.mid_y, ux, uy, bx, by,
            keep, memo_b,
        )
        assert got_c == got_p
        assert np.array_equal(memo_a, memo_b)


@pytest.mark.skipif(compiled is None, reason="compiled backend unavailable")
def test_backend_parity_on_association_scan(sc):
    rng = np.random.default_rng(17)
    segs = _random_world(rng, n=300)
    n_bs = 40
    bx = rng.uniform(-400, 400, n_bs)
    by = rng.uniform(-400, 400, n_bs)
    dist = np.hypot(bx, by)
    order = np.argsort(dist, kind="stable")
    cand = np.flatnonzero(segs.irs)
    r = np.hypot(segs.mid_x[cand], segs.mid_y[cand])
    keep = (r <= 50.0)
    cand = cand[keep][np.argsort(r[keep], kind="stable")].astype(np.int32)
    cand_r = np.sort(r[keep])
    args = (segs.mid_x, segs.mid_y, 0.0, 0.0, bx, by, dist, order,
            1e-10, 1e-14, 1e-8, 2.09, 3.75, 50.0, cand, cand_r)
    out_c = compiled.best_association(
        *segs._grid_args(), *args, np.full(len(cand), -1, np.int8), False)
    out_p = _kernels_py.best_association(
        *segs._grid_args(), *args, np.full(len(cand), -1, np.int8), False)
    assert out_c[:3] == out_p[:3]
    assert out_c[3] == pytest.approx(out_p[3], rel=1e-12)


def test_empty_segment_set_blocks_nothing():
    empty = SegmentSet.build(*(np.zeros(0),) * 6, np.zeros(0, np.uint8))
    assert not empty.blocked(0, 0, 100, 100)


def test_grid_covers_boundary_exact_hits():
    # segment endpoint exactly on a grid cell boundary
    segs = SegmentSet.build(
        np.array([100.0]), np.array([-5.0]), np.array([100.0]), np.array([5.0]),
        np.array([100.0]), np.array([0.0]), np.array([0], np.uint8), cell=50.0,
    )
    assert segs.blocked(0.0, 0.0, 200.0, 0.0)
    assert not segs.blocked(0.0, 6.0, 200.0, 6.0)


def test_long_diagonal_queries_hit_far_segments():
    # regression guard for the grid walk: a blocker far along a diagonal
    segs = SegmentSet.build(
        np.array([700.0]), np.array([690.0]), np.array([700.0]), np.array([710.0]),
        np.array([700.0]), np.array([700.0]), np.array([0], np.uint8),
    )
    assert segs.blocked(0.0, 0.0, 1000.0, 1000.0)
    assert not segs.blocked(0.0, 0.0, -1000.0, -1000.0)
