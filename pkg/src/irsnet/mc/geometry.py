"""Backend selection and the spatial index for blockage segments.

The compiled kernels (_kernels, Cython) are picked when importable; the
numpy fallback (_kernels_py) otherwise, or when IRSNET_PURE_PYTHON is set.
Both expose identical functions, so everything above this module is
backend-agnostic. benchmarks/bench_backends.py compares the two.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

if os.environ.get("IRSNET_PURE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

__all__ = ["BACKEND", "SegmentSet", "seg_intersect"]


def seg_intersect(ax, ay, bx, by, cx, cy, dx, dy) -> bool:
    """Closed segment-segment intersection (touching counts)."""
    return _impl.seg_intersect(ax, ay, bx, by, cx, cy, dx, dy)


def _pick_cell(n_seg: int, area: float, max_len: float) -> float:
    if n_seg == 0 or area <= 0:
        return 100.0
    density = n_seg / area
    return float(np.clip(max(max_len, 0.8 / math.sqrt(density)), 10.0, 400.0))


@dataclass
class SegmentSet:
    """Blockage segments plus a uniform-grid index for occlusion queries.

    Segments are registered in every grid cell their bounding box overlaps
    (CSR layout: cell_start/cell_items), so a grid walk along a query
    segment sees every possible blocker.
    """

    x1: np.ndarray
    y1: np.ndarray
    x2: np.ndarray
    y2: np.ndarray
    mid_x: np.ndarray
    mid_y: np.ndarray
    irs: np.ndarray  # uint8 flags
    cell: float = 0.0
    gx0: float = 0.0
    gy0: float = 0.0
    nx: int = 1
    ny: int = 1
    cell_start: np.ndarray = field(default_factory=lambda: np.zeros(2, np.int32))
    cell_items: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int32))

    @classmethod
    def build(cls, x1, y1, x2, y2, mid_x, mid_y, irs, cell: float | None = None,
              bounds: tuple[float, float, float, float] | None = None,
              max_len: float | None = None):
        """bounds = (gx0, gy0, gx1, gy1) covering all segments; computed
        from the data when not supplied by the sampler."""
        x1 = np.ascontiguousarray(x1, dtype=np.float64)
        y1 = np.ascontiguousarray(y1, dtype=np.float64)
        x2 = np.ascontiguousarray(x2, dtype=np.float64)
        y2 = np.ascontiguousarray(y2, dtype=np.float64)
        mid_x = np.ascontiguousarray(mid_x, dtype=np.float64)
        mid_y = np.ascontiguousarray(mid_y, dtype=np.float64)
        irs = np.ascontiguousarray(irs, dtype=np.uint8)
        n = len(x1)
        if n == 0:
            return cls(x1, y1, x2, y2, mid_x, mid_y, irs, cell=100.0)

        if bounds is None:
            gx0 = float(min(x1.min(), x2.min())) - 1e-6
            gy0 = float(min(y1.min(), y2.min())) - 1e-6
            gx1 = float(max(x1.max(), x2.max())) + 1e-6
            gy1 = float(max(y1.max(), y2.max())) + 1e-6
        else:
            gx0, gy0, gx1, gy1 = bounds
        w = gx1 - gx0
        h = gy1 - gy0
        if cell is None:
            if max_len is None:
                max_len = float(np.hypot(x2 - x1, y2 - y1).max())
            cell = _pick_cell(n, w * h, max_len)
        nx = max(1, int(math.ceil(w / cell)))
        ny = max(1, int(math.ceil(h / cell)))

        cell_start, cell_items = _impl.build_grid(
            x1, y1, x2, y2, float(cell), gx0, gy0, nx, ny
        )

        return cls(
            x1, y1, x2, y2, mid_x, mid_y, irs,
            cell=float(cell), gx0=gx0, gy0=gy0, nx=nx, ny=ny,
            cell_start=cell_start, cell_items=cell_items,
        )

    def __len__(self) -> int:
        return len(self.x1)

    # --- backend dispatch ---------------------------------------------------

    def _grid_args(self):
        return (
            self.x1, self.y1, self.x2, self.y2,
            self.cell_start, self.cell_items,
            self.cell, self.gx0, self.gy0, self.nx, self.ny,
        )

    def blocked(self, ax, ay, bx, by, exclude: int = -1) -> bool:
        """True iff any segment (except `exclude`) blocks a->b."""
        if len(self) == 0:
            return False
        return bool(
            _impl.any_hit(*self._grid_args(), float(ax), float(ay),
                          float(bx), float(by), int(exclude))
        )

    def classify(self, ux, uy, bsx, bsy, cand, vis_memo):
        """LoS-state (0/1/2) and serving IRS host index for one link."""
        if len(self) == 0:
            return 0, -1
        return _impl.classify_one(
            *self._grid_args(), self.mid_x, self.mid_y,
            float(ux), float(uy), float(bsx), float(bsy), cand, vis_memo,
        )

    def best_association(self, ux, uy, bs_x, bs_y, dist, order,
                         c_l, c_n, c_r, al, an, d_serve,
                         cand, cand_r, vis_memo, exact_geom: bool):
        if len(self) == 0:
            # every link LoS: nearest BS wins
            i = int(order[0])
            return i, 0, -1, c_l * max(float(dist[i]), 1e-9) ** -al
        return _impl.best_association(
            *self._grid_args(), self.mid_x, self.mid_y, float(ux), float(uy),
            bs_x, bs_y, dist, order, c_l, c_n, c_r, al, an, d_serve,
            cand, cand_r, vis_memo, bool(exact_geom),
        )

    def any_beating(self, ux, uy, bs_x, bs_y, dist_pre, order, v,
                    c_l, c_n, al, an, p_serve, exclude: int,
                    cand, vis_memo) -> bool:
        if len(self) == 0:
            d = np.hypot(bs_x - ux, bs_y - uy)
            d[exclude] = np.inf
            return bool((c_l * np.maximum(d, 1e-9) ** -al > p_serve).any())
        return bool(
            _impl.any_beating(
                *self._grid_args(), self.mid_x, self.mid_y,
                float(ux), float(uy), bs_x, bs_y,
                dist_pre, order, float(v), c_l, c_n, al, an,
                float(p_serve), int(exclude), cand, vis_memo,
            )
        )


def density_trials(off, sx1, sy1, sx2, sy2, midx, midy, irs, d, d_serve, out):
    _impl.density_trials(off, sx1, sy1, sx2, sy2, midx, midy, irs,
                         float(d), float(d_serve), out)


def irs_trials(off, sx1, sy1, sx2, sy2, hx1, hy1, hx2, hy2, ix, iy, d,
               out_blocked, out_ok):
    _impl.irs_trials(off, sx1, sy1, sx2, sy2, hx1, hy1, hx2, hy2,
                     float(ix), float(iy), float(d), out_blocked, out_ok)
