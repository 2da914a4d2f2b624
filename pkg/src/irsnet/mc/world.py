"""One Monte-Carlo realization: BS points, blockage segments, IRS subset.

The typical user sits at the origin and the world is centered on it, which
keeps nearest-BS statistics free of boundary bias. Blockage midpoints are
sampled on a slightly larger disk so segments crossing the BS disk rim are
not lost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..scenario import Scenario
from .geometry import SegmentSet

__all__ = ["World", "generate_world", "default_sim_radius", "dump_world"]

GUARD_RADIUS = 200.0  # m, kept between user excursions and the world rim


@dataclass
class World:
    bs_x: np.ndarray
    bs_y: np.ndarray
    segs: SegmentSet
    sim_radius: float
    guard_radius: float
    seed: object

    @property
    def irs_idx(self) -> np.ndarray:
        """Host indices of IRS-equipped blockages (cached)."""
        cached = getattr(self, "_irs_idx", None)
        if cached is None:
            cached = np.flatnonzero(self.segs.irs).astype(np.int64)
            self._irs_idx = cached
        return cached


def _uniform_disk(rng, n: int, radius: float, cx: float = 0.0, cy: float = 0.0):
    r = radius * np.sqrt(rng.random(n))
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    return cx + r * np.cos(phi), cy + r * np.sin(phi)


def blockage_field(rng, sc: Scenario, radius: float, cx: float = 0.0,
                   cy: float = 0.0) -> SegmentSet:
    """Poisson field of IRS-flagged blockage segments on a disk."""
    pad = radius + sc.length.hi / 2.0
    n = rng.poisson(sc.lambda_o * math.pi * pad * pad)
    mx, my = _uniform_disk(rng, n, pad, cx, cy)
    lengths = sc.length.sample(rng, n)
    beta = rng.uniform(0.0, 2.0 * math.pi, n)
    irs = (rng.random(n) < sc.mu).astype(np.uint8)
    hx = 0.5 * lengths * np.cos(beta)
    hy = 0.5 * lengths * np.sin(beta)
    ext = pad + sc.length.hi  # disk plus half-length overhang, plus margin
    return SegmentSet.build(
        mx - hx, my - hy, mx + hx, my + hy, mx, my, irs,
        bounds=(cx - ext, cy - ext, cx + ext, cy + ext),
        max_len=sc.length.hi,
    )


def default_sim_radius(sc: Scenario) -> float:
    """World radius covering both nearest-BS statistics and the far LoS tail.

    Base radius handles nearest-neighbor bias. When blockages thin the LoS
    field (rate c = los_rate), BSs far away can still beat a weak serving
    link, so the radius is grown until the expected number of missed
    LoS-capable BSs beyond it is negligible; 10/c bounds that when even the
    whole plane holds only a handful of LoS BSs.
    """
    base = max(2000.0, 5.0 / math.sqrt(math.pi * sc.lambda_b))
    c = sc.los_rate
    if c <= 0.0:
        return base
    total_los = 2.0 * math.pi * sc.lambda_b / (c * c)
    if total_los <= 15.0:
        r_los = 10.0 / c
    else:
        # smallest u with (1+u)e^-u <= 1 - 15/total_los, radius u/c
        target = 1.0 - 15.0 / total_los
        lo_u, hi_u = 0.0, 40.0
        for _ in range(60):
            mid = 0.5 * (lo_u + hi_u)
            if (1.0 + mid) * math.exp(-mid) <= target:
                hi_u = mid
            else:
                lo_u = mid
        r_los = min(hi_u / c, 10.0 / c)
    return max(base, r_los)


def generate_world(sc: Scenario, sim_radius: float | None = None,
                   seed: object = 0, rng=None) -> World:
    """Sample one world. Fixed seed gives a bit-identical world.

    Draw order (contract for reproducibility): BS count, BS positions,
    blockage count, midpoints, lengths, orientations, IRS flags. Callers
    that keep drawing from the same stream (the drop loop) pass `rng`.
    """
    if sim_radius is None:
        sim_radius = default_sim_radius(sc)
    if sim_radius <= 0:
        raise ValueError("sim_radius must be > 0")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
    n_bs = rng.poisson(sc.lambda_b * math.pi * sim_radius * sim_radius)
    bs_x, bs_y = _uniform_disk(rng, n_bs, sim_radius)
    segs = blockage_field(rng, sc, sim_radius)
    return World(bs_x, bs_y, segs, float(sim_radius), GUARD_RADIUS, seed)


def dump_world(world: World, fh) -> None:
    """Line-oriented debug dump: `BS x y` / `BLK x y l beta irs_flag`."""
    for x, y in zip(world.bs_x, world.bs_y):
        fh.write(f"BS {x:.6f} {y:.6f}\n")
    s = world.segs
    lengths = np.hypot(s.x2 - s.x1, s.y2 - s.y1)
    beta = np.arctan2(s.y2 - s.y1, s.x2 - s.x1) % math.pi
    for i in range(len(s)):
        fh.write(
            f"BLK {s.mid_x[i]:.6f} {s.mid_y[i]:.6f} "
            f"{lengths[i]:.6f} {beta[i]:.6f} {int(s.irs[i])}\n"
        )
