"""Drop-based Monte-Carlo protocols: density, association, transition,
handover.

Each drop is an independent experiment around a typical user at the origin:
build a world, associate by maximum averaged received power, move one unit
time with the blockage-aware random walk, reclassify the serving link, and
test the handover condition. Drops derive independent RNG streams from
(seed, drop_index), so estimates are bit-reproducible and order-independent
under any parallel schedule.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from ..channel import beamforming_gain
from ..scenario import Scenario
from . import geometry
from .world import World, blockage_field, default_sim_radius, generate_world

__all__ = [
    "LOS",
    "NLOS",
    "RLOS",
    "STATE_NAMES",
    "EstimateWithCI",
    "EmptyWorld",
    "StuckUser",
    "TooFewValidDrops",
    "run_drop",
    "estimate",
    "estimate_density",
    "classify_bs",
    "associate",
    "move_user",
    "segment_blocked",
]

LOS, NLOS, RLOS = 0, 1, 2
STATE_NAMES = ("los", "nlos", "rlos")

MAX_MOVE_ATTEMPTS = 10_000


class EmptyWorld(RuntimeError):
    pass


class StuckUser(RuntimeError):
    """Every sampled direction was blocked; the drop is discarded."""


class TooFewValidDrops(RuntimeError):
    pass


@dataclass(frozen=True)
class EstimateWithCI:
    """Bernoulli estimate with a 95% normal-approximation half-width."""

    n_drops: int
    mean: float
    ci_halfwidth: float
    seed: object


def bernoulli(k: int, n: int, seed: object) -> EstimateWithCI:
    if n == 0:
        return EstimateWithCI(0, math.nan, math.nan, seed)
    p = k / n
    return EstimateWithCI(n, p, 1.96 * math.sqrt(p * (1.0 - p) / n), seed)


def _power_consts(sc: Scenario):
    c_r = sc.p_t * sc.k_los**2 * beamforming_gain(sc.n_elements, sc.m_los)
    return sc.p_t * sc.k_los, sc.p_t * sc.k_nlos, c_r, sc.alpha_los, sc.alpha_nlos


def _irs_candidates(world_or_segs, ux: float, uy: float, d_serve: float):
    """IRS hosts within serving range of (ux, uy), nearest first."""
    if isinstance(world_or_segs, World):
        segs = world_or_segs.segs
        idx = world_or_segs.irs_idx
    else:
        segs = world_or_segs
        idx = np.flatnonzero(segs.irs)
    r = np.hypot(segs.mid_x[idx] - ux, segs.mid_y[idx] - uy)
    keep = r <= d_serve
    idx, r = idx[keep], r[keep]
    order = np.argsort(r, kind="stable")
    cand = idx[order].astype(np.int32)
    return cand, r[order], np.full(len(cand), -1, dtype=np.int8)


def segment_blocked(a, b, world: World, exclude: int | None = None) -> bool:
    """True iff any blockage (except `exclude`) crosses segment a-b."""
    if a == b:
        raise ValueError("segment endpoints coincide")
    return world.segs.blocked(a[0], a[1], b[0], b[1],
                              -1 if exclude is None else exclude)


def classify_bs(user, bs, world: World, sc: Scenario,
                irs_mode: str = "analysis_consistent"):
    """LoS-state of the user-BS link and the serving IRS, if any.

    Returns (state_name, info) where info is None for a direct state and
    (host_index, user_irs_distance, irs_bs_distance) for 'rlos'.
    """
    cand, _, memo = _irs_candidates(world, user[0], user[1], sc.d_serve)
    state, irs = world.segs.classify(user[0], user[1], bs[0], bs[1], cand, memo)
    if state != RLOS:
        return STATE_NAMES[state], None
    r = math.hypot(world.segs.mid_x[irs] - user[0], world.segs.mid_y[irs] - user[1])
    if irs_mode == "analysis_consistent":
        d_prime = math.hypot(bs[0] - user[0], bs[1] - user[1])
    else:
        d_prime = math.hypot(world.segs.mid_x[irs] - bs[0],
                             world.segs.mid_y[irs] - bs[1])
    return "rlos", (int(irs), r, d_prime)


def associate(user, world: World, sc: Scenario,
              irs_mode: str = "analysis_consistent"):
    """Bind the user to the BS delivering maximum averaged received power."""
    if len(world.bs_x) == 0:
        raise EmptyWorld("no BS in the world")
    dist = np.hypot(world.bs_x - user[0], world.bs_y - user[1])
    order = np.argsort(dist, kind="stable")
    c_l, c_n, c_r, al, an = _power_consts(sc)
    cand, cand_r, memo = _irs_candidates(world, user[0], user[1], sc.d_serve)
    i, state, irs, power = world.segs.best_association(
        user[0], user[1], world.bs_x, world.bs_y, dist, order,
        c_l, c_n, c_r, al, an, sc.d_serve, cand, cand_r, memo,
        irs_mode == "exact_geometry",
    )
    return i, STATE_NAMES[state], power, (irs if state == RLOS else None)


def move_user(user, world: World, sc: Scenario, rng) -> tuple[float, float]:
    """One step of the modified random walk: resample the direction until
    the movement segment is unobstructed."""
    if sc.v == 0.0:
        return user
    for _ in range(MAX_MOVE_ATTEMPTS):
        psi = rng.uniform(0.0, 2.0 * math.pi)
        nx = user[0] + sc.v * math.cos(psi)
        ny = user[1] + sc.v * math.sin(psi)
        if not world.segs.blocked(user[0], user[1], nx, ny):
            return nx, ny
    raise StuckUser("no unblocked direction found")


def _irs_still_serves(segs, irs: int, ux: float, uy: float,
                      bx: float, by: float, d_serve: float) -> bool:
    r = math.hypot(segs.mid_x[irs] - ux, segs.mid_y[irs] - uy)
    if r > d_serve:
        return False
    e = (segs.x1[irs], segs.y1[irs], segs.x2[irs], segs.y2[irs])
    cu = (e[2] - e[0]) * (uy - e[1]) - (e[3] - e[1]) * (ux - e[0])
    cb = (e[2] - e[0]) * (by - e[1]) - (e[3] - e[1]) * (bx - e[0])
    if cu * cb <= 0:
        return False
    if segs.blocked(ux, uy, segs.mid_x[irs], segs.mid_y[irs], exclude=irs):
        return False
    return not segs.blocked(segs.mid_x[irs], segs.mid_y[irs], bx, by, exclude=irs)


@dataclass
class DropRecord:
    initial_state: int
    final_state: int | None = None
    handover: bool | None = None
    discarded: bool = False


def run_drop(sc: Scenario, protocol: str, seed: object,
             irs_mode: str = "analysis_consistent",
             sim_radius: float | None = None,
             include_rlos_candidates: bool = False) -> DropRecord:
    """One independent experiment; `protocol` selects how far it runs."""
    if protocol not in ("association", "transition", "handover"):
        raise ValueError(f"unknown drop protocol {protocol!r}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    world = generate_world(sc, sim_radius, seed=seed, rng=rng)
    if len(world.bs_x) == 0:
        return DropRecord(initial_state=-1, discarded=True)

    user = (0.0, 0.0)
    dist = np.hypot(world.bs_x, world.bs_y)
    order = np.argsort(dist, kind="stable")
    c_l, c_n, c_r, al, an = _power_consts(sc)
    exact = irs_mode == "exact_geometry"
    segs = world.segs

    cand, cand_r, memo = _irs_candidates(world, 0.0, 0.0, sc.d_serve)
    bs_i, k, irs0, _ = segs.best_association(
        0.0, 0.0, world.bs_x, world.bs_y, dist, order,
        c_l, c_n, c_r, al, an, sc.d_serve, cand, cand_r, memo, exact,
    )
    rec = DropRecord(initial_state=k)
    if protocol == "association":
        return rec

    try:
        u2 = move_user(user, world, sc, rng)
    except StuckUser:
        rec.discarded = True
        return rec
    bx, by = world.bs_x[bs_i], world.bs_y[bs_i]

    cand2, _, memo2 = _irs_candidates(world, u2[0], u2[1], sc.d_serve)
    j, irs_new = segs.classify(u2[0], u2[1], bx, by, cand2, memo2)
    serving_irs = irs_new
    if j == RLOS and k == RLOS and irs0 >= 0 and irs0 != irs_new:
        # keep the original IRS whenever it still qualifies
        if _irs_still_serves(segs, irs0, u2[0], u2[1], bx, by, sc.d_serve):
            serving_irs = irs0
    rec.final_state = j
    if protocol == "transition":
        return rec

    x2 = max(math.hypot(bx - u2[0], by - u2[1]), 1e-9)
    if j == LOS:
        p_serve = c_l * x2**-al
    elif j == NLOS:
        p_serve = c_n * x2**-an
    else:
        r2 = max(math.hypot(segs.mid_x[serving_irs] - u2[0],
                            segs.mid_y[serving_irs] - u2[1]), 1e-9)
        d_prime = x2 if not exact else max(
            math.hypot(segs.mid_x[serving_irs] - bx,
                       segs.mid_y[serving_irs] - by), 1e-9)
        p_serve = c_r * (r2 * d_prime) ** -al

    if include_rlos_candidates:
        rec.handover = _beating_with_rlos(
            world, sc, u2, p_serve, bs_i, cand2, memo2, c_l, c_n, c_r,
            al, an, exact)
    else:
        rec.handover = segs.any_beating(
            u2[0], u2[1], world.bs_x, world.bs_y, dist, order, sc.v,
            c_l, c_n, al, an, p_serve, int(bs_i), cand2, memo2,
        )
    return rec


def _beating_with_rlos(world, sc, u2, p_serve, exclude, cand2, memo2,
                       c_l, c_n, c_r, al, an, exact) -> bool:
    # sensitivity-study variant: candidates may also be valued as
    # reflected links (off for all standard runs)
    segs = world.segs
    for i in range(len(world.bs_x)):
        if i == exclude:
            continue
        bx, by = world.bs_x[i], world.bs_y[i]
        d = max(math.hypot(bx - u2[0], by - u2[1]), 1e-9)
        state, irs = segs.classify(u2[0], u2[1], bx, by, cand2, memo2)
        if state == LOS:
            p = c_l * d**-al
        elif state == NLOS:
            p = c_n * d**-an
        else:
            r = max(math.hypot(segs.mid_x[irs] - u2[0],
                               segs.mid_y[irs] - u2[1]), 1e-9)
            dp = d if not exact else max(
                math.hypot(segs.mid_x[irs] - bx, segs.mid_y[irs] - by), 1e-9)
            p = c_r * (r * dp) ** -al
        if p > p_serve:
            return True
    return False


# --- aggregation ------------------------------------------------------------


@dataclass
class McAssociation:
    n_valid: int
    n_discarded: int
    seed: object
    counts: np.ndarray  # per initial state
    a_los: EstimateWithCI
    a_nlos: EstimateWithCI
    a_rlos: EstimateWithCI

    def estimates(self):
        return {"los": self.a_los, "nlos": self.a_nlos, "rlos": self.a_rlos}


@dataclass
class McTransition:
    n_valid: int
    n_discarded: int
    seed: object
    counts: np.ndarray  # (3, 3) initial x final

    def row(self, k: int) -> list[EstimateWithCI]:
        n_k = int(self.counts[k].sum())
        return [bernoulli(int(self.counts[k, j]), n_k, self.seed) for j in range(3)]

    def prob(self, k: int, j: int) -> EstimateWithCI:
        return self.row(k)[j]


@dataclass
class McHandover:
    n_valid: int
    n_discarded: int
    seed: object
    ho_count: int
    counts_by_initial: np.ndarray  # (3,) valid drops per initial state
    ho_by_initial: np.ndarray  # (3,)
    h: EstimateWithCI


def _drop_batch(args):
    (sc, protocol, seed, irs_mode, sim_radius, lo, hi) = args
    assoc = np.zeros(3, dtype=np.int64)
    trans = np.zeros((3, 3), dtype=np.int64)
    by_init = np.zeros(3, dtype=np.int64)
    ho_by_init = np.zeros(3, dtype=np.int64)
    discarded = 0
    for i in range(lo, hi):
        rec = run_drop(sc, protocol, (seed, i), irs_mode, sim_radius)
        if rec.discarded:
            discarded += 1
            continue
        assoc[rec.initial_state] += 1
        if protocol == "association":
            continue
        trans[rec.initial_state, rec.final_state] += 1
        if protocol == "handover":
            by_init[rec.initial_state] += 1
            ho_by_init[rec.initial_state] += int(rec.handover)
    return assoc, trans, by_init, ho_by_init, discarded


def estimate(sc: Scenario, protocol: str, n_drops: int, seed: int,
             irs_mode: str = "analysis_consistent",
             sim_radius: float | None = None,
             n_jobs: int | None = None):
    """Aggregate n_drops independent drops of the given protocol.

    Deterministic for fixed (sc, protocol, n_drops, seed) regardless of
    n_jobs: drop i always uses stream (seed, i) and aggregation is pure
    counting.
    """
    if n_drops < 100:
        raise ValueError("n_drops must be >= 100")
    if sim_radius is None:
        sim_radius = default_sim_radius(sc)
    if n_jobs is None:
        n_jobs = min(os.cpu_count() or 1, max(1, n_drops // 20_000))

    edges = np.linspace(0, n_drops, 4 * n_jobs + 1, dtype=int)
    tasks = [
        (sc, protocol, seed, irs_mode, sim_radius, int(lo), int(hi))
        for lo, hi in zip(edges[:-1], edges[1:])
        if hi > lo
    ]
    if n_jobs > 1:
        with get_context("fork").Pool(n_jobs) as pool:
            parts = pool.map(_drop_batch, tasks)
    else:
        parts = [_drop_batch(t) for t in tasks]

    assoc = sum(p[0] for p in parts)
    trans = sum(p[1] for p in parts)
    by_init = sum(p[2] for p in parts)
    ho_by_init = sum(p[3] for p in parts)
    discarded = sum(p[4] for p in parts)
    n_valid = n_drops - discarded
    if n_valid < n_drops / 2:
        raise TooFewValidDrops(f"{discarded} of {n_drops} drops discarded")

    if protocol == "association":
        ests = [bernoulli(int(assoc[s]), n_valid, seed) for s in range(3)]
        return McAssociation(n_valid, discarded, seed, assoc, *ests)
    if protocol == "transition":
        return McTransition(n_valid, discarded, seed, trans)
    if protocol == "handover":
        return McHandover(
            n_valid, discarded, seed, int(ho_by_init.sum()),
            by_init, ho_by_init,
            bernoulli(int(ho_by_init.sum()), n_valid, seed),
        )
    raise ValueError(f"unknown drop protocol {protocol!r}")


# --- density protocol (single-link classification trials) -------------------


@dataclass
class McDensity:
    n_trials: int
    seed: object
    counts: np.ndarray  # (3,)
    p_los: EstimateWithCI
    p_nlos: EstimateWithCI
    p_rlos: EstimateWithCI

    def state(self, name: str) -> EstimateWithCI:
        return {"los": self.p_los, "nlos": self.p_nlos, "rlos": self.p_rlos}[name]


def _density_chunk(sc: Scenario, d: float, n: int, seed_tuple) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed_tuple))
    r_mid = d / 2.0 + sc.d_serve + sc.length.hi / 2.0 + 1.0
    counts = rng.poisson(sc.lambda_o * math.pi * r_mid * r_mid, size=n)
    off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=off[1:])
    total = int(off[-1])
    rr = r_mid * np.sqrt(rng.random(total))
    phi = rng.uniform(0.0, 2.0 * math.pi, total)
    mx = d / 2.0 + rr * np.cos(phi)
    my = rr * np.sin(phi)
    lengths = sc.length.sample(rng, total)
    beta = rng.uniform(0.0, 2.0 * math.pi, total)
    irs = (rng.random(total) < sc.mu).astype(np.uint8)
    hx = 0.5 * lengths * np.cos(beta)
    hy = 0.5 * lengths * np.sin(beta)
    out = np.zeros(n, dtype=np.int8)
    geometry.density_trials(
        off,
        np.ascontiguousarray(mx - hx), np.ascontiguousarray(my - hy),
        np.ascontiguousarray(mx + hx), np.ascontiguousarray(my + hy),
        np.ascontiguousarray(mx), np.ascontiguousarray(my),
        irs, d, sc.d_serve, out,
    )
    return np.bincount(out, minlength=3)


def estimate_density(sc: Scenario, d: float, n_trials: int, seed: int,
                     chunk: int = 20_000) -> McDensity:
    """LoS-state frequencies of a link of length d over fresh blockage
    fields (one classification trial per field)."""
    if d <= 0:
        raise ValueError("d must be > 0")
    counts = np.zeros(3, dtype=np.int64)
    done = 0
    ci = 0
    while done < n_trials:
        m = min(chunk, n_trials - done)
        counts += _density_chunk(sc, d, m, (seed, ci))
        done += m
        ci += 1
    ests = [bernoulli(int(counts[s]), n_trials, seed) for s in range(3)]
    return McDensity(n_trials, seed, counts, *ests)


def irs_reconfig_oracle(sc: Scenario, r: float, theta: float, d: float,
                        n_trials: int, seed: int, chunk: int = 20_000):
    """Geometric frequency oracle for the conditional reconfiguration
    probability of an IRS pinned at (r, theta) given a blocked link at d.

    Returns (n_blocked, n_blocked_and_reconfigurable).
    """
    ix, iy = r * math.cos(theta), r * math.sin(theta)
    cx = d / 2.0
    r_rel = max(d / 2.0, math.hypot(ix - cx, iy))
    r_mid = r_rel + sc.length.hi / 2.0 + 1.0
    n_blocked = 0
    n_ok = 0
    done = 0
    ci = 0
    while done < n_trials:
        n = min(chunk, n_trials - done)
        rng = np.random.default_rng(np.random.SeedSequence((seed, ci)))
        counts = rng.poisson(sc.lambda_o * math.pi * r_mid * r_mid, size=n)
        off = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=off[1:])
        total = int(off[-1])
        rr = r_mid * np.sqrt(rng.random(total))
        phi = rng.uniform(0.0, 2.0 * math.pi, total)
        mx = cx + rr * np.cos(phi)
        my = rr * np.sin(phi)
        lengths = sc.length.sample(rng, total)
        beta = rng.uniform(0.0, 2.0 * math.pi, total)
        hx = 0.5 * lengths * np.cos(beta)
        hy = 0.5 * lengths * np.sin(beta)
        host_len = sc.length.sample(rng, n)
        host_beta = rng.uniform(0.0, math.pi, n)
        hhx = 0.5 * host_len * np.cos(host_beta)
        hhy = 0.5 * host_len * np.sin(host_beta)
        out_blocked = np.zeros(n, dtype=np.uint8)
        out_ok = np.zeros(n, dtype=np.uint8)
        geometry.irs_trials(
            off,
            np.ascontiguousarray(mx - hx), np.ascontiguousarray(my - hy),
            np.ascontiguousarray(mx + hx), np.ascontiguousarray(my + hy),
            np.ascontiguousarray(ix - hhx), np.ascontiguousarray(iy - hhy),
            np.ascontiguousarray(ix + hhx), np.ascontiguousarray(iy + hhy),
            ix, iy, d, out_blocked, out_ok,
        )
        n_blocked += int(out_blocked.sum())
        n_ok += int((out_blocked & out_ok).sum())
        done += n
        ci += 1
    return n_blocked, n_ok
