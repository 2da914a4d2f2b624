"""Single-link LoS transition probabilities under one movement step, and
the serving-link (cascaded) transition matrix.

Geometry convention: the user starts at the origin and moves v along the
+x axis; the far node (BS or IRS) sits at distance x1, angle phi1 from the
movement direction, so the post-move distance/angle are

    x2 = sqrt(x1^2 + v^2 - 2 x1 v cos(phi1)),
    phi2 = arccos((x1 cos(phi1) - v) / x2).

A blockage of length l and orientation beta blocks a path iff its midpoint
falls in the parallelogram spanned by the path and the blockage direction.
The pre/post blocking regions share the edge through the far node, and the
movement-exclusion region (blockage fields that would have vetoed the
chosen direction) shares an edge with the post region through the moved
user, so both overlap areas reduce to the same shared-base form evaluated
exactly in local coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import association, spatial
from .quadrature import gl_nodes
from .scenario import Scenario

__all__ = [
    "LinkMove",
    "TransitionMatrix",
    "overlap_area_integrand",
    "escape_area",
    "link_transition",
    "link_transition_batch",
    "bs_transition",
    "transition_matrix",
]

QMC_SEED = 0x1A5  # fixed default for the low-discrepancy expectations
N_PHI = 64  # periodic-rule nodes for the movement-angle expectation
N_X = 64  # inverse-cdf nodes for the serving-distance expectation


@dataclass(frozen=True)
class LinkMove:
    """Initial link geometry (x1, phi1) plus the derived post-move pair."""

    x1: float
    phi1: float
    v: float
    x2: float = field(init=False)
    phi2: float = field(init=False)

    def __post_init__(self):
        if self.x1 <= 0:
            raise ValueError("x1 must be > 0")
        phi1 = abs(self.phi1) % (2.0 * math.pi)
        if phi1 > math.pi:
            phi1 = 2.0 * math.pi - phi1
        object.__setattr__(self, "phi1", phi1)
        x2 = math.sqrt(
            max(self.x1**2 + self.v**2 - 2.0 * self.x1 * self.v * math.cos(phi1),
                1e-24)
        )
        object.__setattr__(self, "x2", x2)
        arg = (self.x1 * math.cos(phi1) - self.v) / x2
        object.__setattr__(self, "phi2", math.acos(min(1.0, max(-1.0, arg))))


def _shared_base_overlap(l, q, h1, h2):
    """Area of two parallelograms of width l sharing a base edge, whose
    off-base corners sit at heights h1, h2 with horizontal slip rate q.

    The cross-sections at height y are length-l intervals sliding apart at
    rate q, so the overlap is int_0^a (l - q y) dy with
    a = min(h1, h2, l/q)."""
    with np.errstate(divide="ignore", over="ignore"):
        a_max = np.where(q > 0.0, l / np.where(q > 0.0, q, 1.0), np.inf)
    a = np.minimum(np.minimum(h1, h2), a_max)
    return l * a - 0.5 * q * a * a


def _overlap_geometry(beta, move: LinkMove):
    """(same_side, q, h1, h2) for the pre/post blocking-region overlap."""
    beta = np.asarray(beta, dtype=float)
    ux, uy = np.cos(beta), np.sin(beta)
    bx = move.x1 * math.cos(move.phi1)
    by = move.x1 * math.sin(move.phi1)
    # local y = cross(u, P - B), local x = dot(u, P - B), P in {O, O'}
    y_o = uy * bx - ux * by
    x_o = -(ux * bx + uy * by)
    y_m = uy * (bx - move.v) - ux * by
    x_m = ux * (move.v - bx) - uy * by
    same = y_o * y_m > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.abs(
            np.where(y_o != 0.0, x_o / np.where(y_o != 0.0, y_o, 1.0), np.inf)
            - np.where(y_m != 0.0, x_m / np.where(y_m != 0.0, y_m, 1.0), np.inf)
        )
    q = np.where(np.isfinite(q), q, np.inf)
    return same, q, np.abs(y_o), np.abs(y_m)


def overlap_area_integrand(beta, move: LinkMove, l: float):
    """|overlap| of the pre- and post-move blocking regions for one
    blockage orientation; zero when the base line separates the user's
    pre/post positions (phi1 <= beta <= phi2)."""
    same, q, h1, h2 = _overlap_geometry(beta, move)
    out = np.where(same, _shared_base_overlap(l, q, h1, h2), 0.0)
    return out if out.ndim else float(out)


def _escape_geometry(beta, move: LinkMove):
    """(same_side, q, h_traj, h_bs) for the trajectory/post-region overlap."""
    beta = np.asarray(beta, dtype=float)
    ux, uy = np.cos(beta), np.sin(beta)
    # base point O' = (v, 0); legs to O = (-v, 0) and to B - O'
    wx = move.x1 * math.cos(move.phi1) - move.v
    wy = move.x1 * math.sin(move.phi1)
    y_o = uy * move.v  # cross(u, O - O') = cross(u, (-v, 0))
    x_o = -move.v * ux
    y_b = ux * wy - uy * wx
    x_b = ux * wx + uy * wy
    same = y_o * y_b > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.abs(
            np.where(y_o != 0.0, x_o / np.where(y_o != 0.0, y_o, 1.0), np.inf)
            - np.where(y_b != 0.0, x_b / np.where(y_b != 0.0, y_b, 1.0), np.inf)
        )
    q = np.where(np.isfinite(q), q, np.inf)
    return same, q, np.abs(y_o), np.abs(y_b)


def escape_area(beta, move: LinkMove, l: float):
    """|overlap| of the post-move blocking region with the set of blockage
    midpoints that would have vetoed the movement direction."""
    same, q, h1, h2 = _escape_geometry(beta, move)
    out = np.where(same, _shared_base_overlap(l, q, h1, h2), 0.0)
    return out if out.ndim else float(out)


def _beta_mean_overlap(sc: Scenario, moves, n_gl: int = 32):
    """(1/pi) int_0^pi E_l[overlap area] dbeta, vectorized over moves.

    The integrand vanishes on (phi1, phi2); the two live pieces are mapped
    to fixed Gauss nodes per move.
    """
    x, w = gl_nodes(n_gl)
    x1 = np.array([m.x1 for m in moves])
    phi1 = np.array([m.phi1 for m in moves])
    phi2 = np.array([m.phi2 for m in moves])
    v = moves[0].v
    out = np.zeros(len(moves))
    for lo, hi in ((np.zeros_like(phi1), phi1), (phi2, np.full_like(phi2, math.pi))):
        width = hi - lo
        beta = lo[:, None] + width[:, None] * x
        same, q, h1, h2 = _overlap_geometry_batch(beta, x1, phi1, phi2, v)
        area = np.where(same, _expected_area_batch(sc, q, np.minimum(h1, h2)), 0.0)
        out += width * (area @ w)
    return out / math.pi


def _beta_mean_escape(sc: Scenario, moves, n_gl: int = 32):
    x, w = gl_nodes(n_gl)
    x1 = np.array([m.x1 for m in moves])
    phi1 = np.array([m.phi1 for m in moves])
    phi2 = np.array([m.phi2 for m in moves])
    v = moves[0].v
    width = phi2
    beta = width[:, None] * x
    same, q, h1, h2 = _escape_geometry_batch(beta, x1, phi1, v)
    area = np.where(same, _expected_area_batch(sc, q, np.minimum(h1, h2)), 0.0)
    return width * (area @ w) / math.pi


def link_transition(move: LinkMove, sc: Scenario) -> dict:
    """Single-link transition probabilities {p_ll, p_ln, p_nl, p_nn}."""
    res = link_transition_batch(np.array([move.x1]), np.array([move.phi1]), sc)
    return {k: float(v[0]) for k, v in res.items()}


def link_transition_batch(x1, phi1, sc: Scenario) -> dict:
    """Vectorized single-link transitions for arrays of (x1, phi1)."""
    x1 = np.asarray(x1, dtype=float)
    phi1 = np.asarray(phi1, dtype=float)
    moves = [LinkMove(float(a), float(b), sc.v) for a, b in zip(x1, phi1)]
    x2 = np.array([m.x2 for m in moves])

    coef = 2.0 / math.pi * sc.e_l
    t1 = coef * x1
    t2 = coef * x2
    t_cap = _beta_mean_overlap(sc, moves)
    t_esc = _beta_mean_escape(sc, moves)

    lam = sc.lambda_o
    p_ll = np.exp(np.minimum(-lam * (t2 - t_cap - t_esc), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        num = -np.expm1(-lam * np.maximum(t1 - t_cap, 0.0))
        den = -np.expm1(-lam * t1)
        p_nl = num * np.exp(-lam * np.maximum(t2 - t_esc, 0.0)) / np.where(
            den > 0.0, den, 1.0
        )
    p_nl = np.where(den > 0.0, p_nl, 1.0)  # lambda_o -> 0: never blocked
    p_nl = np.clip(p_nl, 0.0, 1.0)
    return {"p_ll": p_ll, "p_ln": 1.0 - p_ll, "p_nl": p_nl, "p_nn": 1.0 - p_nl}


# --- batched geometry (no per-move python objects in the hot path) ----------


def _overlap_geometry_batch(beta, x1, phi1, phi2, v):
    ux, uy = np.cos(beta), np.sin(beta)
    bx = (x1 * np.cos(phi1))[:, None]
    by = (x1 * np.sin(phi1))[:, None]
    y_o = uy * bx - ux * by
    x_o = -(ux * bx + uy * by)
    y_m = uy * (bx - v) - ux * by
    x_m = ux * (v - bx) - uy * by
    same = y_o * y_m > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = np.where(y_o != 0.0, x_o / np.where(y_o != 0.0, y_o, 1.0), np.inf)
        s2 = np.where(y_m != 0.0, x_m / np.where(y_m != 0.0, y_m, 1.0), np.inf)
        q = np.abs(s1 - s2)
    q = np.where(np.isnan(q), np.inf, q)
    return same, q, np.abs(y_o), np.abs(y_m)


def _escape_geometry_batch(beta, x1, phi1, v):
    ux, uy = np.cos(beta), np.sin(beta)
    wx = (x1 * np.cos(phi1) - v)[:, None]
    wy = (x1 * np.sin(phi1))[:, None]
    y_o = uy * v
    x_o = -v * ux
    y_b = ux * wy - uy * wx
    x_b = ux * wx + uy * wy
    same = y_o * y_b > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = np.where(y_o != 0.0, x_o / np.where(y_o != 0.0, y_o, 1.0), np.inf)
        s2 = np.where(y_b != 0.0, x_b / np.where(y_b != 0.0, y_b, 1.0), np.inf)
        q = np.abs(s1 - s2)
    q = np.where(np.isnan(q), np.inf, q)
    return same, q, np.abs(y_o), np.abs(y_b)


def _expected_area_batch(sc: Scenario, q, m):
    """Vectorized E_l[area]; same piecewise closed form as _expected_area."""
    dist = sc.length
    finite = np.isfinite(q)
    qs = np.where(finite, q, 1.0)
    l_star = qs * m
    # closed partial moments of the length distribution, vectorized
    lo, hi = dist.lo, dist.hi
    if lo == hi:  # constant length
        below = l_star >= lo
        e_l2_below = np.where(below, lo * lo, 0.0)
        e_l_above = np.where(below, 0.0, lo)
        p_above = np.where(below, 0.0, 1.0)
    else:
        t = np.clip(l_star, lo, hi)
        span = hi - lo
        p_above = (hi - t) / span
        e_l_above = 0.5 * (hi**2 - t**2) / span
        e_l2_below = (t**3 - lo**3) / (3.0 * span)
    qs_safe = np.where(qs > 0.0, qs, 1.0)
    area = np.where(
        qs > 0.0,
        e_l2_below / (2.0 * qs_safe) + m * e_l_above - 0.5 * qs * m * m * p_above,
        sc.e_l * m,
    )
    return np.where(finite, area, 0.0)


# --- serving-link transition matrix (cascaded link) -------------------------


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic 3x3 matrix over (los, nlos, rlos)."""

    p: np.ndarray

    def row(self, state: str) -> np.ndarray:
        return self.p[association.STATES.index(state)]

    def __getitem__(self, kj: tuple[str, str]) -> float:
        k, j = kj
        return float(
            self.p[association.STATES.index(k), association.STATES.index(j)]
        )


def _xphi_nodes(state: str, sc: Scenario, n_x: int = N_X, n_phi: int = N_PHI):
    """Tensor nodes for E_{x1, phi1}: inverse-cdf Gauss nodes in the
    distance and a periodic midpoint rule over (0, pi) in the angle."""
    dist = association.serving_distance_dist(state, sc)
    u, wu = gl_nodes(n_x)
    x_nodes = dist.inverse(u)
    phi = (np.arange(n_phi) + 0.5) * math.pi / n_phi
    x_grid = np.repeat(x_nodes, n_phi)
    phi_grid = np.tile(phi, n_x)
    w = np.repeat(wu, n_phi) / n_phi
    return x_grid, phi_grid, w


def _x2_of(x1, phi1, v):
    return np.sqrt(np.maximum(x1**2 + v**2 - 2.0 * x1 * v * np.cos(phi1), 1e-24))


def bs_transition(initial: str, sc: Scenario, qmc_seed: int = QMC_SEED) -> np.ndarray:
    """One row of the serving-link transition matrix."""
    if initial not in association.STATES:
        raise ValueError(f"unknown state {initial!r}")
    a_k = association.association_probs(sc)[initial]
    if a_k < 1e-12:
        raise association.DegenerateState(
            f"initial state {initial!r} has probability {a_k:.3g}"
        )
    x1, phi1, w = _xphi_nodes(initial, sc)
    x2 = _x2_of(x1, phi1, sc.v)
    link = link_transition_batch(x1, phi1, sc)

    if initial == "los":
        p_i = spatial.irs_availability(x2, 0.0, sc)
        p_ll = float(w @ link["p_ll"])
        p_ln = float(w @ (link["p_ln"] * (1.0 - p_i)))
        p_lr = float(w @ (link["p_ln"] * p_i))
        return np.array([p_ll, p_ln, p_lr])

    if initial == "nlos":
        # an NLoS start means no IRS was available before the move; only
        # hosts newly brought into serving range (the displacement ring
        # [d_serve - v, d_serve]) can rescue the link afterwards
        p_i = spatial.irs_availability(x2, max(sc.d_serve - sc.v, 0.0), sc)
        p_nl = float(w @ link["p_nl"])
        p_nn = float(w @ (link["p_nn"] * (1.0 - p_i)))
        p_nr = float(w @ (link["p_nn"] * p_i))
        return np.array([p_nl, p_nn, p_nr])

    # initial rlos: direct user-BS link behaves as an NLoS single link;
    # the user-IRS leg behaves as a LoS single link with its own geometry
    p_rl = float(w @ link["p_nl"])
    stay_blocked = float(w @ link["p_nn"])

    sob = qmc.Sobol(d=4, scramble=True, seed=qmc_seed)
    u = sob.random_base2(12)  # 4096 nodes
    dist = association.serving_distance_dist("rlos", sc)
    x1q = dist.inverse(u[:, 0])
    phi1q = u[:, 1] * math.pi
    x2q = _x2_of(x1q, phi1q, sc.v)
    r1 = spatial.inverse_irs_cdf(u[:, 2], x1q, sc)
    phi1p = u[:, 3] * math.pi
    r2 = _x2_of(r1, phi1p, sc.v)
    irs_link = link_transition_batch(r1, phi1p, sc)
    p_i2 = spatial.irs_availability(x2q, r2, sc)
    lost_irs_no_new = float(np.mean(irs_link["p_ln"] * (1.0 - p_i2)))
    p_rn = stay_blocked * lost_irs_no_new
    p_rr = stay_blocked * (1.0 - lost_irs_no_new)
    return np.array([p_rl, p_rn, p_rr])


def transition_matrix(sc: Scenario, qmc_seed: int = QMC_SEED) -> TransitionMatrix:
    """Full serving-link transition matrix; rows for states of zero
    probability are filled with the identity row (they carry no weight)."""
    rows = []
    for state in association.STATES:
        try:
            rows.append(bs_transition(state, sc, qmc_seed))
        except association.DegenerateState:
            one_hot = np.zeros(3)
            one_hot[association.STATES.index(state)] = 1.0
            rows.append(one_hot)
    return TransitionMatrix(np.vstack(rows))
