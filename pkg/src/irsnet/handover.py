"""Handover probability of the typical user over one unit of time.

After the move, a handover triggers iff some BS in LoS or NLoS state beats
the post-move serving-link power. Working per candidate state w, the
serving link before/after the move maps to equivalent w-state distances
x1_eq / x2_eq (equal-power projections), so the no-handover event is "no
w-state BS inside the disk of radius x2_eq around the moved user, outside
the disk of radius x1_eq around the start position". The mean BS count of
that lune is -Omega below; candidates in reconfigured-LoS state are not
handover targets (no IRS is scheduled before access).

Expectations over (x1, phi1, r1, phi1') use one seeded low-discrepancy
point set, doubled until the handover probability is stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from . import association, spatial, transition
from .channel import beamforming_gain
from .quadrature import gl_nodes
from .scenario import Scenario

__all__ = [
    "HoResult",
    "MissingIrsDistance",
    "equivalent_distance",
    "omega",
    "no_ho_prob",
    "ho_probability",
]

QMC_SEED = 0x0DD5
TARGET_STATES = ("los", "nlos")  # handover targets exclude reconfigured LoS


class MissingIrsDistance(ValueError):
    pass


def equivalent_distance(serving_state: str, target_state: str, x, r=None,
                        sc: Scenario | None = None):
    """Distance at which a target-state BS matches the serving power.

    x is the serving-BS distance; r (user-IRS distance) is required iff the
    serving state is reconfigured LoS.
    """
    if sc is None:
        raise TypeError("sc is required")
    x = np.asarray(x, dtype=float)
    if serving_state == "rlos":
        if r is None:
            raise MissingIrsDistance("serving rlos needs the user-IRS distance")
        r = np.asarray(r, dtype=float)
    g = beamforming_gain(sc.n_elements, sc.m_los)
    al, an = sc.alpha_los, sc.alpha_nlos
    kl, kn = sc.k_los, sc.k_nlos

    if serving_state == "los":
        if target_state == "los":
            out = x
        else:
            out = (kn / kl) ** (1.0 / an) * np.power(x, al / an)
    elif serving_state == "nlos":
        if target_state == "los":
            out = (kl / kn) ** (1.0 / al) * np.power(x, an / al)
        else:
            out = x
    elif serving_state == "rlos":
        if target_state == "los":
            out = (1.0 / (kl * g)) ** (1.0 / al) * r * x
        else:
            out = (kn / (kl**2 * g)) ** (1.0 / an) * np.power(r * x, al / an)
    else:
        raise ValueError(f"unknown serving state {serving_state!r}")
    return out if np.ndim(out) else float(out)


def _radial_mass_w(w: str, sc: Scenario, tables) -> object:
    return tables.mass["los" if w == "los" else "nlos"]


def omega(w: str, x1_eq, x2_eq, sc: Scenario, n_gl: int = 48) -> np.ndarray:
    """Negative mean number of w-state BSs in the handover-triggering lune.

    Vectorized over pairs (x1_eq, x2_eq). The angular extent theta_max(x)
    is nontrivial only on [ |v - x1_eq|, v + x1_eq ] (a band of width at
    most 2v); beyond it the whole circle lies outside the exclusion disk,
    where the radial mass of the w-density integrates the rest in closed
    (or tabulated) form.
    """
    if w not in TARGET_STATES:
        raise ValueError("omega is defined for candidate states 'los'/'nlos'")
    x1_eq = np.atleast_1d(np.asarray(x1_eq, dtype=float))
    x2_eq = np.atleast_1d(np.asarray(x2_eq, dtype=float))
    v = sc.v
    tables = association._tables(sc)
    mass = _radial_mass_w(w, sc, tables)

    lo = np.maximum(0.0, x1_eq - v)
    hi = x2_eq
    out = np.zeros_like(lo)
    live = hi > lo
    if not np.any(live):
        return -out

    # part A: the partial-angle band
    a_lo = np.maximum(lo, np.abs(v - x1_eq))
    a_hi = np.minimum(hi, v + x1_eq)
    band = live & (a_hi > a_lo)
    if np.any(band) and v > 0.0:
        x, wts = gl_nodes(n_gl)
        lo_b, hi_b = a_lo[band], a_hi[band]
        nodes = lo_b[:, None] + (hi_b - lo_b)[:, None] * x
        arg = (x1_eq[band][:, None] ** 2 - v * v - nodes**2) / (2.0 * v * nodes)
        theta = np.arccos(np.clip(arg, -1.0, 1.0))
        lam = spatial.bs_density(w, nodes, sc)
        vals = 2.0 * theta * lam * nodes
        out[band] += (hi_b - lo_b) * (vals @ wts)

    # full-circle pieces: [lo, |v - x1_eq|] when the exclusion disk is
    # swallowed (x1_eq < v), and [v + x1_eq, hi] beyond the band; the
    # radial mass already integrates the whole circle
    inner_hi = np.minimum(hi, np.abs(v - x1_eq))
    inner = live & (x1_eq < v) & (inner_hi > lo)
    if np.any(inner):
        out[inner] += mass(inner_hi[inner]) - mass(lo[inner])
    outer_lo = np.maximum(lo, v + x1_eq)
    outer = live & (hi > outer_lo)
    if np.any(outer):
        out[outer] += mass(hi[outer]) - mass(outer_lo[outer])
    return -out


# --- movement-aware candidate field ------------------------------------------
#
# The lune count above freezes every candidate's LoS state across the move.
# The simulator (and the handover rule) re-evaluates candidate states after
# the move, and blocked BSs near the user routinely clear and instantly
# beat the serving link, so the frozen count underestimates handovers by
# several percentage points. candidate_count() keeps the same exclusion /
# trigger radii but propagates each candidate through the single-link
# transition law: a candidate at pre-move polar (x', psi) ends at
# x2c = sqrt(x'^2 + v^2 - 2 x' v cos psi) and triggers per its post-move
# state. "frozen" mode reproduces the plain lune for comparison.

N_PSI = 64  # midpoint nodes over (0, pi) for the candidate-angle integral


@dataclass
class _ChurnTables:
    x_grid: np.ndarray
    psi: np.ndarray
    # cumulative integrals over x' of kernel * x', per psi row:
    # from_l[w][m, i] = int_0^{x_i} lam_b p_L(x) P_{L,w}(x, psi_m) x dx etc.
    from_l: dict
    from_n: dict
    tail_rate: dict  # d(cum)/d(x^2/2) beyond the grid, per (part, w)


@lru_cache(maxsize=16)
def _churn_tables(sc: Scenario) -> _ChurnTables:
    c = sc.los_rate
    x_cap = 30.0 / c if c > 0 else 6.0 / math.sqrt(math.pi * sc.lambda_b)
    x_cap = max(x_cap, 10.0 * max(sc.v, 1.0))
    dense_hi = min(10.0 * max(sc.v, 1.0), x_cap / 2.0)
    x_grid = np.unique(
        np.concatenate(
            [
                np.linspace(1e-6, dense_hi, 257),
                np.geomspace(dense_hi, x_cap, 513),
            ]
        )
    )
    psi = (np.arange(N_PSI) + 0.5) * math.pi / N_PSI
    xm, pm = np.meshgrid(x_grid, psi)  # (N_PSI, NX)
    link = transition.link_transition_batch(xm.ravel(), pm.ravel(), sc)
    link = {key: val.reshape(xm.shape) for key, val in link.items()}
    p_l = np.exp(-c * xm)
    x2c = transition._x2_of(xm, pm, sc.v)
    no_irs = 1.0 - spatial.irs_availability(x2c, 0.0, sc)

    kernels = {
        ("from_l", "los"): sc.lambda_b * p_l * link["p_ll"],
        ("from_n", "los"): sc.lambda_b * (1.0 - p_l) * link["p_nl"],
        ("from_l", "nlos"): sc.lambda_b * p_l * link["p_ln"] * no_irs,
        ("from_n", "nlos"): sc.lambda_b * (1.0 - p_l) * link["p_nn"] * no_irs,
    }
    from_l, from_n, tail = {}, {}, {}
    mid_x = 0.5 * (x_grid[1:] + x_grid[:-1])
    dx = np.diff(x_grid)
    for (part, w), kern in kernels.items():
        kern_mid = 0.5 * (kern[:, 1:] + kern[:, :-1])
        cells = kern_mid * mid_x * dx
        cum = np.zeros((N_PSI, len(x_grid)))
        np.cumsum(cells, axis=1, out=cum[:, 1:])
        (from_l if part == "from_l" else from_n)[w] = cum
        # beyond the grid, the LoS-capable kernels have died; the
        # blocked-and-stays-blocked kernel tends to lam_b * (1 - P_i -> 1)
        tail[(part, w)] = float(np.mean(kern[:, -1]))
    return _ChurnTables(x_grid, psi, from_l, from_n, tail)


def _cum_read(tables: _ChurnTables, cum: np.ndarray, tail_rate: float,
              m: int, x):
    x_grid = tables.x_grid
    val = np.interp(x, x_grid, cum[m])
    over = x > x_grid[-1]
    if np.any(over):
        val = np.where(
            over,
            cum[m, -1] + 0.5 * tail_rate * (np.square(x) - x_grid[-1] ** 2),
            val,
        )
    return val


def candidate_count(w: str, b1_los, b1_nlos, b2, sc: Scenario) -> np.ndarray:
    """Mean number of movement-aware w-state trigger BSs, vectorized over
    node vectors of exclusion radii (b1_los for candidates LoS before the
    move, b1_nlos for blocked ones) and the trigger radius b2."""
    t = _churn_tables(sc)
    b1_los = np.atleast_1d(np.asarray(b1_los, dtype=float))
    b1_nlos = np.atleast_1d(np.asarray(b1_nlos, dtype=float))
    b2 = np.atleast_1d(np.asarray(b2, dtype=float))
    v = sc.v
    total = np.zeros_like(b2)
    d_psi = math.pi / N_PSI
    cum_l, cum_n = t.from_l[w], t.from_n[w]
    tl = t.tail_rate[("from_l", w)]
    tn = t.tail_rate[("from_n", w)]
    for m, psi in enumerate(t.psi):
        s2 = b2**2 - (v * math.sin(psi)) ** 2
        live = s2 > 0.0
        if not np.any(live):
            continue
        s = np.sqrt(np.maximum(s2, 0.0))
        x_hi = v * math.cos(psi) + s
        x_lo = np.maximum(v * math.cos(psi) - s, 0.0)
        hi_l = np.maximum(x_hi, 0.0)
        seg_l = _cum_read(t, cum_l, tl, m, hi_l) - _cum_read(
            t, cum_l, tl, m, np.minimum(np.maximum(x_lo, b1_los), hi_l)
        )
        seg_n = _cum_read(t, cum_n, tn, m, hi_l) - _cum_read(
            t, cum_n, tn, m, np.minimum(np.maximum(x_lo, b1_nlos), hi_l)
        )
        total += np.where(live, np.maximum(seg_l, 0.0) + np.maximum(seg_n, 0.0), 0.0)
    return 2.0 * d_psi * total


def no_ho_prob(k: str, j: str, w: str, x1: float, phi1: float, sc: Scenario,
               n_r: int = 512, qmc_seed: int = QMC_SEED,
               candidate_states: str = "post_move") -> float:
    """E over the serving-IRS radii (as the (k, j) case requires) of the
    no-handover factor for one fixed serving geometry (x1, phi1)."""
    mv = transition.LinkMove(x1, phi1, sc.v)
    x2 = mv.x2
    needs_r = k == "rlos" or j == "rlos"
    n = n_r if needs_r else 1
    if needs_r:
        sob = qmc.Sobol(d=2, scramble=True, seed=qmc_seed)
        u = sob.random(n)
    if k == "rlos":
        r1 = spatial.inverse_irs_cdf(u[:, 0], np.full(n, x1), sc)
        x1_eq = equivalent_distance("rlos", w, np.full(n, x1), r1, sc=sc)
        x1_eq_n = equivalent_distance("rlos", "nlos", np.full(n, x1), r1, sc=sc)
        x1_eq_l = equivalent_distance("rlos", "los", np.full(n, x1), r1, sc=sc)
    else:
        x1_eq = np.full(n, equivalent_distance(k, w, x1, sc=sc))
        x1_eq_n = np.full(n, equivalent_distance(k, "nlos", x1, sc=sc))
        x1_eq_l = np.full(n, equivalent_distance(k, "los", x1, sc=sc))
    if j == "rlos":
        if k == "rlos":
            phi1p = u[:, 1] * math.pi
            r2 = transition._x2_of(r1, phi1p, sc.v)
        else:
            r2 = spatial.inverse_irs_cdf(u[:, 0], np.full(n, x2), sc)
        x2_eq = equivalent_distance("rlos", w, np.full(n, x2), r2, sc=sc)
    else:
        x2_eq = np.full(n, equivalent_distance(j, w, x2, sc=sc))
    if candidate_states == "frozen":
        return float(np.mean(np.exp(omega(w, x1_eq, x2_eq, sc))))
    count = candidate_count(w, x1_eq_l, x1_eq_n, x2_eq, sc)
    return float(np.mean(np.exp(-count)))


@dataclass
class HoResult:
    h: float
    assoc: association.AssociationProbs
    trans: transition.TransitionMatrix
    terms: dict = field(default_factory=dict)  # (k, j, w) -> E[no-HO factor]
    n_nodes: int = 0
    refinements: int = 0


def _no_ho_factor(k: str, j: str, w: str, sc: Scenario, x1, x2, r1, r2p,
                  candidate_states: str) -> np.ndarray:
    """Node-wise no-handover factor for serving case (k -> j), target w."""
    if k == "rlos":
        x1_eq = equivalent_distance("rlos", w, x1, r1, sc=sc)
        x1_eq_l = equivalent_distance("rlos", "los", x1, r1, sc=sc)
        x1_eq_n = equivalent_distance("rlos", "nlos", x1, r1, sc=sc)
    else:
        x1_eq = equivalent_distance(k, w, x1, sc=sc)
        x1_eq_l = equivalent_distance(k, "los", x1, sc=sc)
        x1_eq_n = equivalent_distance(k, "nlos", x1, sc=sc)
    if j == "rlos":
        x2_eq = equivalent_distance("rlos", w, x2, r2p, sc=sc)
    else:
        x2_eq = equivalent_distance(j, w, x2, sc=sc)
    if candidate_states == "frozen":
        return np.exp(omega(w, x1_eq, x2_eq, sc))
    return np.exp(-candidate_count(w, x1_eq_l, x1_eq_n, x2_eq, sc))


def _assemble(sc: Scenario, n_pow: int, qmc_seed: int, candidate_states: str):
    """H as the node-coupled average: the post-move state weights and the
    no-handover factors share each (x1, phi1, r1, phi1') node, so their
    correlation (long links both break and trigger more) is kept."""
    a = association.association_probs(sc)
    tm = transition.transition_matrix(sc)
    sob = qmc.Sobol(d=4, scramble=True, seed=qmc_seed)
    u = sob.random_base2(n_pow)
    n = len(u)
    phi1 = u[:, 1] * math.pi
    terms: dict = {}
    h = 0.0
    for k in association.STATES:
        a_k = a[k]
        if a_k < 1e-12:
            continue
        dist = association.serving_distance_dist(k, sc)
        x1 = dist.inverse(u[:, 0])
        x2 = transition._x2_of(x1, phi1, sc.v)
        link = transition.link_transition_batch(x1, phi1, sc)
        has_irs = sc.lambda_i > 0.0 and sc.los_rate > 0.0

        r1 = r2 = None
        if k == "rlos":
            r1 = spatial.inverse_irs_cdf(u[:, 2], x1, sc)
            phi1p = u[:, 3] * math.pi
            r2 = transition._x2_of(r1, phi1p, sc.v)
            leg = transition.link_transition_batch(r1, phi1p, sc)
            p_i2 = spatial.irs_availability(x2, r2, sc) if has_irs else 0.0
            w_l = link["p_nl"]
            keep_or_new = leg["p_ll"] + leg["p_ln"] * p_i2
            w_r = link["p_nn"] * keep_or_new
            w_n = link["p_nn"] * (1.0 - keep_or_new)
        elif k == "los":
            p_i = spatial.irs_availability(x2, 0.0, sc) if has_irs else 0.0
            w_l = link["p_ll"]
            w_n = link["p_ln"] * (1.0 - p_i)
            w_r = link["p_ln"] * p_i
        else:
            # NLoS start: only newly in-range hosts can rescue the link
            p_i = (
                spatial.irs_availability(x2, max(sc.d_serve - sc.v, 0.0), sc)
                if has_irs else 0.0
            )
            w_l = link["p_nl"]
            w_n = link["p_nn"] * (1.0 - p_i)
            w_r = link["p_nn"] * p_i
        weights = {"los": w_l, "nlos": w_n, "rlos": w_r}

        # new serving-IRS distance when the link lands in rlos from l/n
        r2p = r2
        if k != "rlos" and has_irs and float(np.max(w_r)) > 1e-12:
            r2p = spatial.inverse_irs_cdf(u[:, 2], x2, sc)

        inner = np.zeros(n)
        for j in association.STATES:
            w_j = weights[j]
            if float(np.max(w_j)) < 1e-12:
                continue
            prod = np.ones(n)
            for w in TARGET_STATES:
                factor = _no_ho_factor(k, j, w, sc, x1, x2, r1, r2p,
                                       candidate_states)
                terms[(k, j, w)] = float(np.mean(factor))
                prod = prod * factor
            inner += w_j * (1.0 - prod)
        h += a_k * float(np.mean(inner))
    return h, a, tm, terms


def ho_probability(sc: Scenario, qmc_seed: int = QMC_SEED,
                   start_pow: int = 12, tol: float = 5e-4,
                   max_pow: int = 14,
                   candidate_states: str = "post_move") -> HoResult:
    """Handover probability with node-doubling refinement of the
    low-discrepancy expectations (start 2^start_pow, stop when the change
    drops below tol).

    candidate_states: "post_move" (default) re-evaluates candidate LoS
    states after the move, matching the handover rule; "frozen" keeps the
    plain lune count of state-static candidates.
    """
    if candidate_states not in ("post_move", "frozen"):
        raise ValueError(f"unknown candidate_states {candidate_states!r}")
    h_prev, a, tm, terms = _assemble(sc, start_pow, qmc_seed, candidate_states)
    refinements = 0
    n_pow = start_pow
    while n_pow < max_pow:
        n_pow += 1
        refinements += 1
        h_next, a, tm, terms = _assemble(sc, n_pow, qmc_seed, candidate_states)
        if abs(h_next - h_prev) < tol:
            h_prev = h_next
            break
        h_prev = h_next
    return HoResult(float(np.clip(h_prev, 0.0, 1.0)), a, tm, terms,
                    2**n_pow, refinements)
