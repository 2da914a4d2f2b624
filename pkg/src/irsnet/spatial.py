"""Blockage-thinned BS densities, IRS reconfiguration probabilities, and
the serving-IRS distance distribution.

Notation used throughout: the typical user sits at the origin; d is the
user-BS distance; an IRS host is located at polar (r, theta) relative to
the user with theta measured from the user-BS ray. The LoS probability of
a length-d path is exp(-c*d) with c = los_rate = 2*lambda_o*E[l]/pi.

Every operation takes a `mode` flag: "approx" evaluates the closed forms
(the default; the association/transition/handover chain is built on them),
"exact" evaluates the underlying conditional-probability integrals by
nested quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quadrature import DEFAULT_SPEC, QuadSpec, integrate_1d
from .scenario import Scenario

__all__ = [
    "DegenerateCondition",
    "p_los",
    "p_irs_exact",
    "p_irs_hat",
    "p_irs_hat_prime",
    "irs_weighted_integral",
    "bs_density",
    "irs_availability",
    "serving_irs_distance",
    "ServingIrsDistance",
]

THETA_CLAMP = 1e-9  # collinear-geometry guard for the cot terms
THETA_EDGE = 1e-6  # integration margin around the theta singularities


class DegenerateCondition(ValueError):
    """Conditioning event has (numerically) zero probability."""


def p_los(d, sc: Scenario):
    """Probability that a direct path of length d is unobstructed."""
    return np.exp(-sc.los_rate * np.asarray(d, dtype=float))


def _g_overlap(theta):
    """Mean-overlap angular factor 1/2 + (pi-theta)/2 * cot(theta).

    Diverges as theta -> 0 (near-parallel crossing regions); callers clamp
    theta and cap the resulting probability, the clamped set has negligible
    measure under integration.
    """
    th = np.clip(theta, THETA_CLAMP, math.pi - THETA_CLAMP)
    return 0.5 + 0.5 * (math.pi - th) / np.tan(th)


def p_irs_exact(r, theta, d, sc: Scenario):
    """Probability that an IRS host at (r, theta) can rebuild the link,
    conditional on the direct link at distance d being blocked.

    Combines: no blockage midpoint in the two reflection-leg regions
    (minus their overlaps with the direct-link region, handled through the
    mean overlap-area terms), and user/BS falling on one side of the host
    line. Clamped into [0, 1]; the raw expression can leave the unit
    interval in near-collinear geometry where the overlap-area
    approximation breaks down.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("p_irs_exact is conditioned on a blocked link: d > 0")
    c = sc.los_rate
    if c == 0.0:
        # no blockages: the conditioning event has probability zero
        return np.zeros(np.broadcast(r, theta, d).shape)

    cos_t = np.cos(theta)
    d_prime = np.sqrt(np.maximum(d**2 + r**2 - 2.0 * d * r * cos_t, 1e-24))
    t1 = np.arccos(np.clip((r - d * cos_t) / d_prime, -1.0, 1.0))
    t2 = np.arccos(np.clip((d - r * cos_t) / d_prime, -1.0, 1.0))
    t3 = np.abs(theta)

    c2 = sc.lambda_o * sc.e_l2 / (2.0 * math.pi)
    eps_side = 1.0 - t1 / math.pi
    log_a = -c * (d_prime + r) - np.log(-np.expm1(-c * d))
    e1 = c2 * _g_overlap(t1)
    e2 = -c * d + c2 * (_g_overlap(t1) + _g_overlap(t2) + _g_overlap(t3))
    # cap exponents: overflow here only ever means "clamp to 1 later"
    term1 = np.exp(np.minimum(log_a + e1, 50.0))
    term2 = np.exp(np.minimum(log_a + e2, 50.0))
    out = np.clip((term1 - term2) * eps_side, 0.0, 1.0)
    return out if out.ndim else float(out)


def p_irs_hat(r_s, r_e, d, sc: Scenario):
    """Closed form for the reconfiguration mass
    int_{-pi}^{pi} int_{r_s}^{r_e} p_i(r, theta | d) r dr dtheta.

    Uses the far-zone reduction of p_irs_exact: 0 for r <= E[l] and
    (1/2) exp(-c (d + r)) beyond, integrated in closed form. The max
    clamps below realize the r <= E[l] cutoff.
    """
    c = sc.los_rate
    d = np.asarray(d, dtype=float)
    if c == 0.0:
        return np.zeros(d.shape) if d.ndim else 0.0
    a = np.maximum(np.asarray(r_s, dtype=float), sc.e_l)
    b = np.maximum(np.asarray(r_e, dtype=float), sc.e_l)

    def stem(x):
        return (x / c + 1.0 / c**2) * np.exp(-c * (x + d))

    out = math.pi * (stem(a) - stem(b))
    out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def p_irs_hat_prime(r0, d, sc: Scenario):
    """d/dr0 of p_irs_hat(0, r0, d): pi * r0 * exp(-c (r0 + d)) on
    (E[l], d_serve], zero elsewhere."""
    c = sc.los_rate
    r0 = np.asarray(r0, dtype=float)
    d = np.asarray(d, dtype=float)
    inside = (r0 > sc.e_l) & (r0 <= sc.d_serve)
    out = np.where(inside, math.pi * r0 * np.exp(-c * (r0 + d)), 0.0)
    return out if out.ndim else float(out)


def irs_weighted_integral(d: float, sc: Scenario, mode: str = "approx",
                          r_lo: float = 0.0, r_hi: float | None = None,
                          spec: QuadSpec = DEFAULT_SPEC) -> float:
    """int int p_i r dr dtheta over the annulus [r_lo, r_hi] x [-pi, pi]."""
    if r_hi is None:
        r_hi = sc.d_serve
    if mode == "approx":
        return float(p_irs_hat(r_lo, r_hi, d, sc))
    if mode != "exact":
        raise ValueError(f"mode must be 'approx' or 'exact', got {mode!r}")
    if sc.los_rate == 0.0 or r_hi <= r_lo:
        return 0.0

    def outer(thetas: np.ndarray) -> np.ndarray:
        out = np.empty_like(thetas)
        for i, th in enumerate(thetas.ravel()):
            out.flat[i] = integrate_1d(
                lambda rr: p_irs_exact(rr, float(th), d, sc) * rr,
                r_lo, r_hi, spec,
            )
        return out

    return 2.0 * integrate_1d(outer, THETA_EDGE, math.pi - THETA_EDGE, spec)


def bs_density(state: str, d, sc: Scenario, mode: str = "approx"):
    """Distance-dependent density of BSs whose link to the user is in the
    given LoS state ('los' | 'nlos' | 'rlos'). The three densities sum to
    lambda_b by construction."""
    d_arr = np.asarray(d, dtype=float)
    pl = np.exp(-sc.los_rate * d_arr)
    if state == "los":
        out = sc.lambda_b * pl
        return out if out.ndim else float(out)
    if mode == "approx":
        mass = p_irs_hat(0.0, sc.d_serve, d_arr, sc)
    else:
        mass = np.array(
            [irs_weighted_integral(float(x), sc, mode) for x in np.atleast_1d(d_arr)]
        ).reshape(d_arr.shape)
    avail = -np.expm1(-sc.lambda_i * mass)
    if state == "nlos":
        out = sc.lambda_b * (1.0 - pl) * (1.0 - avail)
    elif state == "rlos":
        out = sc.lambda_b * (1.0 - pl) * avail
    else:
        raise ValueError(f"unknown state {state!r}")
    return out if out.ndim else float(out)


def irs_availability(d, r, sc: Scenario, mode: str = "approx"):
    """Probability that an available IRS exists beyond distance r from the
    user, given the user-BS distance d."""
    if mode == "approx":
        mass = p_irs_hat(r, sc.d_serve, np.asarray(d, dtype=float), sc)
    else:
        mass = np.array(
            [
                irs_weighted_integral(float(x), sc, mode, r_lo=float(r))
                for x in np.atleast_1d(np.asarray(d, dtype=float))
            ]
        ).reshape(np.asarray(d, dtype=float).shape)
    out = -np.expm1(-sc.lambda_i * mass)
    return out if out.ndim else float(out)


# --- serving-IRS distance ----------------------------------------------------


@lru_cache(maxsize=64)
def _psi_table(sc: Scenario, n: int = 1024):
    """d-independent part of p_irs_hat(0, r, d) = exp(-c d) * psi(r), on a
    monotone grid over [E[l], d_serve] for closed-form inversion."""
    c = sc.los_rate
    r = np.linspace(sc.e_l, sc.d_serve, n)
    stem0 = (sc.e_l / c + 1.0 / c**2) * np.exp(-c * sc.e_l)
    psi = math.pi * (stem0 - (r / c + 1.0 / c**2) * np.exp(-c * r))
    return r, psi


def _psi(sc: Scenario, r):
    c = sc.los_rate
    r = np.asarray(r, dtype=float)
    a = np.maximum(r, sc.e_l)
    stem0 = (sc.e_l / c + 1.0 / c**2) * np.exp(-c * sc.e_l)
    return math.pi * (stem0 - (a / c + 1.0 / c**2) * np.exp(-c * a))


def conditional_irs_cdf(r, d, sc: Scenario):
    """F_{r1}(r | d): cdf of the nearest available IRS distance given the
    link at d is reconfigurable (approx mode, vectorized in r and d)."""
    r = np.asarray(r, dtype=float)
    d = np.asarray(d, dtype=float)
    if sc.los_rate == 0.0:
        out = np.broadcast_to(np.where(r >= sc.d_serve, 1.0, 0.0),
                              np.broadcast(r, d).shape).copy()
        return out if out.ndim else float(out)
    num_mass = p_irs_hat(0.0, np.minimum(r, sc.d_serve), d, sc)
    den_mass = p_irs_hat(0.0, sc.d_serve, d, sc)
    if sc.lambda_i > 0.0:
        num = -np.expm1(-sc.lambda_i * num_mass)
        den = -np.expm1(-sc.lambda_i * den_mass)
    else:
        num, den = num_mass, den_mass  # lambda_i -> 0 limit
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    out = np.where(r >= sc.d_serve, 1.0, out)
    out = np.asarray(np.clip(out, 0.0, 1.0))
    return out if out.ndim else float(out)


def inverse_irs_cdf(u, d, sc: Scenario):
    """Inverse of conditional_irs_cdf in r, vectorized over (u, d) pairs."""
    if sc.lambda_i <= 0.0 or sc.los_rate == 0.0:
        raise DegenerateCondition("no IRS field to condition on")
    u = np.asarray(u, dtype=float)
    d = np.asarray(d, dtype=float)
    c = sc.los_rate
    scale = sc.lambda_i * np.exp(-c * d)
    psi_d = _psi(sc, sc.d_serve)
    avail = -np.expm1(-scale * psi_d)
    target = -np.log1p(-u * avail) / scale
    rg, pg = _psi_table(sc)
    r = np.interp(target, pg, rg)
    # two Newton polish steps; psi'(r) = pi r exp(-c r)
    for _ in range(2):
        f = _psi(sc, r) - target
        df = math.pi * r * np.exp(-c * r)
        r = np.clip(r - f / np.maximum(df, 1e-300), sc.e_l, sc.d_serve)
    return r


@dataclass(frozen=True)
class ServingIrsDistance:
    """cdf/pdf of the user to serving-IRS distance on [0, d_serve),
    conditioned on the link at distance d being reconfigurable."""

    d: float
    sc: Scenario
    mode: str = "approx"

    def cdf(self, r):
        if self.mode == "approx":
            return conditional_irs_cdf(r, self.d, self.sc)
        den = -math.expm1(
            -self.sc.lambda_i * irs_weighted_integral(self.d, self.sc, "exact")
        )
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r_arr)
        for i, rv in enumerate(r_arr):
            if rv >= self.sc.d_serve:
                out[i] = 1.0
                continue
            num = -math.expm1(
                -self.sc.lambda_i
                * irs_weighted_integral(self.d, self.sc, "exact", r_hi=float(rv))
            )
            out[i] = num / den
        out = np.clip(out, 0.0, 1.0)
        return out if np.asarray(r).ndim else float(out[0])

    def pdf(self, r):
        sc = self.sc
        if self.mode == "approx":
            r_arr = np.asarray(r, dtype=float)
            mass = p_irs_hat(0.0, r_arr, self.d, sc)
            den = -math.expm1(-sc.lambda_i * p_irs_hat(0.0, sc.d_serve, self.d, sc))
            out = (
                sc.lambda_i
                * np.exp(-sc.lambda_i * mass)
                * p_irs_hat_prime(r_arr, self.d, sc)
                / den
            )
            return out if out.ndim else float(out)
        den = -math.expm1(
            -sc.lambda_i * irs_weighted_integral(self.d, sc, "exact")
        )
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r_arr)
        for i, rv in enumerate(r_arr):
            if rv >= sc.d_serve or rv <= 0.0:
                out[i] = 0.0
                continue
            mass = irs_weighted_integral(self.d, sc, "exact", r_hi=float(rv))
            ring = 2.0 * integrate_1d(
                lambda th: p_irs_exact(float(rv), th, self.d, sc) * float(rv),
                THETA_EDGE, math.pi - THETA_EDGE,
            )
            out[i] = sc.lambda_i * math.exp(-sc.lambda_i * mass) * ring / den
        return out if np.asarray(r).ndim else float(out[0])

    def inverse(self, u):
        if self.mode != "approx":
            raise NotImplementedError("inverse sampling is approx-mode only")
        return inverse_irs_cdf(u, self.d, self.sc)


def serving_irs_distance(d: float, sc: Scenario,
                         mode: str = "approx") -> ServingIrsDistance:
    if d <= 0:
        raise ValueError("d must be > 0")
    avail = irs_availability(d, 0.0, sc, mode="approx" if mode == "approx" else "exact")
    if avail < 1e-12:
        raise DegenerateCondition(
            f"IRS availability at d={d} is {avail:.3g}; cannot condition on it"
        )
    return ServingIrsDistance(d, sc, mode)
