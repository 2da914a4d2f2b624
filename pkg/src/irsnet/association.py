"""Initial serving-link state probabilities and serving-distance
distributions.

The user attaches to the BS with maximum averaged received power. For each
candidate state k the nearest k-state BS competes with the other two
fields through equivalent radii: a candidate at distance x in another
state only wins if it beats the k-state power, which maps to exclusion
disks/annuli whose radii are closed-form functions of x and the channel
constants. All expectations reduce to 1D integrals over the closed-form
thinned densities; inner couplings through the serving-IRS distance cdf
use its closed form directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import spatial
from .channel import beamforming_gain
from .quadrature import cumulative_integral, gl_panel_batch
from .scenario import Scenario

__all__ = [
    "AssociationProbs",
    "DegenerateState",
    "association_probs",
    "nearest_distance_pdf",
    "serving_distance_dist",
    "ServingDistance",
]

STATES = ("los", "nlos", "rlos")


class DegenerateState(ValueError):
    """The requested LoS state occurs with (numerically) zero probability."""


@dataclass(frozen=True)
class AssociationProbs:
    a_los: float
    a_nlos: float
    a_rlos: float

    def __getitem__(self, state: str) -> float:
        return getattr(self, f"a_{state}")

    @property
    def total(self) -> float:
        return self.a_los + self.a_nlos + self.a_rlos


@dataclass(frozen=True)
class EquivalentRadii:
    """Equal-power projections between link states.

    d_tilde_n(x): NLoS distance matching a LoS link at x (and d_tilde_l its
    inverse); r_tilde_l / r_tilde_n: serving-IRS radius below which a
    reflected link at BS distance s beats a LoS/NLoS link at x.
    """

    sc: Scenario

    @property
    def x_l(self) -> float:
        # (K_L * G_bf)^(1/alpha_L): reflected-vs-LoS coupling scale
        return spatial_coupling(self.sc)

    @property
    def x_n(self) -> float:
        sc = self.sc
        g = beamforming_gain(sc.n_elements, sc.m_los)
        return (sc.k_los**2 * g / sc.k_nlos) ** (1.0 / sc.alpha_los)

    def d_tilde_n(self, x):
        sc = self.sc
        return (sc.k_nlos / sc.k_los) ** (1.0 / sc.alpha_nlos) * np.power(
            x, sc.alpha_los / sc.alpha_nlos
        )

    def d_tilde_l(self, x):
        sc = self.sc
        return (sc.k_los / sc.k_nlos) ** (1.0 / sc.alpha_los) * np.power(
            x, sc.alpha_nlos / sc.alpha_los
        )

    def r_tilde_l(self, x_l, d_r):
        return self.x_l * x_l / d_r

    def r_tilde_n(self, x_n, d_r):
        sc = self.sc
        return self.x_n * np.power(x_n, sc.alpha_nlos / sc.alpha_los) / d_r


def spatial_coupling(sc: Scenario) -> float:
    return (sc.k_los * beamforming_gain(sc.n_elements, sc.m_los)) ** (
        1.0 / sc.alpha_los
    )


def _lam(state: str, x, sc: Scenario):
    return spatial.bs_density(state, x, sc, mode="approx")


class _RadialMass:
    """Lambda_k(t) = 2*pi int_0^t lambda_k(u) u du, with closed form for
    the LoS state and a grid plus constant-density tail for the others."""

    def __init__(self, state: str, sc: Scenario, t_grid: np.ndarray):
        self.state = state
        self.sc = sc
        if state == "los":
            self.grid = None
            return
        self.grid = t_grid
        self.cum = 2.0 * math.pi * cumulative_integral(
            lambda u: _lam(state, u, sc) * u, t_grid
        )

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        sc = self.sc
        c = sc.los_rate
        if self.state == "los":
            if c == 0.0:
                out = math.pi * sc.lambda_b * t**2
            else:
                out = (
                    2.0 * math.pi * sc.lambda_b
                    * (1.0 - (1.0 + c * t) * np.exp(-c * t)) / c**2
                )
            return out if out.ndim else float(out)
        out = np.interp(t, self.grid, self.cum)
        over = t > self.grid[-1]
        if np.any(over):
            t_end = self.grid[-1]
            if self.state == "nlos":
                # beyond the grid the IRS availability factor is ~1
                if c == 0.0:
                    extra = 0.0 * t
                else:
                    base = lambda x: (
                        x**2 / 2.0 + ((1.0 + c * x) * np.exp(-c * x) - 1.0) / c**2
                    )
                    extra = 2.0 * math.pi * sc.lambda_b * (base(t) - base(t_end))
                out = np.where(over, self.cum[-1] + extra, out)
            else:  # rlos density vanishes beyond the grid
                out = np.where(over, self.cum[-1], out)
        return out if out.ndim else float(out)


def _state_cutoff(state: str, sc: Scenario, mass: _RadialMass) -> float:
    """Radius beyond which the nearest-k-BS pdf mass is negligible."""
    t = max(200.0, 4.0 / math.sqrt(math.pi * sc.lambda_b))
    for _ in range(60):
        m_t, m_2t = mass(t), mass(2.0 * t)
        if m_t > 40.0:
            return t
        if m_2t - m_t < 1e-12 and math.exp(-m_t) - math.exp(-m_2t) < 1e-10:
            return 2.0 * t
        t *= 2.0
    return t


@dataclass
class _StateTables:
    """Per-scenario cached machinery for Theorems 1 and 2."""

    sc: Scenario
    eq: EquivalentRadii
    mass: dict
    cutoff: dict
    a: dict
    x_grid: dict
    x_cdf: dict

    def lam(self, state, x):
        return _lam(state, x, self.sc)


@lru_cache(maxsize=16)
def _tables(sc: Scenario) -> _StateTables:
    eq = EquivalentRadii(sc)
    mass: dict = {}
    cutoff: dict = {}
    # provisional LoS objects first: cutoffs for grids of the other states
    mass["los"] = _RadialMass("los", sc, np.zeros(1))
    cutoff["los"] = _state_cutoff("los", sc, mass["los"])
    t_max = cutoff["los"]
    for state in ("nlos", "rlos"):
        grid = np.linspace(0.0, 4.0 * t_max, 2049)
        mass[state] = _RadialMass(state, sc, grid)
        cutoff[state] = _state_cutoff(state, sc, mass[state])
        if cutoff[state] > grid[-1]:
            grid = np.linspace(0.0, 1.25 * cutoff[state], 2049)
            mass[state] = _RadialMass(state, sc, grid)

    tables = _StateTables(sc, eq, mass, cutoff, {}, {}, {})
    for state in STATES:
        _build_state(tables, state)
    return tables


def _exponent(tables: _StateTables, state: str, t: np.ndarray) -> np.ndarray:
    """-log of the survival factor multiplying the nearest-k pdf: the
    probability that no other-state BS beats a k-state BS at distance t."""
    sc = tables.sc
    eq = tables.eq
    mass = tables.mass
    t = np.asarray(t, dtype=float)
    if state == "los":
        self_m = mass["los"](t)
        other = mass["nlos"](eq.d_tilde_n(t))
        rival = _rlos_coupling_term(tables, t, flavor="los")
        return self_m + other + rival
    if state == "nlos":
        self_m = mass["nlos"](t)
        other = mass["los"](eq.d_tilde_l(t))
        rival = _rlos_coupling_term(tables, t, flavor="nlos")
        return self_m + other + rival
    # state == "rlos"
    self_m = mass["rlos"](t)
    beats_l = _direct_coupling_term(tables, t, rival="los")
    beats_n = _direct_coupling_term(tables, t, rival="nlos")
    return self_m + beats_l + beats_n


def _rlos_coupling_term(tables: _StateTables, t: np.ndarray, flavor: str):
    """2*pi int_0^inf lambda_R(s) F_r1(r_tilde(t, s) | s) s ds.

    r_tilde decreases in s; F == 1 below s0 (r_tilde >= d_serve) and == 0
    above s1 (r_tilde <= E[l]), so the integral is a cumulative-mass read
    plus one smooth finite panel.
    """
    sc = tables.sc
    if sc.lambda_i <= 0.0 or sc.los_rate == 0.0:
        return np.zeros_like(t)
    eq = tables.eq
    if flavor == "los":
        num = eq.x_l * t
    else:
        num = eq.x_n * np.power(t, sc.alpha_nlos / sc.alpha_los)
    s_cut = tables.cutoff["rlos"]
    s0 = np.minimum(num / sc.d_serve, s_cut)
    s1 = np.minimum(num / max(sc.e_l, 1e-12), s_cut)
    head = tables.mass["rlos"](s0)

    def integrand(s):
        r_t = num[..., None] / np.maximum(s, 1e-12)
        return (
            tables.lam("rlos", s)
            * spatial.conditional_irs_cdf(r_t, s, sc)
            * s
        )

    mid = 2.0 * math.pi * gl_panel_batch(integrand, s0, np.maximum(s1, s0), n=48)
    return head + mid


def _direct_coupling_term(tables: _StateTables, t: np.ndarray, rival: str):
    """2*pi int lambda_k(u) [1 - F_r1(r_tilde(u, t) | t)] u du for the
    rlos-serving case; r_tilde grows in u, support ends at r_tilde ==
    d_serve."""
    sc = tables.sc
    eq = tables.eq
    if sc.lambda_i <= 0.0 or sc.los_rate == 0.0:
        # conditioning state has zero probability anyway
        return np.zeros_like(t)
    tt = np.maximum(t, 1e-12)
    if rival == "los":
        u0 = sc.e_l * tt / eq.x_l
        u1 = sc.d_serve * tt / eq.x_l
    else:
        g = sc.alpha_los / sc.alpha_nlos
        u0 = np.power(sc.e_l * tt / eq.x_n, g)
        u1 = np.power(sc.d_serve * tt / eq.x_n, g)
    u_cut = tables.cutoff[rival]
    head = tables.mass[rival](np.minimum(u0, u_cut))

    lo = np.minimum(u0, u_cut)
    hi = np.minimum(u1, u_cut)

    def integrand(u):
        if rival == "los":
            r_t = eq.x_l * u / tt[..., None]
        else:
            r_t = eq.x_n * np.power(u, sc.alpha_nlos / sc.alpha_los) / tt[..., None]
        f = spatial.conditional_irs_cdf(r_t, tt[..., None], sc)
        return tables.lam(rival, u) * (1.0 - f) * u

    mid = 2.0 * math.pi * gl_panel_batch(integrand, lo, np.maximum(hi, lo), n=48)
    return head + mid


def _build_state(tables: _StateTables, state: str) -> None:
    sc = tables.sc
    t_max = tables.cutoff[state]
    # sqrt-spacing concentrates nodes where the nearest-BS pdf lives
    grid = t_max * np.linspace(0.0, 1.0, 1537) ** 1.5

    def dens(u):
        expo = _exponent(tables, state, u.ravel()).reshape(u.shape)
        return (
            2.0 * math.pi * tables.lam(state, np.maximum(u, 1e-12)) * u
            * np.exp(-np.clip(expo, 0.0, 700.0))
        )

    cdf = cumulative_integral(dens, grid, n=8)
    tables.a[state] = float(cdf[-1])
    tables.x_grid[state] = grid
    tables.x_cdf[state] = cdf


def association_probs(sc: Scenario) -> AssociationProbs:
    """Probabilities that the serving link starts LoS / NLoS / RLoS."""
    t = _tables(sc)
    return AssociationProbs(t.a["los"], t.a["nlos"], t.a["rlos"])


def nearest_distance_pdf(state: str, sc: Scenario):
    """pdf of the distance to the nearest BS of one LoS state.

    Integrates to the probability that the state's field is nonempty
    (1 up to numerical cutoff when it is a.s. infinite).
    """
    if state not in STATES:
        raise ValueError(f"unknown state {state!r}")
    if state == "rlos" and sc.lambda_i == 0.0:
        raise DegenerateState("no IRS-equipped blockages: RLoS field is empty")
    if state != "los" and sc.lambda_o == 0.0:
        raise DegenerateState("no blockages: every link is LoS")
    t = _tables(sc)
    mass = t.mass[state]

    def pdf(x):
        x = np.asarray(x, dtype=float)
        out = 2.0 * math.pi * t.lam(state, np.maximum(x, 1e-12)) * x * np.exp(
            -mass(x)
        )
        return out if out.ndim else float(out)

    return pdf


@dataclass(frozen=True)
class ServingDistance:
    """Distance to the serving BS conditioned on its initial state."""

    state: str
    sc: Scenario

    def _t(self):
        return _tables(self.sc)

    def cdf(self, x):
        """Anchored-exact cdf: cumulative grid value at the nearest grid
        point below plus a local quadrature of the exact density, so the
        cdf is smooth and finite differences reproduce the pdf."""
        t = self._t()
        grid = t.x_grid[self.state]
        cum = t.x_cdf[self.state]
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        xc = np.clip(x_arr, grid[0], grid[-1])
        idx = np.clip(np.searchsorted(grid, xc, side="right") - 1, 0,
                      len(grid) - 2)
        lo = grid[idx]

        def dens(u):
            expo = _exponent(t, self.state, u.ravel()).reshape(u.shape)
            return (
                2.0 * math.pi * t.lam(self.state, np.maximum(u, 1e-12)) * u
                * np.exp(-np.clip(expo, 0.0, 700.0))
            )

        residual = gl_panel_batch(dens, lo, xc, n=12)
        out = np.clip((cum[idx] + residual) / t.a[self.state], 0.0, 1.0)
        out = np.where(x_arr >= grid[-1], 1.0, out)
        out = out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])
        return out

    def pdf(self, x):
        t = self._t()
        x = np.asarray(x, dtype=float)
        expo = _exponent(t, self.state, np.atleast_1d(x))
        out = (
            2.0 * math.pi / t.a[self.state]
            * t.lam(self.state, np.maximum(x, 1e-12)) * x
            * np.exp(-np.clip(expo, 0.0, 700.0))
        ).reshape(x.shape)
        return out if out.ndim else float(out)

    def inverse(self, u):
        t = self._t()
        cdf = t.x_cdf[self.state] / t.a[self.state]
        return np.interp(np.asarray(u, dtype=float), cdf, t.x_grid[self.state])


def serving_distance_dist(state: str, sc: Scenario) -> ServingDistance:
    if state not in STATES:
        raise ValueError(f"unknown state {state!r}")
    t = _tables(sc)
    if t.a[state] < 1e-12:
        raise DegenerateState(f"state {state!r} has probability {t.a[state]:.3g}")
    return ServingDistance(state, sc)
