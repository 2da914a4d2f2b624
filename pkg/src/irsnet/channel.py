"""Averaged received-power models for direct and IRS-reflected links.

Fast fading is averaged out (channel measurements are filtered), so powers
are deterministic functions of geometry. All powers in linear watts.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .scenario import Scenario

__all__ = [
    "ZeroDistance",
    "rx_power_direct",
    "rx_power_reflected",
    "beamforming_gain",
]


class ZeroDistance(ValueError):
    pass


@lru_cache(maxsize=256)
def beamforming_gain(n_elements: int, m_los: float) -> float:
    """Mean coherent combining gain of an N-element reflecting surface.

    Under Nakagami-m fading on both hops with aligned phases,

        G_bf = N^2 + N * (1 - (1/m^2) * (Gamma(m + 1/2) / Gamma(m))^4).

    The gamma ratio is evaluated via log-gamma so large m stays stable;
    G_bf -> N^2 in the deterministic-fading limit and lies in [N^2, N^2 + N].
    """
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    if m_los <= 0:
        raise ValueError("m_los must be > 0")
    log_ratio = math.lgamma(m_los + 0.5) - math.lgamma(m_los)
    # (Gamma(m+1/2)/Gamma(m))^4 / m^2 = exp(4*log_ratio - 2*log(m))
    frac = math.exp(4.0 * log_ratio - 2.0 * math.log(m_los))
    n = float(n_elements)
    return n * n + n * (1.0 - frac)


def rx_power_direct(state: str, d0, sc: Scenario):
    """Averaged received power of a direct link in state 'los' or 'nlos'.

    p_t * K_k * d0^(-alpha_k); scalar in, scalar out (arrays pass through).
    """
    d0_arr = np.asarray(d0, dtype=float)
    if np.any(d0_arr <= 0.0):
        raise ZeroDistance("direct link requires d0 > 0")
    if state == "los":
        k, alpha = sc.k_los, sc.alpha_los
    elif state == "nlos":
        k, alpha = sc.k_nlos, sc.alpha_nlos
    else:
        raise ValueError(f"state must be 'los' or 'nlos', got {state!r}")
    out = sc.p_t * k * d0_arr**-alpha
    return out if out.ndim else float(out)


def rx_power_reflected(r0, d0_prime, sc: Scenario):
    """Averaged received power of an IRS-reflected link.

    p_t * K_L^2 * G_bf * r0^(-alpha_L) * d0_prime^(-alpha_L), where r0 is
    the user-IRS distance and d0_prime the IRS-BS distance. The NLoS
    component of the reflected path is negligible next to the aligned
    reflection and is omitted.
    """
    r0_arr = np.asarray(r0, dtype=float)
    dp_arr = np.asarray(d0_prime, dtype=float)
    if np.any(r0_arr <= 0.0) or np.any(dp_arr <= 0.0):
        raise ZeroDistance("reflected link requires r0 > 0 and d0_prime > 0")
    gain = beamforming_gain(sc.n_elements, sc.m_los)
    out = sc.p_t * sc.k_los**2 * gain * (r0_arr * dp_arr) ** -sc.alpha_los
    return out if out.ndim else float(out)


def reflected_coupling(sc: Scenario) -> float:
    """K_L * G_bf, the constant coupling reflected and direct LoS powers.

    A reflected link at (r0, d0') matches a direct LoS link at distance
    x with x^alpha_L = (r0 * d0')^alpha_L / (K_L * G_bf).
    """
    return sc.k_los * beamforming_gain(sc.n_elements, sc.m_los)
