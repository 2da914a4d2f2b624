"""Deterministic numerical integration used by all analytic modules.

Adaptive Gauss-Kronrod (7/15) for finite intervals, probe-and-truncate for
semi-infinite tails, Fubini nesting for 2D, and an expectation operator with
a normalization check.

Integrands follow a vectorized contract: they receive a float ndarray of
evaluation points and return an ndarray of the same shape. Kronrod nodes are
interior, so endpoint singularities are never sampled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "QuadSpec",
    "QuadratureError",
    "NonConvergence",
    "NonFiniteIntegrand",
    "TailNotDecaying",
    "UnnormalizedDensity",
    "integrate_1d",
    "integrate_semi_infinite",
    "integrate_2d_nested",
    "expectation",
]


@dataclass(frozen=True)
class QuadSpec:
    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    max_depth: int = 40
    tail_cut_tol: float = 1e-9  # relative integrand magnitude for tail truncation

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.tail_cut_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


DEFAULT_SPEC = QuadSpec()


class QuadratureError(Exception):
    pass


class NonConvergence(QuadratureError):
    pass


class NonFiniteIntegrand(QuadratureError):
    pass


class TailNotDecaying(QuadratureError):
    pass


class UnnormalizedDensity(QuadratureError):
    pass


# 15-point Kronrod extension of 7-point Gauss, nodes on [-1, 1].
_XGK = np.array(
    [
        -0.991455371120813,
        -0.949107912342759,
        -0.864864423359769,
        -0.741531185599394,
        -0.586087235467691,
        -0.405845151377397,
        -0.207784955007898,
        0.0,
        0.207784955007898,
        0.405845151377397,
        0.586087235467691,
        0.741531185599394,
        0.864864423359769,
        0.949107912342759,
        0.991455371120813,
    ]
)
_WGK = np.array(
    [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
        0.204432940075298,
        0.190350578064785,
        0.169004726639267,
        0.140653259715525,
        0.104790010322250,
        0.063092092629979,
        0.022935322010529,
    ]
)
# 7-point Gauss weights sit on Kronrod nodes 1, 3, 5, 7, 9, 11, 13.
_WG = np.array(
    [
        0.129484966168870,
        0.279705391489277,
        0.381830050505119,
        0.417959183673469,
        0.381830050505119,
        0.279705391489277,
        0.129484966168870,
    ]
)
_GAUSS_IDX = np.arange(1, 15, 2)


def _gk_panels(f, lo: np.ndarray, hi: np.ndarray):
    """Kronrod/Gauss estimates and error for a batch of panels."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * _XGK[None, :]
    vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrand(
            "integrand returned non-finite values inside the interval"
        )
    i15 = half * (vals @ _WGK)
    i7 = half * (vals[:, _GAUSS_IDX] @ _WG)
    return i15, np.abs(i15 - i7)


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadSpec = DEFAULT_SPEC,
    points: Iterable[float] = (),
) -> float:
    """Adaptive integral of f over [a, b].

    `points` lists known breakpoints (kinks/seams of piecewise integrands);
    the interval is pre-split there instead of relying on adaptivity to
    find them.
    """
    if a > b:
        raise ValueError("integrate_1d requires a <= b")
    if a == b:
        return 0.0
    edges = sorted({a, b, *(p for p in points if a < p < b)})
    lo = np.array(edges[:-1], dtype=float)
    hi = np.array(edges[1:], dtype=float)

    total_width = b - a
    result = 0.0  # accumulated integral over converged panels
    err_acc = 0.0
    depth = np.zeros(len(lo), dtype=int)

    for _ in range(spec.max_depth + 1):
        i15, err = _gk_panels(f, lo, hi)
        running = result + float(i15.sum())
        tol = max(spec.abs_tol, spec.rel_tol * abs(running))
        local_tol = tol * (hi - lo) / total_width
        # panels already at the floating-point floor count as converged
        fp_floor = 1e-15 * (1.0 + np.abs(i15)) + 1e-300
        done = err <= np.maximum(local_tol, fp_floor)
        result += float(i15[done].sum())
        err_acc += float(err[done].sum())
        if np.all(done):
            return result
        lo, hi, depth = lo[~done], hi[~done], depth[~done]
        if np.any(depth >= spec.max_depth):
            raise NonConvergence(
                f"max_depth={spec.max_depth} exceeded; "
                f"unresolved error ~{float(err[~done].sum()):.3g} "
                f"on {len(lo)} panels"
            )
        mid = 0.5 * (lo + hi)
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
        depth = np.concatenate([depth + 1, depth + 1])
    raise NonConvergence(f"max_depth={spec.max_depth} exceeded")


def integrate_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    spec: QuadSpec = DEFAULT_SPEC,
    points: Iterable[float] = (),
) -> float:
    """Integral of an eventually-decaying f over [a, inf).

    The domain is truncated at b where |f(b)| * b drops below tail_cut_tol
    relative to the running estimate, then handed to integrate_1d. Raises
    TailNotDecaying if three successive probe doublings all increase |f|.
    """
    step = max(1.0, 0.5 * abs(a))
    b = a + step
    prev_mag = None
    increases = 0
    scale = 0.0
    for _ in range(200):
        i15, _ = _gk_panels(f, np.array([a]), np.array([b]))
        scale = max(scale, abs(float(i15[0])), spec.abs_tol)
        mag = abs(float(np.asarray(f(np.array([b])))[0]))
        if mag * max(b, 1.0) < spec.tail_cut_tol * scale:
            return integrate_1d(f, a, b, spec, points)
        if prev_mag is not None and mag > prev_mag:
            increases += 1
            # integrands may rise before their tail sets in; call the
            # growth divergent only once the probe is implausibly far out
            if increases >= 3 and b > 1e9 * max(1.0, abs(a)):
                raise TailNotDecaying(
                    f"integrand still growing at b={b:.3g} after three "
                    f"successive probe doublings"
                )
        else:
            increases = 0
        prev_mag = mag
        b = a + (b - a) * 2.0
    raise NonConvergence("tail truncation point not found within 200 doublings")


def integrate_2d_nested(
    f: Callable[[float, np.ndarray], np.ndarray],
    outer: tuple[float, float],
    inner_bounds: Callable[[float], tuple[float, float]],
    spec: QuadSpec = DEFAULT_SPEC,
    outer_points: Iterable[float] = (),
    inner_points: Iterable[float] = (),
) -> float:
    """Fubini evaluation of a 2D integral with x-dependent inner bounds.

    f(x, y_array) must be vectorized in its second argument. Known kinks
    of the inner integrand go in `inner_points` (the piecewise seams are
    the caller's knowledge, not something adaptivity should hunt for).
    """

    def outer_integrand(xs: np.ndarray) -> np.ndarray:
        out = np.empty_like(xs)
        for i, x in enumerate(xs.ravel()):
            c, d = inner_bounds(float(x))
            out.flat[i] = integrate_1d(
                lambda y: f(float(x), y), c, d, spec, inner_points
            )
        return out

    return integrate_1d(outer_integrand, outer[0], outer[1], spec, outer_points)


def expectation(
    g: Callable[[np.ndarray], np.ndarray],
    pdf: Callable[[np.ndarray], np.ndarray],
    support: tuple[float, float],
    spec: QuadSpec = DEFAULT_SPEC,
    points: Iterable[float] = (),
) -> float:
    """E[g(X)] for X with the given density on `support` (b may be inf).

    The density mass is checked: off by more than 1e-3 warns, more than
    1e-2 raises UnnormalizedDensity.
    """
    a, b = support
    if math.isinf(b):
        mass = integrate_semi_infinite(pdf, a, spec, points)
    else:
        mass = integrate_1d(pdf, a, b, spec, points)
    if abs(mass - 1.0) > 1e-2:
        raise UnnormalizedDensity(f"density integrates to {mass:.6g}, not 1")
    if abs(mass - 1.0) > 1e-3:
        warnings.warn(f"density integrates to {mass:.6g}", stacklevel=2)

    def integrand(x: np.ndarray) -> np.ndarray:
        return np.asarray(g(x)) * np.asarray(pdf(x))

    if math.isinf(b):
        return integrate_semi_infinite(integrand, a, spec, points)
    return integrate_1d(integrand, a, b, spec, points)


# --- fixed-rule helpers for vectorized composite integration ---------------


@lru_cache(maxsize=32)
def gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [0, 1] (cached)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def gl_panel_batch(
    f: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    n: int = 64,
) -> np.ndarray:
    """Fixed-order GL integral over a batch of intervals [lo_i, hi_i].

    Used where many parallel integrals share one smooth integrand shape
    (per-node lune integrals, beta integrals across move geometries).
    """
    x, w = gl_nodes(n)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    width = hi - lo
    nodes = lo[..., None] + width[..., None] * x
    vals = np.asarray(f(nodes))
    return width * (vals @ w)


def cumulative_integral(
    f: Callable[[np.ndarray], np.ndarray], grid: np.ndarray, n: int = 16
) -> np.ndarray:
    """Cumulative integral of f from grid[0] to each grid point (GL per cell)."""
    cells = gl_panel_batch(f, grid[:-1], grid[1:], n)
    out = np.empty_like(grid)
    out[0] = 0.0
    np.cumsum(cells, out=out[1:])
    return out
