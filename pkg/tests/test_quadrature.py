import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irsnet import quadrature as q


def test_quadspec_validation():
    with pytest.raises(ValueError):
        q.QuadSpec(rel_tol=-1.0)
    with pytest.raises(ValueError):
        q.QuadSpec(max_depth=0)


def test_polynomial():
    assert q.integrate_1d(lambda x: x, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)


def test_truncated_exponential():
    val = q.integrate_1d(lambda x: np.exp(-x), 0.0, 50.0)
    assert val == pytest.approx(1.0 - math.exp(-50.0), abs=1e-9)


def test_sine_arch():
    assert q.integrate_1d(np.sin, 0.0, math.pi) == pytest.approx(2.0, rel=1e-9)


def test_semi_infinite_exponential():
    assert q.integrate_semi_infinite(lambda x: np.exp(-x), 0.0) == pytest.approx(
        1.0, rel=1e-6
    )


def test_semi_infinite_rayleigh_normalization():
    lam = 1e-5  # per m^2
    pdf = lambda d: 2 * math.pi * lam * d * np.exp(-lam * math.pi * d**2)
    assert q.integrate_semi_infinite(pdf, 0.0) == pytest.approx(1.0, rel=1e-6)


def test_semi_infinite_incomplete_gamma_tail():
    # int_5^inf x e^-x dx = 6 e^-5
    val = q.integrate_semi_infinite(lambda x: x * np.exp(-x), 5.0)
    assert val == pytest.approx(6.0 * math.exp(-5.0), rel=1e-8)


def test_tail_not_decaying_detected():
    with pytest.raises(q.TailNotDecaying):
        q.integrate_semi_infinite(lambda x: x * x, 1.0)


def test_non_finite_integrand_detected():
    with pytest.raises(q.NonFiniteIntegrand):
        q.integrate_1d(lambda x: 1.0 / x, -1.0, 1.0)


def test_nested_2d_unit_square():
    val = q.integrate_2d_nested(
        lambda x, y: np.ones_like(y), (0.0, 1.0), lambda x: (0.0, 1.0)
    )
    assert val == pytest.approx(1.0, abs=1e-10)


def test_nested_2d_polar_disk_area():
    val = q.integrate_2d_nested(
        lambda th, r: r, (-math.pi, math.pi), lambda th: (0.0, 50.0)
    )
    assert val == pytest.approx(math.pi * 50.0**2, rel=1e-9)


def test_nested_2d_triangular_region():
    # int_0^2 int_0^x x*y dy dx = int_0^2 x^3/2 dx = 2
    val = q.integrate_2d_nested(
        lambda x, y: x * y, (0.0, 2.0), lambda x: (0.0, x)
    )
    assert val == pytest.approx(2.0, rel=1e-9)


def test_expectation_normalization_and_uniform_mean():
    one = lambda x: np.ones_like(x)
    pdf = lambda x: np.ones_like(x)
    assert q.expectation(one, pdf, (0.0, 1.0)) == pytest.approx(1.0, abs=1e-3)
    assert q.expectation(lambda x: x, pdf, (0.0, 1.0)) == pytest.approx(0.5)


def test_expectation_rayleigh_second_moment():
    lam = 1e-5
    pdf = lambda d: 2 * math.pi * lam * d * np.exp(-lam * math.pi * d**2)
    val = q.expectation(lambda d: d**2, pdf, (0.0, math.inf))
    assert val == pytest.approx(1.0 / (math.pi * lam), rel=1e-5)


def test_expectation_rejects_unnormalized_density():
    with pytest.raises(q.UnnormalizedDensity):
        q.expectation(lambda x: x, lambda x: 2.0 * np.ones_like(x), (0.0, 1.0))


@given(
    st.floats(-2.0, 2.0),
    st.floats(-3.0, 3.0),
    st.floats(0.5, 4.0),
)
@settings(max_examples=25, deadline=None)
def test_linearity(alpha, beta, width):
    f = lambda x: np.sin(x)
    g = lambda x: np.exp(-0.5 * x) * x
    combo = q.integrate_1d(lambda x: alpha * f(x) + beta * g(x), 0.0, width)
    parts = alpha * q.integrate_1d(f, 0.0, width) + beta * q.integrate_1d(
        g, 0.0, width
    )
    tol = 2 * max(1e-10, 1e-6 * abs(combo))
    assert abs(combo - parts) <= tol


@given(st.floats(0.1, 0.9))
@settings(max_examples=25, deadline=None)
def test_domain_splitting(split):
    f = lambda x: np.cos(3 * x) * np.exp(-x)
    whole = q.integrate_1d(f, 0.0, 1.0)
    parts = q.integrate_1d(f, 0.0, split) + q.integrate_1d(f, split, 1.0)
    assert abs(whole - parts) <= 2 * max(1e-10, 1e-6 * abs(whole))


def test_tightening_tolerance_never_hurts():
    f = lambda x: np.sqrt(np.abs(np.sin(7 * x)))
    truth = q.integrate_1d(f, 0.0, 2.0, q.QuadSpec(rel_tol=1e-12, abs_tol=1e-14))
    errs = []
    for rel in (1e-3, 1e-6, 1e-9):
        got = q.integrate_1d(f, 0.0, 2.0, q.QuadSpec(rel_tol=rel))
        errs.append(abs(got - truth))
    assert errs[2] <= errs[0] + 1e-12
    assert errs[1] <= errs[0] + 1e-9


def test_breakpoints_resolve_kinks():
    f = lambda x: np.where(x < 0.3, 0.0, x - 0.3)
    exact = 0.5 * 0.7**2
    got = q.integrate_1d(f, 0.0, 1.0, points=(0.3,))
    assert got == pytest.approx(exact, abs=1e-12)


def test_gl_panel_batch_matches_closed_form():
    lo = np.array([0.0, 1.0])
    hi = np.array([1.0, 3.0])
    vals = q.gl_panel_batch(lambda x: x**3, lo, hi, n=8)
    assert vals == pytest.approx([0.25, (81 - 1) / 4.0])


def test_cumulative_integral():
    grid = np.linspace(0.0, 2.0, 41)
    cum = q.cumulative_integral(lambda x: 3 * x**2, grid)
    assert cum[-1] == pytest.approx(8.0, rel=1e-10)
    assert cum[20] == pytest.approx(1.0, rel=1e-10)
