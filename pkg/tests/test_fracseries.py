from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldpid.fracseries import (SeriesKind, backward_diff_weights, binomial_series, custom_series, expand_fk,
                              prewarp_alpha)


def closed_forms(mu):
    """f_0..f_6 as polynomials in mu, written out by hand."""
    return np.array([
        1.0,
        -2 * mu,
        2 * mu**2,
        -(4 / 3) * mu**3 - (2 / 3) * mu,
        (2 / 3) * mu**4 + (4 / 3) * mu**2,
        -(4 / 15) * mu**5 - (4 / 3) * mu**3 - (2 / 5) * mu,
        (4 / 45) * mu**6 + (8 / 9) * mu**4 + (46 / 45) * mu**2,
    ])


def exp_atanh_oracle(mu, M):
    """Coefficients of exp(-2 mu atanh w), via the power-series exponential recurrence."""
    h = np.zeros(M + 1)
    h[1::2] = -2 * mu / np.arange(1, M + 1, 2)
    E = np.zeros(M + 1)
    E[0] = 1.0
    k = np.arange(M + 1)
    for n in range(1, M + 1):
        E[n] = np.dot(k[1:n + 1] * h[1:n + 1], E[n - 1::-1][:n]) / n
    return E


def recurrence_oracle(a, M):
    """f_{k+1} = (-2a f_k + (k-1) f_{k-1}) / (k+1), from (1-w^2) F' = -2a F."""
    f = np.zeros(M + 1)
    f[0] = 1.0
    if M >= 1:
        f[1] = -2 * a
    for k in range(1, M):
        f[k + 1] = (-2 * a * f[k] + (k - 1) * f[k - 1]) / (k + 1)
    return f


@pytest.mark.parametrize("mu", [0.45, 0.5, 0.8, 1.03, 1.15, 1.228])
def test_closed_forms_listed_orders(mu):
    np.testing.assert_allclose(expand_fk(mu, 6).values, closed_forms(mu), rtol=0, atol=1e-12)


@given(st.floats(-2, 2, allow_nan=False))
def test_closed_forms_property(mu):
    np.testing.assert_allclose(expand_fk(mu, 6).values, closed_forms(mu), rtol=0, atol=1e-12)


def test_half_order_prefix():
    np.testing.assert_allclose(expand_fk(0.5, 3).values, [1.0, -1.0, 0.5, -1 / 6 - 1 / 3], atol=1e-15)


def test_zero_order_is_identity():
    np.testing.assert_array_equal(expand_fk(0.0, 4).values, [1, 0, 0, 0, 0])


def test_integer_order_one_is_exact():
    # (1-w)/(1+w) = 1 - 2w + 2w^2 - 2w^3 + ...
    np.testing.assert_allclose(expand_fk(1.0, 8).values, [1] + [2 * (-1) ** k for k in range(1, 9)], atol=1e-14)


@pytest.mark.parametrize("mu", [0.3, 1.228, -0.1, 1.9])
def test_matches_exp_atanh_oracle_long(mu):
    M = 400
    np.testing.assert_allclose(expand_fk(mu, M).values, exp_atanh_oracle(mu, M), rtol=1e-10, atol=1e-13)


@pytest.mark.parametrize("mu", [0.077, 0.585, 1.15])
def test_matches_recurrence_oracle(mu):
    M = 2000
    np.testing.assert_allclose(expand_fk(mu, M).values, recurrence_oracle(mu, M), rtol=1e-9, atol=1e-14)


@pytest.mark.parametrize("mu", [0.3, 0.7, 1.2])
@pytest.mark.parametrize("angle", np.linspace(0, 2 * np.pi, 7, endpoint=False))
def test_series_consistency(mu, angle):
    w = 0.5 * np.exp(1j * angle)
    direct = ((1 - w) / (1 + w)) ** mu
    assert abs(expand_fk(mu, 40).evaluate(w) - direct) < 1e-8


@settings(max_examples=60)
@given(st.floats(1e-3, 2.0), st.integers(0, 60))
def test_alternating_sign(mu, M):
    f = expand_fk(mu, M).values
    assert f[0] == 1.0
    assert np.all(f[:-1] * f[1:] <= 0)
    assert np.all(f * (-1.0) ** np.arange(M + 1) > 0)


def test_series_value_object():
    s = expand_fk(0.8, 5, SeriesKind.INTEGRAL)
    assert s.M == 5 and len(s) == 6 and s.kind is SeriesKind.INTEGRAL and s.order == 0.8
    with pytest.raises(ValueError):
        s.values[0] = 2.0


def test_runtime_large_M():
    t0 = time.perf_counter()
    f = expand_fk(1.228, 10_000).values
    assert time.perf_counter() - t0 < 1.0
    assert f.shape == (10_001,) and np.all(np.isfinite(f))


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_order_rejected(bad):
    with pytest.raises(ValueError):
        expand_fk(bad, 3)


@pytest.mark.parametrize("M", [-1, 1.5, True])
def test_bad_M_rejected(M):
    with pytest.raises((ValueError, TypeError)):
        expand_fk(0.5, M)


def test_binomial_series_exact_integer_power():
    np.testing.assert_allclose(binomial_series(3.0, 5, -1.0), [1, -3, 3, -1, 0, 0])
    np.testing.assert_allclose(binomial_series(-1.0, 4, 1.0), [1, -1, 1, -1, 1])


def test_custom_series_escape_hatch():
    s = custom_series([1.0, -0.7, 0.2])
    assert s.M == 2 and math.isnan(s.order)
    assert s.evaluate(1.0) == pytest.approx(0.5)


# backward-difference weights -----------------------------------------------

@pytest.mark.parametrize("n, expected", [
    (1, [Fraction(1), Fraction(-1)]),
    (2, [Fraction(3, 2), Fraction(-2), Fraction(1, 2)]),
    (3, [Fraction(11, 6), Fraction(-3), Fraction(3, 2), Fraction(-1, 3)]),
])
def test_printed_stencils(n, expected):
    np.testing.assert_allclose(backward_diff_weights(n).weights, [float(x) for x in expected], rtol=0, atol=1e-15)


def vandermonde_oracle(n):
    """Weights w with sum_k w_k (-k)^j = [j == 1] for j = 0..n."""
    k = np.arange(n + 1)
    A = np.vander(-k.astype(float), n + 1, increasing=True).T
    rhs = np.zeros(n + 1)
    rhs[1] = 1.0
    return np.linalg.solve(A, rhs)


@pytest.mark.parametrize("n", range(1, 9))
def test_weights_match_vandermonde(n):
    np.testing.assert_allclose(backward_diff_weights(n).weights, vandermonde_oracle(n), rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("n", range(1, 9))
def test_zero_sum_and_harmonic_head(n):
    g = backward_diff_weights(n).weights
    assert abs(g.sum()) < 1e-12
    assert abs(g[0] - sum(1 / j for j in range(1, n + 1))) < 1e-12


@settings(max_examples=80)
@given(st.integers(1, 8), st.data())
def test_exact_on_polynomials(n, data):
    coeffs = data.draw(st.lists(st.floats(-3, 3), min_size=n + 1, max_size=n + 1))
    T = data.draw(st.floats(0.05, 0.5))
    t0 = data.draw(st.floats(-1, 1))
    p = np.polynomial.Polynomial(coeffs)
    samples = p(t0 - T * np.arange(n, -1, -1))  # oldest first
    exact = p.deriv()(t0)
    got = backward_diff_weights(n).apply(samples, T)
    scale = max(1.0, np.abs(p.deriv().coef).sum() * (1 + abs(t0) + n * T) ** n)
    assert abs(got - exact) <= 1e-9 * scale


def test_weights_reject_n0():
    with pytest.raises(ValueError):
        backward_diff_weights(0)


# prewarp ---------------------------------------------------------------------

def test_prewarp_small_angle_limit():
    assert prewarp_alpha(1e-6, 0.1) == pytest.approx(20.0, rel=1e-6)


def test_prewarp_example_value():
    assert prewarp_alpha(0.21, 0.1) == pytest.approx(0.21 / math.tan(0.0105), rel=1e-15)
    assert prewarp_alpha(0.21, 0.1) == pytest.approx(19.999265, abs=1e-6)


@pytest.mark.parametrize("wc, T", [(math.pi / 0.1, 0.1), (40.0, 0.1), (0.0, 0.1), (1.0, 0.0), (-1.0, 0.1)])
def test_prewarp_domain(wc, T):
    with pytest.raises(ValueError):
        prewarp_alpha(wc, T)
