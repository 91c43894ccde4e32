"""Exact mining-count distributions, mean bounds, and tail bounds."""
import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import loggamma

from stairchain import (
    bound_constants,
    distribution_explicit_closed,
    distribution_explicit_recurrence,
    distribution_implicit,
    expected_mined_explicit,
    expected_mined_implicit,
    fourier_constant_A,
    fourier_constant_B,
    local_maxima,
    log_grid,
    new_params,
    survivor_set_mean,
    tail_bound,
    tail_from_pmf,
    upper_bound_explicit,
    upper_bound_implicit,
)

P216 = new_params(2, 16, 256)
P832 = new_params(8, 1 << 32, 256)

# two contenders on the k=2, N=16 staircase, worked out in exact rationals
EXPLICIT_PMF_N2 = (Fraction(915, 2048), Fraction(1133, 2048))
IMPLICIT_PMF_N2 = (Fraction(51, 128), Fraction(77, 128))


def test_explicit_two_contender_pmf_exact():
    for dist in (distribution_explicit_recurrence(P216, 2),
                 distribution_explicit_closed(P216, 2)):
        assert dist.pmf[0] == 0.0
        assert math.isclose(dist.pmf[1], float(EXPLICIT_PMF_N2[0]), rel_tol=1e-13)
        assert math.isclose(dist.pmf[2], float(EXPLICIT_PMF_N2[1]), rel_tol=1e-13)
        assert math.isclose(dist.mean(), 3181 / 2048, rel_tol=1e-13)
    assert math.isclose(expected_mined_explicit(P216, 2), 3181 / 2048, rel_tol=1e-13)


def test_explicit_two_contender_pmf_from_first_principles():
    # mixture weights: all earlier steps empty; top-step point mass at n
    P = [Fraction(1, 16), Fraction(1, 4), Fraction(1)]
    w = [Fraction(1), (1 - P[0]) ** 2, ((1 - P[0]) * (1 - P[1])) ** 2]
    assert w[2] == Fraction(2025, 4096)
    pmf1 = w[0] * 2 * P[0] * (1 - P[0]) + w[1] * 2 * P[1] * (1 - P[1])
    pmf2 = w[0] * P[0] ** 2 + w[1] * P[1] ** 2 + w[2]
    assert (pmf1, pmf2) == EXPLICIT_PMF_N2
    assert pmf1 + pmf2 == 1


def test_implicit_two_contender_pmf_exact():
    dist = distribution_implicit(P216, 2)
    assert dist.pmf[0] == 0.0
    assert math.isclose(dist.pmf[1], float(IMPLICIT_PMF_N2[0]), rel_tol=1e-13)
    assert math.isclose(dist.pmf[2], float(IMPLICIT_PMF_N2[1]), rel_tol=1e-13)
    assert math.isclose(dist.mean(), 205 / 128, rel_tol=1e-13)
    assert math.isclose(expected_mined_implicit(P216, 2), 205 / 128, rel_tol=1e-13)


def test_single_contender_always_mines():
    for params in (P216, new_params(4, 256, 64)):
        for dist in (distribution_explicit_closed(params, 1),
                     distribution_implicit(params, 1)):
            np.testing.assert_allclose(dist.pmf, [0.0, 1.0], atol=1e-15)
        assert math.isclose(expected_mined_explicit(params, 1), 1.0, rel_tol=1e-12)
        assert math.isclose(expected_mined_implicit(params, 1), 1.0, rel_tol=1e-12)


def test_zero_contenders():
    assert distribution_explicit_closed(P216, 0).pmf.tolist() == [1.0]
    assert distribution_implicit(P216, 0).pmf.tolist() == [1.0]
    assert expected_mined_explicit(P216, 0) == 0.0
    assert expected_mined_implicit(P216, 0) == 0.0


def test_closed_form_matches_recurrence_on_grid():
    for k in (1, 2, 4, 8):
        for N in (16, 256):
            params = new_params(k, N, 256)
            for n in (1, 2, 3, 5, 8, 16, 64):
                if n > N:
                    continue
                a = distribution_explicit_recurrence(params, n).pmf
                b = distribution_explicit_closed(params, n).pmf
                np.testing.assert_allclose(a, b, atol=1e-12, rtol=1e-12)
                assert math.isclose(float(np.dot(np.arange(n + 1), a)),
                                    expected_mined_explicit(params, n), rel_tol=1e-10)


def test_implicit_mean_matches_pmf_on_grid():
    for k in (1, 2, 4, 8):
        params = new_params(k, 256, 256)
        for n in (1, 2, 5, 17, 64, 200, 256):
            dist = distribution_implicit(params, n)
            assert math.isclose(dist.mean(), expected_mined_implicit(params, n),
                                rel_tol=1e-10)


@given(k=st.integers(1, 6), s=st.integers(2, 8), n=st.integers(1, 32))
@settings(max_examples=60, deadline=None)
def test_distribution_invariants(k, s, n):
    N = 1 << s
    if n > N:
        n = N
    params = new_params(k, N, 128)
    rec = distribution_explicit_recurrence(params, n).pmf
    clo = distribution_explicit_closed(params, n).pmf
    imp = distribution_implicit(params, n).pmf
    np.testing.assert_allclose(rec, clo, atol=1e-12)
    for pmf in (rec, clo, imp):
        assert pmf.shape == (n + 1,)
        assert pmf[0] == 0.0
        assert np.all(pmf >= 0.0)
        assert math.isclose(float(pmf.sum()), 1.0, rel_tol=1e-12)


def test_distribution_argument_guards():
    with pytest.raises(ValueError):
        distribution_explicit_closed(P216, -1)
    with pytest.raises(ValueError):
        distribution_explicit_closed(P216, 17)
    with pytest.raises(ValueError):
        distribution_implicit(P832, (1 << 16) + 1)
    with pytest.raises(ValueError):
        expected_mined_explicit(P216, 17)


# --- fluctuation constants --------------------------------------------------

def _fourier_reference(p: float, truncation_j: int) -> float:
    """Independent route through the complex log-gamma function."""
    log_inv_p = -math.log(p)
    total = 1.0
    for j in range(1, truncation_j + 1):
        z = complex(1.0, 2.0 * math.pi * j / log_inv_p)
        total += 2.0 * math.exp(loggamma(z).real)
    return total / log_inv_p


def test_fourier_constants_frozen_and_cross_checked():
    assert math.isclose(fourier_constant_A(P832), 0.4413331079656325, rel_tol=1e-14)
    assert math.isclose(fourier_constant_B(P832), 7.06132972745012, rel_tol=1e-13)
    assert fourier_constant_B(P832) == fourier_constant_A(P832) / P832.p
    for params in (P832, new_params(12, 1 << 32, 256), new_params(2, 16, 16)):
        for J in (1, 4, 10):
            assert math.isclose(fourier_constant_A(params, J),
                                _fourier_reference(params.p, J), rel_tol=1e-12)


def test_fourier_series_terms():
    # leading term is 1/log(1/p); for p = 1/16 the first amplitude is
    # |Gamma(1 + 2i*pi/log 16)| = 0.10734...
    log16 = math.log(16.0)
    y = 2.0 * math.pi / log16
    amp = math.sqrt(math.pi * y / math.sinh(math.pi * y))
    assert math.isclose(amp, abs(cmath.exp(loggamma(complex(1.0, y)))), rel_tol=1e-13)
    assert math.isclose(amp, 0.107344, abs_tol=5e-7)
    assert math.isclose(fourier_constant_A(P832, 1), (1.0 + 2.0 * amp) / log16,
                        rel_tol=1e-13)
    assert fourier_constant_A(P832, 10) > 1.0 / log16


def test_bound_constants_truncation():
    consts = bound_constants(P832, 10)
    assert consts.truncation_j == 10
    assert 0.0 < consts.truncation_error < 1e-12
    assert math.isclose(consts.truncation_error, 8.91e-17, rel_tol=1e-2)
    assert consts.B > consts.A
    # adding terms can only grow the sum, by less than the dropped bound
    # (plus one ulp of summation rounding)
    wider = fourier_constant_A(P832, 11)
    assert 0.0 <= wider - consts.A <= consts.truncation_error + math.ulp(consts.A)
    with pytest.raises(ValueError):
        fourier_constant_A(P832, 0)


def test_mean_bounds_dominate_small_n():
    consts = bound_constants(P832)
    for n in (1, 10, 1000, 10**6):
        assert expected_mined_explicit(P832, n) <= upper_bound_explicit(P832, n, consts)
        assert expected_mined_implicit(P832, n) <= upper_bound_implicit(P832, n, consts)
    assert upper_bound_explicit(P832, 0, consts) == consts.A / P832.p
    assert upper_bound_implicit(P832, 0, consts) == consts.B / P832.p


# --- tails -------------------------------------------------------------------

def test_tail_bound_frozen_and_clamped():
    assert math.isclose(tail_bound(P216, 10), 0.35261954409766555, rel_tol=1e-14)
    assert tail_bound(P216, 1) == 1.0
    assert tail_bound(P216, 5) == 1.0
    assert tail_bound(P216, 6) < 1.0
    assert tail_bound(P216, 10**6) == 0.0
    with pytest.raises(ValueError):
        tail_bound(P216, 0)


def test_tail_from_pmf_shape():
    pmf = np.array([0.0, 0.5, 0.3, 0.2])
    tail = tail_from_pmf(pmf)
    np.testing.assert_allclose(tail, [1.0, 0.5, 0.2, 0.0], atol=1e-15)
    assert np.all(np.diff(tail) <= 0.0)


def test_exact_tails_stay_under_bound():
    for params, n in ((P216, 16), (new_params(4, 256, 256), 100)):
        for dist in (distribution_explicit_closed(params, n),
                     distribution_implicit(params, n)):
            tail = tail_from_pmf(dist.pmf)
            for m in range(1, n + 1):
                assert tail[m] <= tail_bound(params, m) + 1e-12


# --- survivor sets and grid helpers ------------------------------------------

def test_survivor_set_mean():
    assert survivor_set_mean(0.5) == 1.4426950408889634
    assert math.isclose(survivor_set_mean(0.25), 0.75 / (0.25 * math.log(4.0)),
                        rel_tol=1e-15)
    # decreasing in p, approaching 1 as p -> 1
    assert survivor_set_mean(0.1) > survivor_set_mean(0.5) > survivor_set_mean(0.9)
    assert math.isclose(survivor_set_mean(0.999), 1.0, rel_tol=1e-3)
    for bad in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            survivor_set_mean(bad)


def test_log_grid():
    grid = log_grid(1, 1 << 20, 64)
    assert grid.shape == (320,)
    assert grid[0] == 1 and grid[-1] == 1 << 20
    assert np.all(np.diff(grid) > 0)
    assert grid.dtype == np.int64
    np.testing.assert_array_equal(log_grid(5, 5, 8), [5])
    with pytest.raises(ValueError):
        log_grid(0, 10)
    with pytest.raises(ValueError):
        log_grid(10, 1)
    with pytest.raises(ValueError):
        log_grid(1, 10, 0)


def test_local_maxima():
    np.testing.assert_array_equal(local_maxima(np.array([0, 1, 0, 2, 0])), [1, 3])
    assert local_maxima(np.array([0, 1, 1, 0])).size == 0
    assert local_maxima(np.array([3, 2, 1])).size == 0
    assert local_maxima(np.array([1, 2, 3])).size == 0
