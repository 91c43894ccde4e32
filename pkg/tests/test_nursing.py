"""Two-nurse contest: exact losses, Monte Carlo, asymptote, amplification."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stairchain import (
    DrawMode,
    Method,
    NursingOutcome,
    amplification_factor,
    loss_asymptote,
    loss_probability_exact,
    loss_probability_simulated,
    new_params,
    win_run_lengths,
)

P216 = new_params(2, 16, 256)
P832 = new_params(8, 1 << 32, 256)
MODES = (DrawMode.FRESH_PER_SLOT, DrawMode.SINGLE_DRAW)


def test_outcome_record_validation():
    outcome = NursingOutcome(m=3, n=5, loss_probability=0.25, method=Method.EXACT)
    assert outcome.loss_probability == 0.25
    for bad in (-0.1, 1.5):
        with pytest.raises(ValueError):
            NursingOutcome(m=1, n=1, loss_probability=bad, method=Method.EXACT)


def test_empty_nursery_always_loses():
    for mode in MODES:
        assert loss_probability_exact(P216, 0, 5, mode) == 1.0
        assert loss_probability_simulated(P216, 0, 5, 100, 1, mode) == 1.0
    assert win_run_lengths(P216, 0, 5, 100, 1).size == 0


def test_equal_nurseries_split_evenly():
    for mode in MODES:
        for n in (1, 7, 100):
            assert abs(loss_probability_exact(P216, n, n, mode) - 0.5) <= 1e-10
            assert abs(loss_probability_exact(P832, n, n, mode) - 0.5) <= 1e-10


def test_complementarity_on_grid():
    for mode in MODES:
        for m, n in ((1, 2), (3, 10), (25, 4), (100, 7), (64, 65)):
            total = (loss_probability_exact(P216, m, n, mode)
                     + loss_probability_exact(P216, n, m, mode))
            assert abs(total - 1.0) <= 1e-10


@given(m=st.integers(1, 300), n=st.integers(1, 300),
       mode=st.sampled_from(MODES))
@settings(max_examples=80, deadline=None)
def test_complementarity_property(m, n, mode):
    for params in (P216, new_params(3, 1000, 64)):
        loss = loss_probability_exact(params, m, n, mode)
        assert 0.0 <= loss <= 1.0
        assert abs(loss + loss_probability_exact(params, n, m, mode) - 1.0) <= 1e-10


def test_loss_monotone_in_nursery_sizes():
    for mode in MODES:
        losses_m = [loss_probability_exact(P216, m, 10, mode) for m in (1, 5, 20, 100)]
        assert all(a > b for a, b in zip(losses_m, losses_m[1:]))
        losses_n = [loss_probability_exact(P216, 10, n, mode) for n in (1, 5, 20, 100)]
        assert all(a < b for a, b in zip(losses_n, losses_n[1:]))


def test_argument_guards():
    with pytest.raises(ValueError):
        loss_probability_exact(P216, -1, 5)
    with pytest.raises(ValueError):
        loss_probability_exact(P216, 5, 0)
    with pytest.raises(ValueError):
        loss_probability_simulated(P216, 1, 1, 0, 1)


def test_monte_carlo_matches_exact():
    trials = 40000
    for seed, mode in ((1301, DrawMode.FRESH_PER_SLOT), (1302, DrawMode.SINGLE_DRAW)):
        exact = loss_probability_exact(P216, 3, 5, mode)
        mc = loss_probability_simulated(P216, 3, 5, trials, seed, mode)
        se = math.sqrt(exact * (1.0 - exact) / trials)
        assert abs(mc - exact) <= 3 * se
    # the two draw disciplines measure different contests
    assert loss_probability_exact(P216, 3, 5, DrawMode.FRESH_PER_SLOT) != \
           loss_probability_exact(P216, 3, 5, DrawMode.SINGLE_DRAW)


def test_monte_carlo_matches_exact_across_grid():
    grid = [(1, 1), (1, 2), (2, 1), (3, 5), (5, 3),
            (4, 4), (2, 7), (7, 2), (10, 10), (6, 9)]
    trials = 4000
    for i, (m, n) in enumerate(grid):
        exact = loss_probability_exact(P216, m, n)
        mc = loss_probability_simulated(P216, m, n, trials, 2700 + i)
        se = math.sqrt(exact * (1.0 - exact) / trials)
        assert abs(mc - exact) <= 3 * se


def test_monte_carlo_symmetric_hundred():
    trials = 100_000
    mc = loss_probability_simulated(P216, 100, 100, trials, 2690)
    assert abs(mc - 0.5) <= 3 * math.sqrt(0.25 / trials)


def test_monte_carlo_is_deterministic():
    for mode in MODES:
        a = loss_probability_simulated(P832, 4, 9, 5000, 77, mode)
        assert a == loss_probability_simulated(P832, 4, 9, 5000, 77, mode)


def test_win_streak_lengths_estimate_inverse_loss():
    lengths = win_run_lengths(P216, 7, 7, 20000, 1303)
    assert lengths.min() >= 1
    loss = loss_probability_exact(P216, 7, 7)
    se = lengths.std(ddof=1) / math.sqrt(lengths.size)
    assert abs(lengths.mean() - 1.0 / loss) <= 3 * se


# --- asymptote ---------------------------------------------------------------

def test_asymptote_values():
    assert loss_asymptote(0.25, 1.0) == 0.5
    assert loss_asymptote(0.0625, 1.0) == 0.5
    assert math.isclose(loss_asymptote(0.25, 4.0), 0.22813428968741517, rel_tol=1e-14)
    assert loss_asymptote(0.25, 1e-9) > 1.0 - 1e-8
    assert 0.0 < loss_asymptote(0.25, 1e9) < 1e-8
    for bad_p in (0.0, 1.0, 2.0):
        with pytest.raises(ValueError):
            loss_asymptote(bad_p, 1.0)
    with pytest.raises(ValueError):
        loss_asymptote(0.25, 0.0)
    with pytest.raises(ValueError):
        loss_asymptote(0.25, -1.0)


def test_asymptote_reciprocal_symmetry():
    for p in (0.0625, 0.25, 0.7):
        for x in (0.1, 0.5, 3.0, 40.0):
            assert abs(loss_asymptote(p, x) + loss_asymptote(p, 1.0 / x) - 1.0) <= 1e-12


def test_exact_losses_approach_asymptote():
    # needs a staircase tall enough that slots stay discriminating at this n
    for n in (100, 10000):
        for x in (0.25, 0.5, 1.0, 2.0, 4.0):
            exact = loss_probability_exact(P832, int(round(x * n)), n)
            assert abs(exact - loss_asymptote(P832.p, x)) < 0.05


def test_amplification_factor_values():
    assert math.isclose(amplification_factor(0.0625), 2.8741190267709817, rel_tol=1e-14)
    assert math.isclose(amplification_factor(2.0 ** (-8.0 / 3.0)), 1.6749998008090146,
                        rel_tol=1e-12)
    assert math.isclose(amplification_factor(0.25), 1.3525266008334031, rel_tol=1e-14)
    grid = [amplification_factor(0.05 + 0.05 * i) for i in range(19)]
    assert all(a > b for a, b in zip(grid, grid[1:]))
    for bad in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            amplification_factor(bad)


def test_amplification_is_small_x_slope():
    for p in (0.0625, 0.25, 0.5):
        x, h = 1e-6, 1e-7
        slope = (loss_asymptote(p, x + h) - loss_asymptote(p, x - h)) / (2.0 * h)
        assert math.isclose(-slope, amplification_factor(p), rel_tol=1e-4)
