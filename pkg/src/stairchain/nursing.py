"""Two-adversary block-nursing contest.

Without a nonce, a miner can only vary its hash by preparing many
candidate blocks with distinct transaction combinations ("nursing").  Two
nurses holding m and n candidates race up the staircase; the first whose
candidate clears the active call value wins the block, ties split by a
fair coin.  This module gives the exact loss probability of the m-side,
its Monte Carlo oracle, the large-n asymptote L(x) at ratio x = m/n, and
the amplification factor that prices a 51%-style advantage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .params import ProtocolParams
from .simulate import _chunk_ranges, seeded_generators, u64_thresholds

__all__ = [
    "DrawMode",
    "Method",
    "NursingOutcome",
    "loss_probability_exact",
    "loss_probability_simulated",
    "loss_asymptote",
    "amplification_factor",
    "win_run_lengths",
]

_U64_MAX = (1 << 64) - 1


class DrawMode(Enum):
    """How candidate hashes evolve across slots.

    FRESH_PER_SLOT re-draws every candidate at every slot, which is the
    independence the contest analysis assumes.  SINGLE_DRAW fixes one hash
    per candidate for the whole contest, the behaviour of the implicit
    scheme where nothing re-randomizes between slots.
    """

    FRESH_PER_SLOT = "fresh_per_slot"
    SINGLE_DRAW = "single_draw"


class Method(Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"
    ASYMPTOTE = "asymptote"


@dataclass(frozen=True, slots=True)
class NursingOutcome:
    m: int
    n: int
    loss_probability: float
    method: Method

    def __post_init__(self) -> None:
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ValueError("loss_probability must lie in [0, 1]")


def _check_sides(m: int, n: int) -> None:
    if m < 0:
        raise ValueError("m must be non-negative")
    if n < 1:
        raise ValueError("n must be at least 1")


def loss_probability_exact(
    params: ProtocolParams, m: int, n: int,
    mode: DrawMode = DrawMode.FRESH_PER_SLOT,
) -> float:
    """Probability that the m-candidate nurse loses to the n-candidate one.

    Fresh-draw mode sums over the slot where the contest ends: the n-side
    passes while the m-side does not (full loss), or both pass (half), each
    conditioned on every earlier slot clearing nobody.  Single-draw mode
    sums over the n-side's first slot against the m-side's survival bands.
    Both forms telescope so that swapping m and n sums to one exactly.
    """
    _check_sides(m, n)
    P = params.P

    def none_pass(count: int, prob: float) -> float:
        # (1 - prob)**count with the 0**0 = 1 convention: an empty side
        # never passes, whatever the call value.
        if count == 0:
            return 1.0
        return math.exp(count * math.log1p(-prob)) if prob < 1.0 else 0.0

    if mode is DrawMode.FRESH_PER_SLOT:
        loss = 0.0
        log_surv = 0.0
        for level in range(params.k + 1):
            none_of_n = none_pass(n, P[level])
            none_of_m = none_pass(m, P[level])
            loss += math.exp(log_surv) * (1.0 - none_of_n) * (1.0 + none_of_m) / 2.0
            if level < params.k:
                log_surv += (m + n) * math.log1p(-P[level])
        return loss
    loss = 0.0
    prev_n, prev_m = 1.0, 1.0
    for level in range(params.k + 1):
        surv_n = none_pass(n, P[level])
        surv_m = none_pass(m, P[level])
        loss += (prev_n - surv_n) * (prev_m + surv_m) / 2.0
        prev_n, prev_m = surv_n, surv_m
    return loss


def _contest_losses(
    params: ProtocolParams, m: int, n: int, trials: int, seed: int, mode: DrawMode
) -> np.ndarray:
    """Boolean per-contest outcomes, True where the m-side loses."""
    if m == 0:
        return np.ones(trials, dtype=bool)
    thresholds = u64_thresholds(params)
    ranges = _chunk_ranges(trials, m + n)
    rngs = seeded_generators(seed, len(ranges))
    losses = np.empty(trials, dtype=bool)
    for rng, (lo, hi) in zip(rngs, ranges):
        size = hi - lo
        if mode is DrawMode.SINGLE_DRAW:
            a = rng.integers(0, _U64_MAX, size=(size, m), dtype=np.uint64, endpoint=True)
            b = rng.integers(0, _U64_MAX, size=(size, n), dtype=np.uint64, endpoint=True)
            a_slot = np.searchsorted(thresholds, a.ravel(), side="left").reshape(size, m).min(axis=1)
            b_slot = np.searchsorted(thresholds, b.ravel(), side="left").reshape(size, n).min(axis=1)
            coin = rng.random(size) < 0.5
            losses[lo:hi] = (b_slot < a_slot) | ((b_slot == a_slot) & coin)
            continue
        chunk = np.zeros(size, dtype=bool)
        active = np.arange(size)
        for level in range(params.k + 1):
            a = rng.integers(0, _U64_MAX, size=(active.size, m), dtype=np.uint64, endpoint=True)
            b = rng.integers(0, _U64_MAX, size=(active.size, n), dtype=np.uint64, endpoint=True)
            a_pass = (a <= thresholds[level]).any(axis=1)
            b_pass = (b <= thresholds[level]).any(axis=1)
            coin = rng.random(active.size) < 0.5
            decided = a_pass | b_pass
            lost = (b_pass & ~a_pass) | (a_pass & b_pass & coin)
            chunk[active[decided]] = lost[decided]
            active = active[~decided]
            if active.size == 0:
                break
        losses[lo:hi] = chunk
    return losses


def loss_probability_simulated(
    params: ProtocolParams, m: int, n: int, trials: int, seed: int,
    mode: DrawMode = DrawMode.FRESH_PER_SLOT,
) -> float:
    """Monte Carlo estimate of the loss probability; oracle for the exact sum."""
    _check_sides(m, n)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    return float(_contest_losses(params, m, n, trials, seed, mode).mean())


def win_run_lengths(
    params: ProtocolParams, m: int, n: int, contests: int, seed: int,
    mode: DrawMode = DrawMode.FRESH_PER_SLOT,
) -> np.ndarray:
    """Lengths of maximal winning streaks of the m-side over repeated contests.

    The mean streak length estimates 1/L_{m,n}.  A streak still open when
    the sequence ends is discarded as censored.
    """
    _check_sides(m, n)
    wins = ~_contest_losses(params, m, n, contests, seed, mode)
    padded = np.concatenate(([False], wins, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    starts, ends = edges[::2], edges[1::2]
    if wins.size and wins[-1]:
        starts, ends = starts[:-1], ends[:-1]
    return ends - starts


def loss_asymptote(p: float, x: float) -> float:
    """Large-n limit L(x) of the loss probability at nursery ratio x = m/n.

    L(1) is exactly one half; L falls from 1 at x -> 0 to 0 as x grows.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    if x <= 0.0:
        raise ValueError("x must be positive")
    log_p = math.log(p)
    return (math.log(x + p) + log_p - math.log(p * x + 1.0)) / (2.0 * log_p)


def amplification_factor(p: float) -> float:
    """Marginal nursery growth needed per unit of win probability at parity.

    This is the negated slope of L at x -> 0 scaled to the contest's
    currency: (1 - p**2) / (2 p log(1/p)).  Flat staircases (p near 1)
    give an attacker no leverage beyond linear.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    return (1.0 - p * p) / (2.0 * p * math.log(1.0 / p))
