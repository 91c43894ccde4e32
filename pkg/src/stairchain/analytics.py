"""Exact distributions, expectations and bounds for simultaneous mining.

``M_n`` is the number of regular blocks mined at once when ``n`` candidates
contend after a full block.  Two schemes are covered: the explicit scheme,
where every empty block re-randomizes all candidate hashes, and the
implicit scheme, where each candidate keeps a single hash and only the
slot gate widens over time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .params import ProtocolParams

__all__ = [
    "Scheme",
    "MiningDistribution",
    "BoundConstants",
    "distribution_explicit_recurrence",
    "distribution_explicit_closed",
    "distribution_implicit",
    "expected_mined_explicit",
    "expected_mined_implicit",
    "fourier_constant_A",
    "fourier_constant_B",
    "bound_constants",
    "upper_bound_explicit",
    "upper_bound_implicit",
    "tail_bound",
    "tail_from_pmf",
    "survivor_set_mean",
    "log_grid",
    "local_maxima",
]

_EXACT_N_LIMIT = 1 << 16


class Scheme(Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class MiningDistribution:
    """Probability mass of M_n, indexed 0..n."""

    n: int
    pmf: np.ndarray
    scheme: Scheme

    def mean(self) -> float:
        return float(np.dot(np.arange(self.n + 1), self.pmf))


@dataclass(frozen=True, slots=True)
class BoundConstants:
    """Fluctuation constants for the O(N^(1/k)) mean bounds.

    ``A`` bounds the explicit scheme, ``B = A/p`` the implicit one;
    ``truncation_error`` is the magnitude of the first Fourier term
    dropped at ``truncation_j``.
    """

    A: float
    B: float
    truncation_j: int
    truncation_error: float


def _check_n(params: ProtocolParams, n: int, exact: bool) -> None:
    if not 0 <= n <= params.N:
        raise ValueError(f"n must be in [0, N], got {n}")
    if exact and n > _EXACT_N_LIMIT:
        raise ValueError(f"exact path limited to n <= {_EXACT_N_LIMIT}")


def _finalize(pmf: np.ndarray, n: int, scheme: Scheme) -> MiningDistribution:
    total = float(pmf.sum())
    # Renormalizing a badly off mass would mask formula bugs, so only
    # float-level drift is absorbed.
    if abs(total - 1.0) >= 1e-9:
        raise ValueError(f"pmf sums to {total!r}, formula or parameters are wrong")
    return MiningDistribution(n=n, pmf=pmf / total, scheme=scheme)


def _log_survival_weights(params: ProtocolParams, n: int) -> np.ndarray:
    """log of w_level = prod_{j < level} (1 - P_j)**n for level 0..k."""
    log1m = np.log1p(-np.asarray(params.P[:-1]))
    return np.concatenate(([0.0], n * np.cumsum(log1m)))


def distribution_explicit_recurrence(params: ProtocolParams, n: int) -> MiningDistribution:
    """Explicit-scheme pmf by back-substitution from the top step.

    At the final step every contender passes, so the step-k distribution is
    a point mass at n.  One step down, the conditional law is binomial with
    its zero mass routed into the next step's distribution; repeating this
    from step k-1 down to 0 yields the law of M_n.
    """
    _check_n(params, n, exact=True)
    if n == 0:
        return _finalize(np.array([1.0]), 0, Scheme.EXPLICIT)
    m = np.arange(n + 1)
    pmf = np.zeros(n + 1)
    pmf[n] = 1.0
    for level in range(params.k - 1, -1, -1):
        step = binom.pmf(m, n, params.P[level])
        zero_mass = step[0]
        step[0] = 0.0
        pmf = step + zero_mass * pmf
    return _finalize(pmf, n, Scheme.EXPLICIT)


def distribution_explicit_closed(params: ProtocolParams, n: int) -> MiningDistribution:
    """Explicit-scheme pmf from the closed form.

    A mixture of zero-truncated binomials, one per staircase step, weighted
    by the probability that all earlier steps produced nothing, plus the
    all-pass point mass at m = n.
    """
    _check_n(params, n, exact=True)
    if n == 0:
        return _finalize(np.array([1.0]), 0, Scheme.EXPLICIT)
    m = np.arange(n + 1)
    logw = _log_survival_weights(params, n)
    pmf = np.zeros(n + 1)
    for level in range(params.k):
        step = binom.pmf(m, n, params.P[level])
        step[0] = 0.0
        pmf += math.exp(logw[level]) * step
    pmf[n] += math.exp(logw[params.k])
    return _finalize(pmf, n, Scheme.EXPLICIT)


def distribution_implicit(params: ProtocolParams, n: int) -> MiningDistribution:
    """Implicit-scheme pmf.

    Each contender draws one hash; the winning slot is the first whose gate
    clears someone, so m counts the hashes inside the first occupied band
    of the staircase.  Band level contributes C(n,m) (P_level - P_{level-1})**m
    (1 - P_level)**(n-m), with a point mass at n when every hash sits above
    the top gated band.
    """
    _check_n(params, n, exact=True)
    if n == 0:
        return _finalize(np.array([1.0]), 0, Scheme.IMPLICIT)
    k = params.k
    m = np.arange(n + 1)
    log_comb = gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1)
    pmf = np.zeros(n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        for level in range(k):
            width = params.P[level] - (params.P[level - 1] if level else 0.0)
            term = np.exp(log_comb + m * math.log(width) + (n - m) * math.log1p(-params.P[level]))
            term[0] = 0.0
            pmf += np.nan_to_num(term, nan=0.0, posinf=0.0)
    pmf[n] += math.exp(n * math.log1p(-params.P[k - 1]))
    return _finalize(pmf, n, Scheme.IMPLICIT)


def expected_mined_explicit(params: ProtocolParams, n: int) -> float:
    """E[M_n] for the explicit scheme, evaluated in log space."""
    _check_n(params, n, exact=False)
    logw = _log_survival_weights(params, n)
    return float(n * np.dot(np.asarray(params.P), np.exp(logw)))


def expected_mined_implicit(params: ProtocolParams, n: int) -> float:
    """E[M_n] for the implicit scheme, evaluated in log space."""
    _check_n(params, n, exact=False)
    if n == 0:
        return 0.0
    P = params.P
    total = n * P[0]
    for level in range(1, params.k + 1):
        total += n * (P[level] - P[level - 1]) * math.exp((n - 1) * math.log1p(-P[level - 1]))
    return total


def _gamma_one_plus_iy_abs(y: float) -> float:
    """|Gamma(1 + iy)| through |Gamma(1+iy)|**2 = pi*y / sinh(pi*y)."""
    if y == 0.0:
        return 1.0
    t = math.pi * abs(y)
    if t > 700.0:
        # sinh overflows; the asymptotic 2t*exp(-t) form underflows safely.
        return math.sqrt(2.0 * t) * math.exp(-t / 2.0)
    return math.sqrt(t / math.sinh(t))


def fourier_constant_A(params: ProtocolParams, truncation_j: int = 10) -> float:
    """Explicit-scheme constant: the mean of the limiting periodic profile
    plus its Fourier amplitudes, A = (1/log(1/p)) * sum_{|j|<=J} |Gamma(1 + 2ij*pi/log p)|."""
    if truncation_j < 1:
        raise ValueError("truncation_j must be at least 1")
    log_inv_p = -math.log(params.p)
    total = 1.0
    for j in range(1, truncation_j + 1):
        total += 2.0 * _gamma_one_plus_iy_abs(2.0 * math.pi * j / log_inv_p)
    return total / log_inv_p


def fourier_constant_B(params: ProtocolParams, truncation_j: int = 10) -> float:
    """Implicit-scheme constant, the same sum scaled by 1/p."""
    return fourier_constant_A(params, truncation_j) / params.p


def bound_constants(params: ProtocolParams, truncation_j: int = 10) -> BoundConstants:
    """A and B together with the size of the first dropped Fourier term."""
    A = fourier_constant_A(params, truncation_j)
    log_inv_p = -math.log(params.p)
    dropped = 2.0 * _gamma_one_plus_iy_abs(2.0 * math.pi * (truncation_j + 1) / log_inv_p) / log_inv_p
    return BoundConstants(A=A, B=A / params.p, truncation_j=truncation_j, truncation_error=dropped)


def upper_bound_explicit(params: ProtocolParams, n: int, constants: BoundConstants) -> float:
    """Mean bound n/N + A*N**(1/k); N**(1/k) is 1/p."""
    return n / params.N + constants.A / params.p


def upper_bound_implicit(params: ProtocolParams, n: int, constants: BoundConstants) -> float:
    """Mean bound n/N + B*N**(1/k) covering both schemes."""
    return n / params.N + constants.B / params.p


def tail_bound(params: ProtocolParams, m: int) -> float:
    """Exponential bound on P(M_n > m), uniform in n: min(1, (k + e**p)/(1+p)**m)."""
    if m < 1:
        raise ValueError("the tail bound needs m >= 1")
    log_value = math.log(params.k + math.exp(params.p)) - m * math.log1p(params.p)
    if log_value >= 0.0:
        return 1.0
    # exp underflows to 0 for very large m, which is the right limit.
    try:
        return math.exp(log_value)
    except OverflowError:
        return 0.0


def tail_from_pmf(pmf: np.ndarray) -> np.ndarray:
    """tail[m] = P(M > m), by reverse accumulation for numerical stability."""
    reversed_cumsum = np.cumsum(pmf[::-1])[::-1]
    tail = np.empty_like(pmf)
    tail[:-1] = reversed_cumsum[1:]
    tail[-1] = 0.0
    return tail


def survivor_set_mean(p: float) -> float:
    """Asymptotic mean size of the last non-empty survivor set in the
    coin-tossing leader election: (1-p)/(p*log(1/p)), fluctuations aside."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    return (1.0 - p) / (p * math.log(1.0 / p))


def log_grid(n_min: int, n_max: int, points_per_decade: int = 64) -> np.ndarray:
    """Distinct integers log-spaced between n_min and n_max inclusive."""
    if not 1 <= n_min <= n_max:
        raise ValueError("need 1 <= n_min <= n_max")
    if points_per_decade < 1:
        raise ValueError("points_per_decade must be positive")
    decades = math.log10(n_max / n_min)
    count = max(2, int(round(decades * points_per_decade)) + 1)
    grid = np.geomspace(n_min, n_max, count)
    return np.unique(np.rint(grid).astype(np.int64))


def local_maxima(values: np.ndarray) -> np.ndarray:
    """Indices of strict interior local maxima of a sequence."""
    v = np.asarray(values)
    idx = np.nonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:]))[0] + 1
    return idx
