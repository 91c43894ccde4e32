"""Protocol constants and the call-value staircase.

A chain instance is parameterized by the staircase length ``k``, the
contender bound ``N`` and the hash width ``H``.  The acceptance
probabilities ``P_0 .. P_k`` rise geometrically from ``1/N`` to ``1`` and
each maps to an integer call value; a candidate block is mined only if its
hash, read as an ``H``-bit integer, is at or below the active call value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2

__all__ = [
    "ProtocolParams",
    "CallSchedule",
    "new_params",
    "call_value_at",
    "call_schedule",
    "probability_at",
    "to_config",
    "from_config",
]


@dataclass(frozen=True, slots=True)
class ProtocolParams:
    """Immutable protocol constants shared by every other module.

    Attributes:
        k: staircase length (number of call-value steps above the base).
        N: contender bound; ``P_0 = 1/N``.
        H: hash output width in bits.
        p: staircase ratio ``N**(-1/k)``.
        P: acceptance probabilities ``(P_0, ..., P_k)`` with ``P_k == 1``.
    """

    k: int
    N: int
    H: int
    p: float
    P: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class CallSchedule:
    """The integer call values ``C_0 .. C_k`` for one parameter set."""

    values: tuple[int, ...]


def new_params(k: int, N: int, H: int = 256) -> ProtocolParams:
    """Build and validate a parameter set.

    Args:
        k: staircase length, at least 1.
        N: contender bound, at least 2; powers of two give exact call values.
        H: hash width in bits, at least 8 and wide enough that 2**H >= N.

    Returns:
        A validated ProtocolParams.

    Raises:
        ValueError: on out-of-range arguments or a staircase that does not
            reproduce 1/N within 1e-12 relative error.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if N < 2:
        raise ValueError("N must be at least 2")
    if H < 8:
        raise ValueError("H must be at least 8 bits")
    if (1 << H) < N:
        raise ValueError("2**H must be at least N so that the base call value exists")
    try:
        p = float(N) ** (-1.0 / k)
    except OverflowError:
        p = math.exp(-math.log(N) / k)
    if not 0.0 < p < 1.0:
        raise ValueError("derived ratio p out of range, N too large for float analytics")
    # p**k must reproduce 1/N; |k*log(p) + log(N)| is the relative defect.
    defect = abs(k * math.log(p) + math.log(N))
    if defect > 1e-12:
        raise ValueError(f"N**(1/k) not representable accurately enough (defect {defect:.3e})")
    P = tuple(p ** (k - level) for level in range(k + 1))
    if P[0] <= 0.0:
        raise ValueError("P_0 underflows to zero in floating point")
    if any(a >= b for a, b in zip(P, P[1:])):
        raise ValueError("staircase probabilities are not strictly increasing")
    return ProtocolParams(k=k, N=N, H=H, p=p, P=P)


def call_value_at(params: ProtocolParams, level: int) -> int:
    """Exact integer call value ``C_level = floor(2**H * P_level) - 1``.

    Computed purely in integer arithmetic: a shift when the step is an
    exact power of two, otherwise a k-th integer root.  Never touches
    floating point, so the result is bit-exact even at H=256.
    """
    k, N, H = params.k, params.N, params.H
    if not 0 <= level <= k:
        raise ValueError(f"level must be in [0, {k}], got {level}")
    if N & (N - 1) == 0:
        s = N.bit_length() - 1
        if (s * level) % k == 0:
            return (1 << (H - s + s * level // k)) - 1
    # floor((2**(H*k) / N**(k-level))**(1/k)) via the k-th root of the
    # integer quotient; the floor commutes with the root.
    root, _ = gmpy2.iroot((1 << (H * k)) // N ** (k - level), k)
    return int(root) - 1


def call_schedule(params: ProtocolParams) -> CallSchedule:
    """All k+1 call values, strictly increasing, ending at 2**H - 1."""
    return CallSchedule(values=tuple(call_value_at(params, level) for level in range(params.k + 1)))


def probability_at(params: ProtocolParams, level: int) -> float:
    """Acceptance probability implied by the integer call value.

    Returns ``(C_level + 1) / 2**H``, which differs from ``P_level`` by
    less than ``2**(1 - H)`` and is exact when the step is a power of two.
    """
    return (call_value_at(params, level) + 1) / (1 << params.H)


def to_config(params: ProtocolParams) -> str:
    """Flat one-line text form, e.g. ``k=8 N=4294967296 H=256``."""
    return f"k={params.k} N={params.N} H={params.H}"


def from_config(text: str) -> ProtocolParams:
    """Parse the flat text form produced by :func:`to_config`."""
    fields: dict[str, int] = {}
    for token in text.split():
        key, sep, value = token.partition("=")
        if not sep or key not in ("k", "N", "H"):
            raise ValueError(f"unrecognized config token {token!r}")
        fields[key] = int(value)
    missing = {"k", "N", "H"} - fields.keys()
    if missing:
        raise ValueError(f"config is missing {sorted(missing)}")
    return new_params(fields["k"], fields["N"], fields["H"])
