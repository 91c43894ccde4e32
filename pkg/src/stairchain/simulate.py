"""Monte Carlo oracles and a discrete-event multi-node network simulation.

Contention trials draw 64-bit hash surrogates against down-shifted call
values, which preserves every acceptance probability to within 2**-64.
Randomness is derived per fixed-size chunk of trials from the master seed,
so results are reproducible and independent of execution order.
"""
from __future__ import annotations

import heapq
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .analytics import Scheme
from .chain import Block, Variant, hash_block, new_chain, validate_regular_implicit
from .params import ProtocolParams, call_schedule, call_value_at

__all__ = [
    "SimConfig",
    "EmpiricalDistribution",
    "NetworkSimReport",
    "u64_thresholds",
    "seeded_generators",
    "simulate_contention_explicit",
    "simulate_contention_implicit",
    "simulate_leader_election",
    "simulate_network",
]

_U64_MAX = (1 << 64) - 1
# Draws per chunk; fixed so the chunk layout, and with it the stream of
# random numbers, depends only on (trials, n).
_CHUNK_BUDGET = 1 << 22


@dataclass(frozen=True, slots=True)
class SimConfig:
    """One contention experiment: n contenders, repeated `trials` times."""

    params: ProtocolParams
    n: int
    trials: int
    master_seed: int
    scheme: Scheme

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.n <= self.params.N:
            raise ValueError("n must be in [0, N]")
        if not 0 <= self.master_seed < 1 << 64:
            raise ValueError("master_seed must fit in 64 bits")


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Occurrence counts of the simultaneous-mining count m."""

    counts: dict[int, int]
    trials: int

    def __post_init__(self) -> None:
        if sum(self.counts.values()) != self.trials:
            raise ValueError("counts must sum to trials")

    def mean(self) -> float:
        return sum(m * c for m, c in self.counts.items()) / self.trials

    def stderr(self) -> float:
        if self.trials < 2:
            return 0.0
        mu = self.mean()
        var = sum(c * (m - mu) ** 2 for m, c in self.counts.items()) / (self.trials - 1)
        return math.sqrt(var / self.trials)

    def tail(self, m: int) -> float:
        """Empirical P(M > m)."""
        return sum(c for mm, c in self.counts.items() if mm > m) / self.trials

    def max_m(self) -> int:
        return max(self.counts)

    @staticmethod
    def merge(parts: list["EmpiricalDistribution"]) -> "EmpiricalDistribution":
        total: Counter[int] = Counter()
        trials = 0
        for part in parts:
            total.update(part.counts)
            trials += part.trials
        return EmpiricalDistribution(counts=dict(total), trials=trials)


def u64_thresholds(params: ProtocolParams) -> np.ndarray:
    """Call values rescaled to 64-bit acceptance thresholds.

    Exact when H <= 64; for wider hashes the induced probability error is
    below 2**-64 per draw.
    """
    shifted = []
    for value in call_schedule(params).values:
        if params.H > 64:
            shifted.append(value >> (params.H - 64))
        elif params.H == 64:
            shifted.append(value)
        else:
            shifted.append(((value + 1) << (64 - params.H)) - 1)
    return np.array(shifted, dtype=np.uint64)


def seeded_generators(master_seed: int, count: int) -> list[np.random.Generator]:
    """Independent deterministic streams, one per chunk of work."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(master_seed).spawn(count)]


def _chunk_ranges(trials: int, n: int) -> list[tuple[int, int]]:
    size = max(1, _CHUNK_BUDGET // max(n, 1))
    return [(lo, min(lo + size, trials)) for lo in range(0, trials, size)]


def simulate_contention_explicit(config: SimConfig) -> EmpiricalDistribution:
    """Trials of the explicit scheme.

    Every slot re-draws all contender hashes (each empty block changes the
    previous-hash every candidate builds on); the trial ends at the first
    slot where anyone clears the threshold, recording how many did.
    """
    if config.scheme is not Scheme.EXPLICIT:
        raise ValueError("config.scheme must be EXPLICIT")
    if config.n == 0:
        return EmpiricalDistribution(counts={0: config.trials}, trials=config.trials)
    thresholds = u64_thresholds(config.params)
    ranges = _chunk_ranges(config.trials, config.n)
    rngs = seeded_generators(config.master_seed, len(ranges))
    counts: Counter[int] = Counter()
    for rng, (lo, hi) in zip(rngs, ranges):
        remaining = hi - lo
        results = np.zeros(remaining, dtype=np.int64)
        active = np.arange(remaining)
        for level in range(config.params.k + 1):
            draws = rng.integers(0, _U64_MAX, size=(active.size, config.n),
                                 dtype=np.uint64, endpoint=True)
            passed = (draws <= thresholds[level]).sum(axis=1)
            done = passed > 0
            results[active[done]] = passed[done]
            active = active[~done]
            if active.size == 0:
                break
        # the top threshold admits everything, so no trial is left undone
        values, occurrences = np.unique(results, return_counts=True)
        counts.update(dict(zip(values.tolist(), occurrences.tolist())))
    return EmpiricalDistribution(counts=dict(counts), trials=config.trials)


def simulate_contention_implicit(config: SimConfig) -> EmpiricalDistribution:
    """Trials of the implicit scheme.

    Each contender keeps a single hash for the whole contest; its slot is
    the first whose threshold admits it, and m counts the contenders tied
    at the earliest occupied slot.
    """
    if config.scheme is not Scheme.IMPLICIT:
        raise ValueError("config.scheme must be IMPLICIT")
    if config.n == 0:
        return EmpiricalDistribution(counts={0: config.trials}, trials=config.trials)
    thresholds = u64_thresholds(config.params)
    ranges = _chunk_ranges(config.trials, config.n)
    rngs = seeded_generators(config.master_seed, len(ranges))
    counts: Counter[int] = Counter()
    for rng, (lo, hi) in zip(rngs, ranges):
        remaining = hi - lo
        draws = rng.integers(0, _U64_MAX, size=(remaining, config.n),
                             dtype=np.uint64, endpoint=True)
        slots = np.searchsorted(thresholds, draws.ravel(), side="left").reshape(remaining, config.n)
        first = slots.min(axis=1)
        mined = (slots == first[:, None]).sum(axis=1)
        values, occurrences = np.unique(mined, return_counts=True)
        counts.update(dict(zip(values.tolist(), occurrences.tolist())))
    return EmpiricalDistribution(counts=dict(counts), trials=config.trials)


def simulate_leader_election(p: float, n: int, trials: int, seed: int) -> tuple[float, float]:
    """Coin-tossing leader election.

    Starting from n contenders, each round keeps every contender with
    probability p; rounds are indexed from 0 and the game ends when the set
    empties.  Returns the mean size of the last non-empty survivor set and
    the mean index of the round that held it.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be at least 1")
    rng = np.random.default_rng(seed)
    current = np.full(trials, n, dtype=np.int64)
    last_size = np.full(trials, n, dtype=np.int64)
    last_round = np.zeros(trials, dtype=np.int64)
    round_index = 0
    while True:
        alive = np.nonzero(current > 0)[0]
        if alive.size == 0:
            break
        last_size[alive] = current[alive]
        last_round[alive] = round_index
        current[alive] = rng.binomial(current[alive], p)
        round_index += 1
    return float(last_size.mean()), float(last_round.mean())


class _Candidate:
    """A miner's pending regular block; rebuilt whenever its parent goes stale."""

    __slots__ = ("transactions", "block", "created_local")

    def __init__(self, transactions: tuple[int, ...], created_local: int) -> None:
        self.transactions = transactions
        self.block: Block | None = None
        self.created_local = created_local


class _Replica:
    """One node's view of the chain: last accepted full block plus height.

    Fork choice is longest-chain, first seen wins ties; it lives here, while
    block admission is delegated to the slot-gated validator through a
    context chain whose full-block head mirrors this view.
    """

    __slots__ = ("head_hash", "head_time", "height", "context")

    def __init__(self, params: ProtocolParams, mgt: int) -> None:
        self.context = new_chain(params, Variant.IMPLICIT, mgt)
        self.head_hash = self.context.last_full_hash
        self.head_time = 0
        self.height = 0

    def verdict(self, block: Block, now: int):
        self.context.last_full_hash = self.head_hash
        self.context.last_full_block_time = self.head_time
        return validate_regular_implicit(self.context, block, now)

    def advance(self, block_hash: int, date: int, height: int) -> None:
        self.head_hash = block_hash
        self.head_time = date
        self.height = height


@dataclass(frozen=True)
class NetworkSimReport:
    """Outcome of one discrete-event network run.

    A fork is a pair of blocks minted on the same parent; re-convergence is
    by longest chain, so forks stay transient races.  ``per_node_accepted``
    counts block events a node took into its replica, minted or adopted.
    ``max_inter_block_slots`` is the largest number of whole slots any
    eventually-accepted candidate spent pending under the head it extended;
    liveness demands it never exceed k, and ``liveness_violations`` counts
    breaches.
    """

    node_count: int
    duration: int
    mgt: int
    clock_drift_bound: float
    latency: float
    slot_gating: bool
    blocks_accepted: int
    forks_observed: int
    max_inter_block_slots: int
    liveness_violations: int
    distinct_heads: int
    per_node_accepted: tuple[int, ...]

    def fork_rate(self) -> float:
        return self.forks_observed / max(1, self.blocks_accepted)

    def to_text(self) -> str:
        lines = [
            f"node_count={self.node_count}",
            f"duration={self.duration}",
            f"mgt={self.mgt}",
            f"clock_drift_bound={self.clock_drift_bound:.12g}",
            f"latency={self.latency:.12g}",
            f"slot_gating={int(self.slot_gating)}",
            f"blocks_accepted={self.blocks_accepted}",
            f"forks_observed={self.forks_observed}",
            f"fork_rate={self.fork_rate():.12g}",
            f"max_inter_block_slots={self.max_inter_block_slots}",
            f"liveness_violations={self.liveness_violations}",
            f"distinct_heads={self.distinct_heads}",
        ]
        lines.extend(
            f"accepted_node_{i}={count}" for i, count in enumerate(self.per_node_accepted)
        )
        return "\n".join(lines) + "\n"


def simulate_network(
    params: ProtocolParams,
    node_count: int,
    candidate_rate: float,
    mgt: int,
    clock_drift_bound: float,
    duration: int,
    seed: int,
    latency: float = 0.0,
    slot_gating: bool = True,
) -> NetworkSimReport:
    """Implicit-variant protocol on a drifting multi-node network.

    Every node keeps a replica, a clock offset and one working candidate.
    Miners refresh the candidate at a Poisson rate, submit it under the
    slot-gated validator and retry a discarded candidate at the next slot
    boundary; minted blocks reach peers after `latency` seconds and
    replicas follow the longest chain.  With slot_gating False every
    candidate is minted on creation (no MGT pacing, no hash gate); that
    run is the control arm for fork-rate comparisons.
    """
    if node_count < 1:
        raise ValueError("node_count must be at least 1")
    if clock_drift_bound < 0 or latency < 0 or candidate_rate < 0:
        raise ValueError("rates, drift and latency must be non-negative")
    if mgt < 1 or duration < 0:
        raise ValueError("mgt must be positive and duration non-negative")
    k = params.k
    rng = np.random.default_rng(seed)
    drifts = rng.uniform(-clock_drift_bound, clock_drift_bound, size=node_count)
    replicas = [_Replica(params, mgt) for _ in range(node_count)]
    # One working candidate per node; a fresh creation replaces it.
    pending: list[_Candidate | None] = [None] * node_count
    minted_children: dict[int, set[int]] = {}
    per_node_accepted = [0] * node_count
    blocks_accepted = 0
    max_inter_block_slots = 0
    liveness_violations = 0

    sequence = itertools.count()
    # ties break by (node id, event seq); seq is unique so payloads never compare
    queue: list[tuple[float, int, int, str, object]] = []

    def push(time: float, kind: str, node: int, payload: object) -> None:
        heapq.heappush(queue, (time, node, next(sequence), kind, payload))

    def local_clock(node: int, true_time: float) -> int:
        # POSIX seconds; a negative drift at startup cannot predate epoch
        return max(0, int(true_time + drifts[node]))

    def random_transactions() -> tuple[int, ...]:
        ids = rng.integers(0, _U64_MAX, size=int(rng.integers(1, 4)), dtype=np.uint64)
        return tuple(sorted(int(v) for v in set(ids.tolist()))) or (1,)

    if candidate_rate > 0:
        for node in range(node_count):
            push(rng.exponential(1.0 / candidate_rate), "create", node, None)

    def submit(node: int, candidate: _Candidate, true_time: float) -> None:
        nonlocal blocks_accepted, max_inter_block_slots, liveness_violations
        replica = replicas[node]
        now = local_clock(node, true_time)
        if candidate.block is None or candidate.block.prev_hash != replica.head_hash:
            # Stale or missing parent: restamp and rebuild on the current head.
            candidate.block = Block.regular(
                prev_hash=replica.head_hash,
                date=now,
                call_value=call_value_at(params, 0),
                transactions=candidate.transactions,
            )
            candidate.created_local = now
        block = candidate.block
        parent_time = replica.head_time
        slot = (now - parent_time) // mgt
        if slot_gating:
            accepted = replica.verdict(block, now).accepted
        else:
            accepted = block.prev_hash == replica.head_hash
        if accepted:
            block_hash = hash_block(block)
            height = replica.height + 1
            minted_children.setdefault(block.prev_hash, set()).add(block_hash)
            replica.advance(block_hash, block.date, height)
            pending[node] = None
            per_node_accepted[node] += 1
            blocks_accepted += 1
            # Whole slots the candidate sat through under the head it extended;
            # a candidate older than this head waited the full window.
            start_slot = max(1, (candidate.created_local - parent_time) // mgt)
            waited = max(int(slot - start_slot), 0)
            max_inter_block_slots = max(max_inter_block_slots, waited)
            if waited > k:
                liveness_violations += 1
            for peer in range(node_count):
                if peer != node:
                    push(true_time + latency, "deliver", peer, (block, block_hash, height))
        else:
            if slot >= k + 1 and block.prev_hash == replica.head_hash:
                # the gate is fully open from slot k+1 on, rejection here is a bug
                liveness_violations += 1
            retry_local = parent_time + (slot + 1) * mgt
            # nudge past the boundary so int(true+drift) cannot round back
            retry_true = retry_local - drifts[node] + 1e-6
            if retry_true <= duration:
                push(retry_true, "retry", node, candidate)

    while queue:
        true_time, node, _, kind, payload = heapq.heappop(queue)
        if true_time > duration:
            break
        if kind == "create":
            candidate = _Candidate(random_transactions(), local_clock(node, true_time))
            pending[node] = candidate
            submit(node, candidate, true_time)
            push(true_time + rng.exponential(1.0 / candidate_rate), "create", node, None)
        elif kind == "retry":
            if payload is pending[node]:
                submit(node, payload, true_time)
        elif kind == "deliver":
            block, block_hash, height = payload
            replica = replicas[node]
            if height > replica.height:
                replica.advance(block_hash, block.date, height)
                per_node_accepted[node] += 1

    forks = sum(max(0, len(children) - 1) for children in minted_children.values())
    return NetworkSimReport(
        node_count=node_count,
        duration=duration,
        mgt=mgt,
        clock_drift_bound=clock_drift_bound,
        latency=latency,
        slot_gating=slot_gating,
        blocks_accepted=blocks_accepted,
        forks_observed=forks,
        max_inter_block_slots=max_inter_block_slots,
        liveness_violations=liveness_violations,
        distinct_heads=len({r.head_hash for r in replicas}),
        per_node_accepted=tuple(per_node_accepted),
    )
