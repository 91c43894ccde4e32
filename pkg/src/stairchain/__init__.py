"""Nonce-free blockchain mining on a call-value staircase.

The package bundles the protocol data model and validators, exact
performance analytics for the simultaneous-mining count, Monte Carlo and
discrete-event network simulators, the two-nurse adversarial mining game,
and a CSV-emitting experiment CLI.
"""
from .analytics import (
    BoundConstants,
    MiningDistribution,
    Scheme,
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
    survivor_set_mean,
    tail_bound,
    tail_from_pmf,
    upper_bound_explicit,
    upper_bound_implicit,
)
from .chain import (
    Block,
    BlockKind,
    ChainState,
    Reason,
    ValidationVerdict,
    Variant,
    block_from_line,
    block_to_line,
    gate_value,
    hash_block,
    make_empty_block,
    new_chain,
    next_empty_call_value,
    payload_digest_of,
    revalidate_chain,
    serialize_for_hash,
    validate_block,
    validate_empty_explicit,
    validate_empty_time_moderated,
    validate_regular_explicit,
    validate_regular_implicit,
    validate_regular_time_moderated,
)
from .nursing import (
    DrawMode,
    Method,
    NursingOutcome,
    amplification_factor,
    loss_asymptote,
    loss_probability_exact,
    loss_probability_simulated,
    win_run_lengths,
)
from .params import (
    CallSchedule,
    ProtocolParams,
    call_schedule,
    call_value_at,
    from_config,
    new_params,
    probability_at,
    to_config,
)
from .simulate import (
    EmpiricalDistribution,
    NetworkSimReport,
    SimConfig,
    seeded_generators,
    simulate_contention_explicit,
    simulate_contention_implicit,
    simulate_leader_election,
    simulate_network,
    u64_thresholds,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Block",
    "BlockKind",
    "BoundConstants",
    "CallSchedule",
    "ChainState",
    "DrawMode",
    "EmpiricalDistribution",
    "Method",
    "MiningDistribution",
    "NetworkSimReport",
    "NursingOutcome",
    "ProtocolParams",
    "Reason",
    "Scheme",
    "SimConfig",
    "ValidationVerdict",
    "Variant",
    "amplification_factor",
    "block_from_line",
    "block_to_line",
    "bound_constants",
    "call_schedule",
    "call_value_at",
    "distribution_explicit_closed",
    "distribution_explicit_recurrence",
    "distribution_implicit",
    "expected_mined_explicit",
    "expected_mined_implicit",
    "fourier_constant_A",
    "fourier_constant_B",
    "from_config",
    "gate_value",
    "hash_block",
    "local_maxima",
    "log_grid",
    "loss_asymptote",
    "loss_probability_exact",
    "loss_probability_simulated",
    "make_empty_block",
    "new_chain",
    "new_params",
    "next_empty_call_value",
    "payload_digest_of",
    "probability_at",
    "revalidate_chain",
    "seeded_generators",
    "serialize_for_hash",
    "simulate_contention_explicit",
    "simulate_contention_implicit",
    "simulate_leader_election",
    "simulate_network",
    "survivor_set_mean",
    "tail_bound",
    "tail_from_pmf",
    "to_config",
    "u64_thresholds",
    "upper_bound_explicit",
    "upper_bound_implicit",
    "validate_block",
    "validate_empty_explicit",
    "validate_empty_time_moderated",
    "validate_regular_explicit",
    "validate_regular_implicit",
    "validate_regular_time_moderated",
    "win_run_lengths",
]
