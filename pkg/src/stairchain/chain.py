"""Block model, bit-exact serialization and hashing, and chain validation.

Three protocol variants share the block format:

* ``EXPLICIT``: a central entity mines physical empty blocks whenever no
  candidate beats the current call value; no timing rules.
* ``TIME_MODERATED``: the same, but consecutive blocks must be at least one
  Minimal Gap Time (MGT) apart by both the stamped date and the validating
  server's clock.
* ``IMPLICIT``: empty blocks are never materialized.  The number of whole
  MGTs elapsed since the last full block plays the role of the empty-block
  count, and a regular block in slot ``s`` (1-based) is gated by the call
  value of step ``s - 1``.  Its previous-hash field points at the last
  full block.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

from .params import ProtocolParams, call_value_at

__all__ = [
    "BlockKind",
    "Variant",
    "Reason",
    "Block",
    "ValidationVerdict",
    "ChainState",
    "payload_digest_of",
    "serialize_for_hash",
    "hash_block",
    "gate_value",
    "new_chain",
    "make_empty_block",
    "next_empty_call_value",
    "validate_regular_explicit",
    "validate_regular_time_moderated",
    "validate_empty_explicit",
    "validate_empty_time_moderated",
    "validate_regular_implicit",
    "validate_block",
    "revalidate_chain",
    "block_to_line",
    "block_from_line",
]

_HASH_BYTES = 32
_DATE_BYTES = 8


class BlockKind(Enum):
    EMPTY = 0
    REGULAR = 1


class Variant(Enum):
    EXPLICIT = "explicit"
    TIME_MODERATED = "time_moderated"
    IMPLICIT = "implicit"


class Reason(Enum):
    OK = "ok"
    HASH_ABOVE_CALL = "hash_above_call"
    TOO_EARLY = "too_early"
    BAD_SLOT_THRESHOLD = "bad_slot_threshold"
    BAD_PREV_HASH = "bad_prev_hash"
    UNORDERED_TRANSACTIONS = "unordered_transactions"
    BAD_CALL_FIELD = "bad_call_field"
    STALE_DATE = "stale_date"


@dataclass(frozen=True, slots=True)
class ValidationVerdict:
    accepted: bool
    reason: Reason

    def __post_init__(self) -> None:
        if self.accepted != (self.reason is Reason.OK):
            raise ValueError("accepted must hold exactly when reason is OK")


_ACCEPT = ValidationVerdict(True, Reason.OK)


def _reject(reason: Reason) -> ValidationVerdict:
    return ValidationVerdict(False, reason)


def payload_digest_of(transactions: tuple[int, ...]) -> int:
    """SHA-256 digest of the ordered transaction-id list, each id 32 bytes."""
    h = hashlib.sha256()
    for tx in transactions:
        h.update(tx.to_bytes(_HASH_BYTES, "big"))
    return int.from_bytes(h.digest(), "big")


@dataclass(frozen=True, slots=True)
class Block:
    """One chain entry.

    Regular blocks carry a payload digest over their ordered transaction-id
    list and always stamp the base call value.  Empty blocks carry no
    payload and exist solely to raise the call value one staircase step;
    their hash deliberately excludes the date so that the empty-block hash
    sequence is deterministic.

    ``transactions`` may be None for a regular block reconstructed from its
    digest alone (e.g. parsed from the line format); ordering checks are
    then skipped.
    """

    kind: BlockKind
    prev_hash: int
    date: int
    call_value: int
    payload_digest: int | None = None
    transactions: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind is BlockKind.EMPTY:
            if self.payload_digest is not None or self.transactions:
                raise ValueError("empty blocks carry no payload")
        else:
            if self.transactions is not None and self.payload_digest is None:
                object.__setattr__(self, "payload_digest", payload_digest_of(self.transactions))
            if self.payload_digest is None:
                raise ValueError("regular blocks need transactions or a payload digest")

    @classmethod
    def regular(
        cls,
        prev_hash: int,
        date: int,
        call_value: int,
        transactions: tuple[int, ...] | None = None,
        payload_digest: int | None = None,
    ) -> "Block":
        return cls(BlockKind.REGULAR, prev_hash, date, call_value,
                   payload_digest=payload_digest, transactions=transactions)

    @classmethod
    def empty(cls, prev_hash: int, date: int, call_value: int) -> "Block":
        return cls(BlockKind.EMPTY, prev_hash, date, call_value)


def serialize_for_hash(block: Block) -> bytes:
    """Deterministic byte layout fed to the block hash.

    prev_hash (32) | kind (1) | date (8, regular only) |
    payload_digest (32, regular only) | call_value (32).
    Empty blocks omit the date so re-stamping them cannot change the hash.
    """
    parts = [block.prev_hash.to_bytes(_HASH_BYTES, "big"), bytes([block.kind.value])]
    if block.kind is BlockKind.REGULAR:
        parts.append(block.date.to_bytes(_DATE_BYTES, "big"))
        assert block.payload_digest is not None
        parts.append(block.payload_digest.to_bytes(_HASH_BYTES, "big"))
    parts.append(block.call_value.to_bytes(_HASH_BYTES, "big"))
    return b"".join(parts)


def hash_block(block: Block) -> int:
    """SHA-256 of the serialized block, as a 256-bit integer."""
    return int.from_bytes(hashlib.sha256(serialize_for_hash(block)).digest(), "big")


def gate_value(block: Block, params: ProtocolParams) -> int:
    """The H-bit value compared against call values.

    Top H bits of the block hash, so acceptance probability against C is
    exactly (C+1)/2^H for any H <= 256.
    """
    return hash_block(block) >> (8 * _HASH_BYTES - params.H)


@dataclass
class ChainState:
    """Append-only validated block sequence for one variant.

    Single-writer; validators are pure functions of (state, block, time).
    ``empty_count_since_full`` stays in [0, k]: it resets to 0 on a regular
    block and wraps k -> 1 when the call sequence restarts.
    """

    params: ProtocolParams
    variant: Variant
    mgt: int
    blocks: list[Block]
    head_hash: int
    last_full_hash: int
    last_full_block_time: int
    empty_count_since_full: int

    @property
    def head(self) -> Block:
        return self.blocks[-1]

    def append_block(self, block: Block) -> None:
        """Record an already-validated block and update the counters."""
        self.blocks.append(block)
        self.head_hash = hash_block(block)
        if block.kind is BlockKind.REGULAR:
            self.last_full_hash = self.head_hash
            self.last_full_block_time = block.date
            self.empty_count_since_full = 0
        else:
            self.empty_count_since_full = self.empty_count_since_full % self.params.k + 1

    def extend(self, block: Block, now: int | None = None) -> ValidationVerdict:
        """Validate against this chain and append on acceptance."""
        verdict = validate_block(self, block, now)
        if verdict.accepted:
            self.append_block(block)
        return verdict


def new_chain(params: ProtocolParams, variant: Variant, mgt: int = 60) -> ChainState:
    """Fresh chain seeded with the genesis block.

    Genesis is an empty block with all-zero previous hash, date 0 and the
    base call value, so the first regular block is gated by C_0.
    """
    if params.H > 8 * _HASH_BYTES:
        raise ValueError("chain validation is tied to SHA-256, so H must be <= 256")
    genesis = Block.empty(prev_hash=0, date=0, call_value=call_value_at(params, 0))
    g_hash = hash_block(genesis)
    return ChainState(
        params=params,
        variant=variant,
        mgt=mgt,
        blocks=[genesis],
        head_hash=g_hash,
        last_full_hash=g_hash,
        last_full_block_time=0,
        empty_count_since_full=0,
    )


def next_empty_call_value(chain: ChainState) -> int:
    """Call value the next empty block must stamp; restarts at C_1 after C_k."""
    step = chain.empty_count_since_full % chain.params.k + 1
    return call_value_at(chain.params, step)


def make_empty_block(chain: ChainState, date: int | None = None) -> Block:
    """Construct the only empty block this chain can accept next."""
    if date is None:
        date = chain.head.date + (chain.mgt if chain.variant is Variant.TIME_MODERATED else 0)
    return Block.empty(prev_hash=chain.head_hash, date=date, call_value=next_empty_call_value(chain))


def _check_regular_wellformed(chain: ChainState, block: Block) -> ValidationVerdict:
    """Checks shared by every variant: payload ordering and the call field."""
    if block.transactions is not None:
        txs = block.transactions
        if not txs or any(a >= b for a, b in zip(txs, txs[1:])):
            return _reject(Reason.UNORDERED_TRANSACTIONS)
    if block.call_value != call_value_at(chain.params, 0):
        return _reject(Reason.BAD_CALL_FIELD)
    return _ACCEPT


def validate_regular_explicit(chain: ChainState, block: Block) -> ValidationVerdict:
    """Accept iff the block links to the head, is well formed, and its hash
    is at or below the head's call value."""
    if block.prev_hash != chain.head_hash:
        return _reject(Reason.BAD_PREV_HASH)
    wf = _check_regular_wellformed(chain, block)
    if not wf.accepted:
        return wf
    if gate_value(block, chain.params) > chain.head.call_value:
        return _reject(Reason.HASH_ABOVE_CALL)
    return _ACCEPT


def validate_regular_time_moderated(
    chain: ChainState, block: Block, server_local_time: int
) -> ValidationVerdict:
    """Explicit-variant rules plus the MGT pacing of both clocks."""
    timing = _check_mgt(chain, block, server_local_time)
    if not timing.accepted:
        return timing
    return validate_regular_explicit(chain, block)


def _check_mgt(chain: ChainState, block: Block, server_local_time: int) -> ValidationVerdict:
    # A short stamped gap is unfixable (discard); a short server-side gap
    # merely means the block arrived early (delay and retry).
    if block.date - chain.head.date < chain.mgt:
        return _reject(Reason.STALE_DATE)
    if server_local_time - chain.head.date < chain.mgt:
        return _reject(Reason.TOO_EARLY)
    return _ACCEPT


def validate_empty_explicit(chain: ChainState, block: Block) -> ValidationVerdict:
    """Empty block for the untimed variant: link plus the staircase step."""
    if block.prev_hash != chain.head_hash:
        return _reject(Reason.BAD_PREV_HASH)
    if block.call_value != next_empty_call_value(chain):
        return _reject(Reason.BAD_CALL_FIELD)
    return _ACCEPT


def validate_empty_time_moderated(
    chain: ChainState, block: Block, server_local_time: int
) -> ValidationVerdict:
    """Empty block under MGT pacing.

    Accept iff the stamped date and the server clock both show at least one
    MGT since the previous block, the block links to the head, and it
    carries the next staircase call value (C_1 again after C_k).
    """
    timing = _check_mgt(chain, block, server_local_time)
    if not timing.accepted:
        return timing
    return validate_empty_explicit(chain, block)


def validate_regular_implicit(chain: ChainState, block: Block, now: int) -> ValidationVerdict:
    """Slot-gated acceptance against the last full block.

    With ``slot = (now - last_full_block_time) // mgt``: slot 0 is too
    early; slots 1..k gate the hash with call value C_{slot-1}; from slot
    k+1 on the gate is C_k, which admits every hash.
    """
    slot = (now - chain.last_full_block_time) // chain.mgt
    if slot < 1:
        return _reject(Reason.TOO_EARLY)
    if block.prev_hash != chain.last_full_hash:
        return _reject(Reason.BAD_PREV_HASH)
    wf = _check_regular_wellformed(chain, block)
    if not wf.accepted:
        return wf
    gate_step = min(slot - 1, chain.params.k)
    if gate_value(block, chain.params) > call_value_at(chain.params, gate_step):
        return _reject(Reason.BAD_SLOT_THRESHOLD)
    return _ACCEPT


def validate_block(chain: ChainState, block: Block, now: int | None = None) -> ValidationVerdict:
    """Variant dispatch. ``now`` is the validating server's clock; it
    defaults to the block's own stamp, which suits single-clock replays."""
    if now is None:
        now = block.date
    if chain.variant is Variant.EXPLICIT:
        if block.kind is BlockKind.REGULAR:
            return validate_regular_explicit(chain, block)
        return validate_empty_explicit(chain, block)
    if chain.variant is Variant.TIME_MODERATED:
        if block.kind is BlockKind.REGULAR:
            return validate_regular_time_moderated(chain, block, now)
        return validate_empty_time_moderated(chain, block, now)
    if block.kind is not BlockKind.REGULAR:
        raise ValueError("the implicit variant has no physical empty blocks")
    return validate_regular_implicit(chain, block, now)


def revalidate_chain(chain: ChainState) -> bool:
    """Replay every block from genesis through the validators.

    Returns True iff each block is accepted again, using its own date as
    the server clock.  Integrity check for constructed chains.
    """
    replay = new_chain(chain.params, chain.variant, chain.mgt)
    for block in chain.blocks[1:]:
        if not replay.extend(block, now=block.date).accepted:
            return False
    return replay.head_hash == chain.head_hash


def block_to_line(block: Block) -> str:
    """One-line hex form: kind, date, prev_hash, payload_digest, call_value."""
    digest = block.payload_digest if block.payload_digest is not None else 0
    return " ".join(
        (
            format(block.kind.value, "02x"),
            format(block.date, "016x"),
            format(block.prev_hash, "064x"),
            format(digest, "064x"),
            format(block.call_value, "064x"),
        )
    )


def block_from_line(line: str) -> Block:
    """Inverse of :func:`block_to_line`; regular blocks come back without
    their transaction list, digest only."""
    fields = line.split()
    if len(fields) != 5:
        raise ValueError(f"expected 5 hex fields, got {len(fields)}")
    kind_value, date, prev_hash, digest, call_value = (int(f, 16) for f in fields)
    kind = BlockKind(kind_value)
    if kind is BlockKind.EMPTY:
        return Block.empty(prev_hash=prev_hash, date=date, call_value=call_value)
    return Block.regular(prev_hash=prev_hash, date=date, call_value=call_value, payload_digest=digest)
