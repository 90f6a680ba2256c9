"""Domain types shared across the consensus stack.

Everything here is immutable value data. Time is simulated and measured in
seconds as a plain float.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

from .errors import ChainAppendError, ContractViolation

NodeId = int

GENESIS_PARENT = -1
# Genesis is minted by the harness, never by a leader.
GENESIS_LEADER = -1

INITIAL_TRUST = 1.2
INITIAL_TRUST_CORE = 0.6


class TxClass(enum.Enum):
    PRIORITY = "P"
    NORMAL = "N"


class BlockStatus(enum.Enum):
    PROPOSED = "proposed"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


@dataclass(frozen=True)
class Transaction:
    txid: int
    tx_class: TxClass
    fee: float
    arrival_time: float
    payload_tag: str = ""

    def __post_init__(self):
        if self.txid < 0:
            raise ContractViolation(f"txid must be non-negative, got {self.txid}")
        if self.fee < 0:
            raise ContractViolation(f"fee must be non-negative, got {self.fee}")
        if self.arrival_time < 0:
            raise ContractViolation(f"arrival_time must be non-negative, got {self.arrival_time}")

    @property
    def is_priority(self) -> bool:
        return self.tx_class is TxClass.PRIORITY

    @property
    def sort_key(self) -> tuple[float, int]:
        # arrival ties break by txid
        return (self.arrival_time, self.txid)


@dataclass(frozen=True)
class Block:
    height: int
    parent: int
    leader: NodeId
    created_at: float
    last_tx_time: float
    txs: tuple[Transaction, ...] = ()
    status: BlockStatus = BlockStatus.PROPOSED

    @property
    def is_genesis(self) -> bool:
        return self.height == 0 and self.parent == GENESIS_PARENT

    def with_status(self, status: BlockStatus) -> Block:
        return replace(self, status=status)


def genesis_block(created_at: float = 0.0) -> Block:
    return Block(
        height=0,
        parent=GENESIS_PARENT,
        leader=GENESIS_LEADER,
        created_at=created_at,
        last_tx_time=created_at,
        txs=(),
        status=BlockStatus.ACCEPTED,
    )


@dataclass(frozen=True)
class NodeProfile:
    """Per-node state read by leader election and peer review.

    ``trust`` is the raw trustworthiness on the [0, 2] scale; ``trust_core``
    is the history term that the next trust update blends with the fresh
    score (range [0, 1]).
    """

    node: NodeId
    trust: float = INITIAL_TRUST
    peers: int = 0
    efficiency: float = 0.0
    voteouts: int = 0
    p_fa: float = 0.1
    p_md: float = 0.1
    latency: float = 0.0
    trust_core: float = INITIAL_TRUST_CORE

    def __post_init__(self):
        if self.node < 0:
            raise ContractViolation(f"node id must be non-negative, got {self.node}")
        if not 0.0 <= self.trust <= 2.0:
            raise ContractViolation(f"trust {self.trust} outside [0, 2]")
        if not 0.0 <= self.trust_core <= 1.0:
            raise ContractViolation(f"trust_core {self.trust_core} outside [0, 1]")
        if self.peers < 0 or self.voteouts < 0:
            raise ContractViolation("peers and voteouts must be non-negative")
        for name in ("p_fa", "p_md"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ContractViolation(f"{name}={value} outside [0, 1]")
        if self.p_fa + self.p_md >= 1.0:
            raise ContractViolation(
                f"node {self.node}: p_fa + p_md = {self.p_fa + self.p_md} must be < 1"
            )
        if self.latency < 0:
            raise ContractViolation(f"latency must be >= 0, got {self.latency}")

    @property
    def normalized_trust(self) -> float:
        return self.trust / 2.0

    @property
    def trustworthy(self) -> bool:
        return self.normalized_trust > 0.5


@dataclass(frozen=True)
class ChainState:
    blocks: tuple[Block, ...] = field(default_factory=tuple)

    @property
    def tip_height(self) -> int:
        """Height of the last block, or -1 for an empty chain."""
        return self.blocks[-1].height if self.blocks else -1

    def __len__(self) -> int:
        return len(self.blocks)


def validate_block(block: Block, capacity: int) -> list[str]:
    """Return the names of every block invariant that ``block`` violates.

    An empty list means the block is well formed. The genesis block is
    exempt from the non-emptiness rule.
    """
    violations: list[str] = []
    txs = block.txs
    if not txs and not block.is_genesis:
        violations.append("empty-block")
    if len(txs) > capacity:
        violations.append("capacity")
    seen_normal = False
    for tx in txs:
        if tx.is_priority and seen_normal:
            violations.append("priority-order")
            break
        seen_normal = seen_normal or not tx.is_priority
    normals = [tx.arrival_time for tx in txs if not tx.is_priority]
    if any(later < earlier for earlier, later in zip(normals, normals[1:])):
        violations.append("normal-order")
    if block.last_tx_time > block.created_at:
        violations.append("time-order")
    if txs and block.last_tx_time != max(tx.arrival_time for tx in txs):
        violations.append("last-tx-time")
    if len({tx.txid for tx in txs}) != len(txs):
        violations.append("duplicate-tx")
    expected_parent = GENESIS_PARENT if block.height == 0 else block.height - 1
    if block.parent != expected_parent:
        violations.append("parent-link")
    return violations


def compute_efficiency(bct: float, tau: float) -> float:
    """Leader efficiency E: lag between block creation and its last transaction."""
    if tau > bct:
        raise ContractViolation(f"clock inversion: tau={tau} > bct={bct}")
    return bct - tau


def chain_append(chain: ChainState, block: Block) -> ChainState:
    if block.status is not BlockStatus.ACCEPTED:
        raise ChainAppendError(f"block at height {block.height} is {block.status.value}, not accepted")
    expected = chain.tip_height + 1
    if block.height != expected:
        kind = "gap" if block.height > expected else "stale height"
        raise ChainAppendError(f"{kind}: expected height {expected}, got {block.height}")
    return ChainState(chain.blocks + (block,))


def make_block(
    txs: Sequence[Transaction], leader: NodeId, height: int, now: float
) -> Block:
    """Wrap already-ordered transactions into a proposed block."""
    last = max((tx.arrival_time for tx in txs), default=now)
    return Block(
        height=height,
        parent=height - 1 if height > 0 else GENESIS_PARENT,
        leader=leader,
        created_at=now,
        last_tx_time=last,
        txs=tuple(txs),
        status=BlockStatus.PROPOSED,
    )
