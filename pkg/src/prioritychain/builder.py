"""Dynamic block creation: when to cut a block and what goes in it."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import Block, NodeId, make_block
from .errors import ContractViolation, EmptyPoolError
from .mempool import Mempool


class Decision(enum.Enum):
    CREATE_NOW = "create"
    WAIT = "wait"


@dataclass(frozen=True)
class BuilderConfig:
    m: int = 10
    w: float = 5.0

    def __post_init__(self):
        if self.m < 1:
            raise ContractViolation(f"block capacity m must be >= 1, got {self.m}")
        if not self.w > 0:
            raise ContractViolation(f"max waiting time w must be > 0, got {self.w}")


def should_create(p: int, n_t: int, t_c: float, cfg: BuilderConfig) -> Decision:
    if p < 0 or n_t < 0 or t_c < 0:
        raise ContractViolation("counts and waiting time must be non-negative")
    if p >= 1 or n_t >= cfg.m or t_c >= cfg.w:
        return Decision.CREATE_NOW
    return Decision.WAIT


def evaluate(pool: Mempool, now: float, cfg: BuilderConfig) -> Decision:
    p, n_t = pool.counts()
    return should_create(p, n_t, pool.current_wait(now), cfg)


def timeout_at(oldest_arrival: float, w: float) -> float:
    """Earliest float time ``t`` at which ``t - oldest_arrival >= w`` holds.

    ``oldest_arrival + w`` alone can round to a point where the subtraction
    falls one ulp short of ``w``.
    """
    t = oldest_arrival + w
    while t - oldest_arrival < w:
        t = math.nextafter(t, math.inf)
    return t


def build(pool: Mempool, leader: NodeId, height: int, now: float, cfg: BuilderConfig) -> Block:
    """Drain the pool into a proposed block. Refuses to emit an empty block."""
    if not len(pool):
        raise EmptyPoolError("refusing to build an empty block")
    txs = pool.drain_for_block(cfg.m, now)
    return make_block(txs, leader, height, now)
