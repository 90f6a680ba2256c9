"""Post-hoc checks of latency and liveness properties over a finished run."""
from __future__ import annotations

from ..core import TxClass
from ..engine import EventKind
from .config import ScenarioConfig
from .simulator import SimResult, proposed_blocks


def max_verification_time(cfg: ScenarioConfig) -> float:
    """Longest possible wait for the last follower report on a block."""
    extra = max((b.latency for b in cfg.behaviors.values()), default=0.0)
    return cfg.network_latency[1] + extra


def normal_wait_bound(cfg: ScenarioConfig) -> float:
    """w, plus one verification round, plus one build interval.

    A busy leader builds at most once per verification round, so the build
    interval is bounded by the verification time as well.
    """
    v = max_verification_time(cfg)
    return cfg.w + v + v


def priority_zero_wait_violations(result: SimResult) -> list[int]:
    """Priority txids missing from the first block proposed at or after their arrival.

    Transactions that arrive after the last proposal are not judged.
    """
    proposals = proposed_blocks(result.trace)
    bad = []
    for rec in result.metrics.transactions:
        if rec.tx_class != TxClass.PRIORITY.value:
            continue
        first = next((ids for t, ids in proposals if t >= rec.arrival), None)
        if first is not None and rec.txid not in first:
            bad.append(rec.txid)
    return bad


def normal_wait_violations(result: SimResult) -> list[tuple[int, float]]:
    """Normal transactions that waited in the pool longer than the bound.

    Waiting ends at the first proposal containing the transaction, or at
    the end of the run for one never proposed.
    """
    bound = normal_wait_bound(result.config)
    end = float(result.metrics.summary["end_time"])
    bad = []
    for rec in result.metrics.transactions:
        if rec.tx_class != TxClass.NORMAL.value:
            continue
        until = rec.first_proposed_at if rec.first_proposed_at is not None else end
        if until - rec.arrival > bound:
            bad.append((rec.txid, until - rec.arrival))
    return bad


def longest_gap_between_accepts(result: SimResult) -> float:
    times = [0.0] + [ev.time for ev in result.trace if ev.kind is EventKind.BLOCK_ACCEPTED]
    times.append(float(result.metrics.summary["end_time"]))
    return max(b - a for a, b in zip(times, times[1:]))
