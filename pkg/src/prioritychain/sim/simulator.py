"""Deterministic discrete-event simulation of a consortium network.

One event heap keyed by ``(time, seq)`` drives everything: transaction
arrivals, block-creation timers, a lazy leader's delayed build, and the
moment the last follower report for a proposed block comes in. Elections
and block building are instantaneous. All randomness comes from
independent streams spawned from the scenario seed, so a run is a pure
function of its config.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .. import builder as bld
from ..core import (
    Block,
    ChainState,
    NodeId,
    NodeProfile,
    Transaction,
    TxClass,
    chain_append,
    compute_efficiency,
    genesis_block,
    make_block,
    validate_block,
)
from ..election import ElectionConfig, ElectionOutcome, default_candidate_count, run_election
from ..engine import (
    AppendBlock,
    BlockBuilt,
    Elected,
    EventKind,
    Halt,
    IncentiveLedger,
    LedgerEvent,
    Phase,
    RecordVoteOut,
    RequestReview,
    RequeueTxs,
    RoundState,
    RunElection,
    VerdictIn,
    distribute_incentives,
    incentives_event,
    step,
)
from ..errors import NoQuorumError
from ..gbdt import BoostedEnsemble
from ..mempool import Mempool
from ..peer_prediction import ACCEPT_SIGNAL, REJECT_SIGNAL, WorldPrior, review_round
from .config import BehaviorKind, ScenarioConfig
from .dataset import simulation_model
from .metrics import BlockRecord, MetricsRecord, TxRecord

_ARRIVAL, _TIMER, _LAZY_BUILD, _VERDICT = "arrival", "timer", "lazy-build", "verdict"


@dataclass
class SimResult:
    metrics: MetricsRecord
    trace: list[LedgerEvent]
    chain: ChainState
    profiles: list[NodeProfile]
    incentives: IncentiveLedger
    config: ScenarioConfig


def poisson_arrivals(rng: np.random.Generator, rate: float, horizon: float) -> list[float]:
    """Arrival times on [0, horizon) by inverting exponential gaps."""
    times: list[float] = []
    if rate <= 0:
        return times
    t = 0.0
    while True:
        t += -math.log1p(-rng.random()) / rate
        if t >= horizon:
            return times
        times.append(t)


@dataclass
class _Pending:
    block: Block
    latencies: dict[NodeId, float]
    quality: str


class Simulator:
    def __init__(self, cfg: ScenarioConfig, model: BoostedEnsemble | None = None):
        self.cfg = cfg
        self.model = model if model is not None else simulation_model(cfg.n_nodes)
        streams = np.random.SeedSequence(cfg.seed).spawn(4)
        self.rng_arrival, self.rng_fee, self.rng_latency, self.rng_review = (
            np.random.default_rng(s) for s in streams
        )
        self.builder_cfg = bld.BuilderConfig(m=cfg.m, w=cfg.w)
        self.election_cfg = ElectionConfig(
            n_candidates=cfg.n_candidates or default_candidate_count(cfg.n_nodes),
            b_max=cfg.b_max,
        )
        self.world = WorldPrior(cfg.p_work_good)
        self.profiles: dict[NodeId, NodeProfile] = {}
        for node in range(cfg.n_nodes):
            beh = cfg.behavior(node)
            self.profiles[node] = NodeProfile(
                node=node,
                peers=cfg.n_nodes - 1,
                p_fa=cfg.p_fa if beh.p_fa is None else beh.p_fa,
                p_md=cfg.p_md if beh.p_md is None else beh.p_md,
                latency=beh.latency,
            )
        self.pool = Mempool()
        self.chain = ChainState()
        self.state = RoundState()
        self.trace: list[LedgerEvent] = []
        self.metrics = MetricsRecord()
        self.heap: list = []
        self.seq = itertools.count()
        self.timers: set[float] = set()
        self.lazy_pending = False
        self.ready_time = 0.0
        self.pending: _Pending | None = None
        self.blocks_generated: dict[NodeId, int] = {n: 0 for n in range(cfg.n_nodes)}
        self.fees: dict[NodeId, float] = {n: 0.0 for n in range(cfg.n_nodes)}
        self.rounds_reviewed: dict[NodeId, int] = {n: 0 for n in range(cfg.n_nodes)}
        self.tx_records: dict[int, TxRecord] = {}
        self.block_records: list[BlockRecord] = []
        self.first_election = True
        self.halt_reason = "duration"

    # event plumbing

    def _push(self, time: float, kind: str, data=None) -> None:
        heapq.heappush(self.heap, (time, next(self.seq), kind, data))

    def _record(self, events) -> None:
        self.trace.extend(events)

    def _apply(self, event, now: float) -> None:
        self.state, events, commands = step(self.state, event, now)
        self._record(events)
        for cmd in commands:
            self._execute(cmd, now)

    # setup

    def _schedule_arrivals(self) -> None:
        cfg = self.cfg
        arrivals = [(t, TxClass.PRIORITY) for t in poisson_arrivals(self.rng_arrival, cfg.tx_rate_priority, cfg.duration)]
        arrivals += [(t, TxClass.NORMAL) for t in poisson_arrivals(self.rng_arrival, cfg.tx_rate_normal, cfg.duration)]
        arrivals.sort(key=lambda a: (a[0], a[1].value))
        lo, hi = cfg.fee_range
        fees = self.rng_fee.uniform(lo, hi, size=len(arrivals))
        for txid, ((t, cls), fee) in enumerate(zip(arrivals, fees)):
            tx = Transaction(txid, cls, float(fee), t)
            self._push(t, _ARRIVAL, tx)

    # commands from the state machine

    def _execute(self, cmd, now: float) -> None:
        if isinstance(cmd, RequestReview):
            self._start_review(cmd.block, now)
        elif isinstance(cmd, AppendBlock):
            self._append(cmd.block, now)
        elif isinstance(cmd, RequeueTxs):
            self.pool.requeue(cmd.txs, now)
        elif isinstance(cmd, RecordVoteOut):
            p = self.profiles[cmd.node]
            self.profiles[cmd.node] = replace(p, voteouts=p.voteouts + 1)
            self.metrics.voteouts += 1
        elif isinstance(cmd, RunElection):
            self._elect(now, cmd.voted_out, cmd.previous_leader, cmd.previous_candidates)

    def _elect(self, now, voted_out=False, previous_leader=None, previous_candidates=()) -> None:
        profiles = [self.profiles[n] for n in sorted(self.profiles)]
        outcome = run_election(
            profiles,
            self.election_cfg,
            self.model,
            self.pool.entropy_sample(),
            round_salt=self.state.term_index + 1,
            last_height=self.chain.tip_height,
            current_leader=previous_leader,
            voted_out=voted_out,
            previous_candidates=previous_candidates,
            blocks_generated=self.blocks_generated,
        )
        if self.first_election and self.cfg.initial_leader is not None:
            outcome = _force_leader(outcome, self.cfg.initial_leader)
        self.first_election = False
        self._apply(Elected(outcome), now)
        self.ready_time = now
        self.lazy_pending = False

    def _start_review(self, block: Block, now: float) -> None:
        lo, hi = self.cfg.network_latency
        lat = {}
        for node in sorted(self.profiles):
            if node == block.leader:
                continue
            lat[node] = float(self.rng_latency.uniform(lo, hi)) + self.profiles[node].latency
        self.pending = _Pending(block, lat, self._work_quality(block))
        self._push(now + max(lat.values()), _VERDICT)

    def _work_quality(self, block: Block) -> str:
        if validate_block(block, self.cfg.m):
            return REJECT_SIGNAL
        for tx in block.txs:
            if tx.is_priority and block.created_at - max(tx.arrival_time, self.ready_time) > self.cfg.lag_tolerance:
                return REJECT_SIGNAL
        return ACCEPT_SIGNAL

    def _append(self, block: Block, now: float) -> None:
        self.chain = chain_append(self.chain, block)
        self.metrics.chain_height.append((now, self.chain.tip_height))
        leader = block.leader
        self.blocks_generated[leader] += 1
        p = self.profiles[leader]
        self.profiles[leader] = replace(p, efficiency=compute_efficiency(block.created_at, block.last_tx_time))
        self.fees[leader] += sum(tx.fee for tx in block.txs if not tx.is_priority)
        for tx in block.txs:
            rec = self.tx_records[tx.txid]
            rec.included_at = block.created_at
            rec.height = block.height

    # event handlers

    def _on_verdict(self, now: float) -> bool:
        pend = self.pending
        self.pending = None
        followers = [self.profiles[n] for n in sorted(pend.latencies)]
        flip = {
            f.node: self.cfg.behavior(f.node).flip_probability(self.rounds_reviewed[f.node])
            for f in followers
        }
        pre_trust = {f.node: f.trust for f in followers}
        try:
            result = review_round(
                pend.block,
                followers,
                self.world,
                pend.quality,
                self.rng_review,
                alpha=self.cfg.alpha,
                d_min=self.cfg.d_min,
                d_max=self.cfg.d_max,
                latencies=pend.latencies,
                flip_prob=flip,
            )
        except NoQuorumError:
            self.halt_reason = "no-quorum"
            return False
        for prof in result.profiles:
            self.profiles[prof.node] = prof
            self.rounds_reviewed[prof.node] += 1
            self.metrics.trust.append((now, prof.node, prof.trust))
        rec = self.block_records[-1]
        rec.verdict_at = now
        rec.outcome = result.verdict.outcome.value
        rec.D = result.verdict.D
        self._apply(VerdictIn(result.verdict, pre_trust, pend.block), now)
        if self.state.phase is Phase.BUILDING:
            self.ready_time = now
        return True

    def _build(self, now: float, empty: bool = False) -> None:
        height = self.chain.tip_height + 1
        if empty:
            block = make_block([], self.state.leader, height, now)
        else:
            block = bld.build(self.pool, self.state.leader, height, now, self.builder_cfg)
        for tx in block.txs:
            rec = self.tx_records[tx.txid]
            if rec.first_proposed_at is None:
                rec.first_proposed_at = now
        n_pri = sum(tx.is_priority for tx in block.txs)
        self.block_records.append(
            BlockRecord(height, block.leader, now, len(block.txs), n_pri, len(block.txs) / self.cfg.m)
        )
        self._apply(BlockBuilt(block), now)

    def _poll(self, now: float) -> None:
        """Re-evaluate the block-creation trigger after any event."""
        if self.state.phase is not Phase.BUILDING:
            return
        kind = self.cfg.behavior(self.state.leader).kind
        if kind is BehaviorKind.EMPTY_BLOCK:
            self._build(now, empty=True)
            return
        fire = len(self.pool) > 0 and bld.evaluate(self.pool, now, self.builder_cfg) is bld.Decision.CREATE_NOW
        if fire:
            if kind is BehaviorKind.LAZY_LEADER:
                if not self.lazy_pending:
                    self.lazy_pending = True
                    self._push(now + self.cfg.behavior(self.state.leader).delay, _LAZY_BUILD)
            else:
                self._build(now)
            return
        oldest = self.pool.oldest_normal_arrival()
        if oldest is not None:
            t = bld.timeout_at(oldest, self.cfg.w)
            if t not in self.timers:
                self.timers.add(t)
                self._push(t, _TIMER)

    def run(self) -> SimResult:
        cfg = self.cfg
        self.chain = chain_append(self.chain, genesis_block(0.0))
        self.metrics.chain_height.append((0.0, 0))
        self._schedule_arrivals()
        self._elect(0.0)
        self._poll(0.0)
        now = 0.0
        while self.heap and self.heap[0][0] <= cfg.duration:
            now, _, kind, data = heapq.heappop(self.heap)
            if kind == _ARRIVAL:
                self.pool.submit(data, now)
                self.tx_records[data.txid] = TxRecord(data.txid, data.tx_class.value, data.arrival_time)
            elif kind == _TIMER:
                self.timers.discard(now)
            elif kind == _LAZY_BUILD:
                self.lazy_pending = False
                if self.state.phase is Phase.BUILDING and len(self.pool):
                    self._build(now)
                    continue
            elif kind == _VERDICT:
                if not self._on_verdict(now):
                    break
            self._poll(now)
        end = cfg.duration if self.halt_reason == "duration" else now
        self._apply(Halt(), end)
        profiles = [self.profiles[n] for n in sorted(self.profiles)]
        accepted = {n: c for n, c in self.blocks_generated.items() if c > 0}
        incentives = distribute_incentives(
            profiles,
            accepted,
            self.fees,
            cfg.epoch_budget,
            follower_share=cfg.follower_share,
            include_fees=cfg.fee_flag,
        )
        self._record([incentives_event(end, incentives)])
        self._finish_metrics(end)
        return SimResult(self.metrics, self.trace, self.chain, profiles, incentives, cfg)

    def _finish_metrics(self, end: float) -> None:
        m = self.metrics
        m.transactions = [self.tx_records[k] for k in sorted(self.tx_records)]
        m.blocks = self.block_records
        pri = m.delays(TxClass.PRIORITY.value)
        nor = m.delays(TxClass.NORMAL.value)
        m.summary = {
            "halt_reason": self.halt_reason,
            "end_time": end,
            "chain_height": self.chain.tip_height,
            "blocks_proposed": len(self.block_records),
            "blocks_accepted": sum(b.outcome == "Accept" for b in self.block_records),
            "voteouts": m.voteouts,
            "terms": self.state.term_index,
            "tx_submitted": len(self.tx_records),
            "tx_included": sum(t.included_at is not None for t in self.tx_records.values()),
            "mean_priority_delay": float(np.mean(pri)) if pri else None,
            "mean_normal_delay": float(np.mean(nor)) if nor else None,
            "max_normal_delay": max(nor) if nor else None,
            "mean_utilization": float(np.mean(m.utilization())) if m.blocks else None,
        }


def _force_leader(outcome: ElectionOutcome, leader: NodeId) -> ElectionOutcome:
    cands = list(outcome.candidate_list)
    if leader not in cands:
        cands[-1] = leader
    return ElectionOutcome(leader, outcome.budget_b, tuple(cands), frozenset(cands), outcome.executor)


def run_scenario(cfg: ScenarioConfig, model: BoostedEnsemble | None = None) -> SimResult:
    return Simulator(cfg, model).run()


def proposed_blocks(trace) -> list[tuple[float, tuple[int, ...]]]:
    """``(created_at, txids)`` for every BlockProposed event, in order."""
    out = []
    for ev in trace:
        if ev.kind is EventKind.BLOCK_PROPOSED:
            txs = ev.get("txs")
            ids = () if txs == "-" else tuple(int(item.split(":")[0]) for item in txs.split("|"))
            out.append((float(ev.get("created_at")), ids))
    return out
