"""Consensus state machine: elect, build, verify, then accept, retry or vote out.

The machine is a pure function ``step(state, event, now)``; it never touches
the mempool or the chain itself. Side effects are returned as commands for
the driver (the simulator) to carry out, and every transition is recorded as
a :class:`LedgerEvent` for the audit trace.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .core import Block, BlockStatus, NodeId, NodeProfile, Transaction, TxClass, validate_block
from .election import ElectionOutcome
from .errors import ContractViolation, NoQuorumError, ProtocolError
from .peer_prediction import Outcome, Verdict, aggregate


class Phase(enum.Enum):
    ELECTING = "Electing"
    BUILDING = "Building"
    AWAITING_VERDICT = "AwaitingVerdict"
    HALTED = "Halted"


class EventKind(enum.Enum):
    ELECTED = "Elected"
    BLOCK_PROPOSED = "BlockProposed"
    VERDICT_REACHED = "VerdictReached"
    BLOCK_ACCEPTED = "BlockAccepted"
    BLOCK_REJECTED_RETRY = "BlockRejectedRetry"
    LEADER_VOTED_OUT = "LeaderVotedOut"
    INCENTIVES_PAID = "IncentivesPaid"
    HALTED = "Halted"


@dataclass(frozen=True)
class RoundState:
    phase: Phase = Phase.ELECTING
    leader: NodeId | None = None
    budget_b: int = 0
    blocks_done_this_term: int = 0
    retry_pending: bool = False
    term_index: int = 0
    voted_out: bool = False
    candidates: tuple[NodeId, ...] = ()

    def __post_init__(self):
        if self.blocks_done_this_term > self.budget_b and self.phase is not Phase.ELECTING:
            raise ContractViolation("blocks_done_this_term exceeds budget_b")


# Input events


@dataclass(frozen=True)
class Elected:
    outcome: ElectionOutcome


@dataclass(frozen=True)
class BlockBuilt:
    block: Block


@dataclass(frozen=True)
class VerdictIn:
    verdict: Verdict
    trust: Mapping[NodeId, float]
    block: Block


@dataclass(frozen=True)
class Halt:
    pass


# Commands for the driver


@dataclass(frozen=True)
class RunElection:
    voted_out: bool
    previous_leader: NodeId | None
    previous_candidates: tuple[NodeId, ...]


@dataclass(frozen=True)
class RequestReview:
    block: Block


@dataclass(frozen=True)
class AppendBlock:
    block: Block


@dataclass(frozen=True)
class RequeueTxs:
    txs: tuple[Transaction, ...]


@dataclass(frozen=True)
class RecordVoteOut:
    node: NodeId


@dataclass(frozen=True)
class LedgerEvent:
    time: float
    kind: EventKind
    payload: tuple[tuple[str, str], ...] = ()

    def get(self, key: str) -> str:
        for k, v in self.payload:
            if k == key:
                return v
        raise KeyError(key)

    def serialize(self, seq: int) -> str:
        parts = [f"t={self.time!r}", f"seq={seq}", f"kind={self.kind.value}"]
        parts += [f"{k}={v}" for k, v in self.payload]
        return " ".join(parts)

    @classmethod
    def parse(cls, line: str) -> tuple[int, "LedgerEvent"]:
        fields = line.split()
        try:
            pairs = [f.split("=", 1) for f in fields]
            head = dict(pairs[:3])
            time = float(head["t"])
            seq = int(head["seq"])
            kind = EventKind(head["kind"])
        except (KeyError, ValueError) as exc:
            raise ContractViolation(f"malformed trace line: {line!r}") from exc
        return seq, cls(time, kind, tuple((k, v) for k, v in pairs[3:]))


# Payload encodings. Floats use repr so a trace round-trips exactly.


def _fmt_ids(ids: Iterable[NodeId]) -> str:
    return ",".join(str(i) for i in ids) or "-"


def _parse_ids(s: str) -> tuple[NodeId, ...]:
    return () if s == "-" else tuple(int(x) for x in s.split(","))


def encode_txs(txs: Sequence[Transaction]) -> str:
    return "|".join(f"{t.txid}:{t.tx_class.value}:{t.arrival_time!r}:{t.fee!r}" for t in txs) or "-"


def decode_txs(s: str) -> tuple[Transaction, ...]:
    if s == "-":
        return ()
    out = []
    for item in s.split("|"):
        txid, cls, arrival, fee = item.split(":")
        out.append(Transaction(int(txid), TxClass(cls), float(fee), float(arrival)))
    return tuple(out)


def _fmt_map(m: Mapping[NodeId, object]) -> str:
    return ",".join(f"{k}:{v!r}" for k, v in sorted(m.items())) or "-"


def _parse_map(s: str, conv) -> dict[NodeId, object]:
    if s == "-":
        return {}
    out = {}
    for item in s.split(","):
        k, v = item.split(":")
        out[int(k)] = conv(v)
    return out


def block_payload(block: Block) -> tuple[tuple[str, str], ...]:
    return (
        ("height", str(block.height)),
        ("leader", str(block.leader)),
        ("created_at", repr(block.created_at)),
        ("last_tx_time", repr(block.last_tx_time)),
        ("txs", encode_txs(block.txs)),
    )


def block_from_event(ev: LedgerEvent) -> Block:
    height = int(ev.get("height"))
    return Block(
        height=height,
        parent=height - 1,
        leader=int(ev.get("leader")),
        created_at=float(ev.get("created_at")),
        last_tx_time=float(ev.get("last_tx_time")),
        txs=decode_txs(ev.get("txs")),
    )


def _illegal(state: RoundState, event) -> ProtocolError:
    return ProtocolError(f"{type(event).__name__} is not legal in phase {state.phase.value}")


def step(state: RoundState, event, now: float) -> tuple[RoundState, list[LedgerEvent], list]:
    """Advance the machine by one input event.

    Raises :class:`ProtocolError` on an illegal (phase, event) pair; the
    caller's state is untouched because states are immutable.
    """
    if isinstance(event, Halt):
        if state.phase is Phase.HALTED:
            raise _illegal(state, event)
        return replace(state, phase=Phase.HALTED), [LedgerEvent(now, EventKind.HALTED)], []

    if state.phase is Phase.ELECTING and isinstance(event, Elected):
        o = event.outcome
        new = RoundState(
            phase=Phase.BUILDING,
            leader=o.leader,
            budget_b=o.budget_b,
            blocks_done_this_term=0,
            retry_pending=False,
            term_index=state.term_index + 1,
            voted_out=False,
            candidates=tuple(o.candidate_list),
        )
        payload = (
            ("term", str(new.term_index)),
            ("leader", str(o.leader)),
            ("b", str(o.budget_b)),
            ("candidates", _fmt_ids(o.candidate_list)),
            ("knowledge", _fmt_ids(sorted(o.knowledge_set))),
            ("executor", "-" if o.executor is None else str(o.executor)),
        )
        return new, [LedgerEvent(now, EventKind.ELECTED, payload)], []

    if state.phase is Phase.BUILDING and isinstance(event, BlockBuilt):
        if event.block.leader != state.leader:
            raise ProtocolError(
                f"block from node {event.block.leader} while {state.leader} leads"
            )
        new = replace(state, phase=Phase.AWAITING_VERDICT)
        ev = LedgerEvent(now, EventKind.BLOCK_PROPOSED, block_payload(event.block))
        return new, [ev], [RequestReview(event.block)]

    if state.phase is Phase.AWAITING_VERDICT and isinstance(event, VerdictIn):
        v, block = event.verdict, event.block
        base = (("height", str(block.height)), ("leader", str(block.leader)))
        events = [
            LedgerEvent(
                now,
                EventKind.VERDICT_REACHED,
                base
                + (
                    ("D", repr(v.D)),
                    ("h", str(v.h)),
                    ("outcome", v.outcome.value),
                    ("opinions", _fmt_map(v.opinions)),
                    ("trust", _fmt_map(event.trust)),
                ),
            )
        ]
        if v.outcome is Outcome.ACCEPT:
            done = state.blocks_done_this_term + 1
            events.append(LedgerEvent(now, EventKind.BLOCK_ACCEPTED, base + (("b_cb", str(done)),)))
            commands: list = [AppendBlock(block.with_status(BlockStatus.ACCEPTED))]
            if done < state.budget_b:
                new = replace(state, phase=Phase.BUILDING, blocks_done_this_term=done, retry_pending=False)
            else:
                new = replace(state, phase=Phase.ELECTING, blocks_done_this_term=done, retry_pending=False)
                commands.append(RunElection(False, state.leader, state.candidates))
            return new, events, commands
        requeue = RequeueTxs(tuple(block.txs))
        if v.outcome is Outcome.REJECT_RETRY:
            events.append(LedgerEvent(now, EventKind.BLOCK_REJECTED_RETRY, base + (("D", repr(v.D)),)))
            new = replace(state, phase=Phase.BUILDING, retry_pending=True)
            return new, events, [requeue]
        events.append(
            LedgerEvent(
                now,
                EventKind.LEADER_VOTED_OUT,
                base + (("D", repr(v.D)), ("reason", "D<=d_min")),
            )
        )
        new = replace(state, phase=Phase.ELECTING, retry_pending=False, voted_out=True)
        return new, events, [
            requeue,
            RecordVoteOut(block.leader),
            RunElection(True, state.leader, state.candidates),
        ]

    raise _illegal(state, event)


@dataclass(frozen=True)
class IncentiveLedger:
    follower_rewards: dict[NodeId, float]
    leader_rewards: dict[NodeId, float]
    epoch_budget: float
    fees_paid: dict[NodeId, float] = field(default_factory=dict)

    @property
    def total_paid(self) -> float:
        return sum(self.follower_rewards.values()) + sum(self.leader_rewards.values())

    @property
    def total_fees(self) -> float:
        return sum(self.fees_paid.values())


def _proportional(weights: Mapping[NodeId, float], pot: float) -> dict[NodeId, float]:
    total = sum(weights.values())
    if total <= 0:
        return {k: 0.0 for k in weights}
    return {k: pot * w / total for k, w in weights.items()}


def distribute_incentives(
    profiles: Sequence[NodeProfile],
    accepted_blocks: Mapping[NodeId, int],
    fees: Mapping[NodeId, float],
    budget: float,
    *,
    follower_share: float = 0.5,
    include_fees: bool = True,
) -> IncentiveLedger:
    """Split an epoch budget between followers (by normalized trust) and
    leaders (by accepted blocks), passing normal-transaction fees through to
    the leaders that collected them when ``include_fees`` is set."""
    if budget < 0:
        raise ContractViolation(f"budget must be >= 0, got {budget}")
    if not 0.0 <= follower_share <= 1.0:
        raise ContractViolation(f"follower_share {follower_share} outside [0, 1]")
    followers = _proportional({p.node: p.normalized_trust for p in profiles}, budget * follower_share)
    leaders = _proportional(
        {k: float(v) for k, v in accepted_blocks.items()}, budget * (1.0 - follower_share)
    )
    paid_fees: dict[NodeId, float] = {}
    if include_fees:
        for node, fee in fees.items():
            if accepted_blocks.get(node, 0) > 0 and fee > 0:
                paid_fees[node] = float(fee)
                leaders[node] = leaders.get(node, 0.0) + fee
    return IncentiveLedger(followers, leaders, budget, paid_fees)


def incentives_event(now: float, ledger: IncentiveLedger) -> LedgerEvent:
    return LedgerEvent(
        now,
        EventKind.INCENTIVES_PAID,
        (
            ("budget", repr(ledger.epoch_budget)),
            ("followers", _fmt_map(ledger.follower_rewards)),
            ("leaders", _fmt_map(ledger.leader_rewards)),
            ("fees", _fmt_map(ledger.fees_paid)),
        ),
    )


def serialize_trace(events: Sequence[LedgerEvent]) -> str:
    return "".join(ev.serialize(i) + "\n" for i, ev in enumerate(events))


def parse_trace(text: str) -> list[LedgerEvent]:
    events = []
    for expected, line in enumerate(l for l in text.splitlines() if l.strip()):
        seq, ev = LedgerEvent.parse(line)
        if seq != expected:
            raise ContractViolation(f"trace sequence gap: expected {expected}, got {seq}")
        events.append(ev)
    return events


def audit_trace(
    events: Sequence[LedgerEvent], *, capacity: int, d_min: float, d_max: float
) -> list[str]:
    """Replay a trace and return every inconsistency found (empty means clean).

    Proposed blocks go back through the state machine, recorded verdicts are
    recomputed from the recorded opinions and trust, and the resulting
    transitions must match what the trace says happened next.
    """
    problems: list[str] = []
    state = RoundState()
    last_t = float("-inf")
    pending: Block | None = None
    expected: list[tuple[EventKind, tuple]] = []
    accepted_heights: list[int] = []
    last_verdict_D: dict[int, float] = {}

    def expect(ev: LedgerEvent) -> bool:
        if not expected:
            return False
        kind, keys = expected[0]
        if kind is not ev.kind or any(ev.get(k) != v for k, v in keys):
            return False
        expected.pop(0)
        return True

    for i, ev in enumerate(events):
        if ev.time < last_t:
            problems.append(f"event {i}: time {ev.time} goes backwards")
        last_t = ev.time
        if expected:
            if expect(ev):
                if ev.kind is EventKind.LEADER_VOTED_OUT:
                    h = int(ev.get("height"))
                    if not last_verdict_D.get(h, 1.0) <= d_min:
                        problems.append(f"event {i}: vote-out without D <= d_min")
                continue
            problems.append(f"event {i}: expected {expected[0][0].value}, found {ev.kind.value}")
            expected.clear()
        try:
            if ev.kind is EventKind.ELECTED:
                cands = _parse_ids(ev.get("candidates"))
                if set(_parse_ids(ev.get("knowledge"))) != set(cands):
                    problems.append(f"event {i}: knowledge set differs from candidate list")
                leader = int(ev.get("leader"))
                if leader not in cands:
                    problems.append(f"event {i}: leader {leader} not a candidate")
                outcome = ElectionOutcome(leader, int(ev.get("b")), cands, frozenset(cands))
                state, _, _ = step(state, Elected(outcome), ev.time)
            elif ev.kind is EventKind.BLOCK_PROPOSED:
                pending = block_from_event(ev)
                state, _, _ = step(state, BlockBuilt(pending), ev.time)
            elif ev.kind is EventKind.VERDICT_REACHED:
                if pending is None:
                    problems.append(f"event {i}: verdict without a proposed block")
                    continue
                opinions = _parse_map(ev.get("opinions"), int)
                trust = _parse_map(ev.get("trust"), float)
                try:
                    verdict = aggregate(opinions, trust, d_min, d_max)
                except NoQuorumError:
                    problems.append(f"event {i}: recorded verdict has no quorum")
                    continue
                if repr(verdict.D) != ev.get("D") or verdict.outcome.value != ev.get("outcome"):
                    problems.append(f"event {i}: verdict does not reproduce")
                violations = validate_block(pending, capacity)
                if verdict.outcome is Outcome.ACCEPT and violations:
                    problems.append(f"event {i}: accepted block violates {violations}")
                last_verdict_D[pending.height] = verdict.D
                state, produced, _ = step(state, VerdictIn(verdict, trust, pending), ev.time)
                for p in produced[1:]:
                    keys = tuple((k, v) for k, v in p.payload if k in ("height", "leader", "D"))
                    expected.append((p.kind, keys))
                if verdict.outcome is Outcome.ACCEPT:
                    if accepted_heights and pending.height != accepted_heights[-1] + 1:
                        problems.append(f"event {i}: accepted height {pending.height} not contiguous")
                    accepted_heights.append(pending.height)
                pending = None
            elif ev.kind is EventKind.HALTED:
                state, _, _ = step(state, Halt(), ev.time)
            elif ev.kind in (EventKind.BLOCK_ACCEPTED, EventKind.BLOCK_REJECTED_RETRY, EventKind.LEADER_VOTED_OUT):
                problems.append(f"event {i}: {ev.kind.value} without a preceding verdict")
        except ProtocolError as exc:
            problems.append(f"event {i}: {exc}")
        except (KeyError, ValueError, ContractViolation) as exc:
            problems.append(f"event {i}: malformed payload ({exc})")
    if expected:
        problems.append(f"trace ends before {expected[0][0].value}")
    return problems
