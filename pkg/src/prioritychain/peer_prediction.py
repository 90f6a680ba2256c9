"""Peer-prediction review of a leader's block.

Each follower ``i`` is paired with a random peer ``j`` and reports two
predictions of whether ``j`` will accept the block: a prior (before the
block is revealed) and a posterior (after reviewing it). The follower's own
opinion is inferred from the direction the prediction moved, the posterior
is scored with the binary quadratic rule against ``j``'s realized report,
and the score feeds the follower's trustworthiness.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .core import Block, NodeId, NodeProfile
from .errors import ContractViolation, DegenerateSignalError, NoQuorumError

ACCEPT_SIGNAL = "a"
REJECT_SIGNAL = "r"


class Outcome(enum.Enum):
    ACCEPT = "Accept"
    REJECT_RETRY = "RejectRetry"
    REJECT_VOTE_OUT = "RejectVoteOut"


@dataclass(frozen=True)
class WorldPrior:
    p_work_good: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.p_work_good <= 1.0:
            raise ContractViolation(f"P(W=a)={self.p_work_good} outside [0, 1]")


@dataclass(frozen=True)
class BeliefPair:
    reviewer: NodeId
    peer: NodeId
    prior: float
    posterior: float
    report_latency: float = 0.0

    def __post_init__(self):
        if self.reviewer == self.peer:
            raise ContractViolation("a reviewer cannot be its own peer")


@dataclass(frozen=True)
class ScoreRecord:
    node: NodeId
    score: float
    trust_before: float
    trust_after: float
    promptness: float


@dataclass(frozen=True)
class Verdict:
    D: float
    h: int
    outcome: Outcome
    opinions: Mapping[NodeId, int]


@dataclass(frozen=True)
class ReviewResult:
    beliefs: list[BeliefPair]
    scores: list[ScoreRecord]
    verdict: Verdict
    profiles: list[NodeProfile]
    signals: dict[NodeId, str]
    flipped: frozenset[NodeId]


def prior_belief(reviewer: NodeProfile, peer: NodeProfile, world: WorldPrior) -> float:
    """Probability the reviewer assigns to its peer accepting, before review."""
    q = world.p_work_good
    return (1.0 - peer.p_fa) * q + peer.p_md * (1.0 - q)


def _joint_terms(reviewer: NodeProfile, world: WorldPrior) -> tuple[float, float, float, float]:
    q = world.p_work_good
    a1 = reviewer.p_fa * q
    a2 = (1.0 - reviewer.p_md) * (1.0 - q)
    a3 = (1.0 - reviewer.p_fa) * q
    a4 = reviewer.p_md * (1.0 - q)
    return a1, a2, a3, a4


def posterior_belief(
    reviewer: NodeProfile, peer: NodeProfile, world: WorldPrior, signal: str
) -> float:
    """Probability the reviewer assigns to its peer accepting, given its own signal."""
    a1, a2, a3, a4 = _joint_terms(reviewer, world)
    if signal == ACCEPT_SIGNAL:
        good, bad = a3, a4
    elif signal == REJECT_SIGNAL:
        good, bad = a1, a2
    else:
        raise ContractViolation(f"signal must be 'a' or 'r', got {signal!r}")
    total = good + bad
    if total <= 0.0:
        raise DegenerateSignalError(
            f"signal {signal!r} has zero probability for reviewer {reviewer.node}"
        )
    return (good * (1.0 - peer.p_fa) + bad * peer.p_md) / total


def signal_probability(reviewer: NodeProfile, world: WorldPrior, signal: str) -> float:
    a1, a2, a3, a4 = _joint_terms(reviewer, world)
    return a3 + a4 if signal == ACCEPT_SIGNAL else a1 + a2


def quadratic_score(y: float, omega: int) -> float:
    """Binary quadratic scoring rule, valued in [0, 1]."""
    if not 0.0 <= y <= 1.0:
        raise ContractViolation(f"report {y} outside [0, 1]")
    if omega == 1:
        return 2.0 * y - y * y
    if omega == 0:
        return 1.0 - y * y
    raise ContractViolation(f"omega must be 0 or 1, got {omega}")


def promptness(latency: float, latency_min: float, latency_max: float) -> tuple[float, float]:
    """Return ``(beta, 1 - beta)`` with beta the normalized latency in [0, 1]."""
    if latency < 0 or latency_min < 0 or latency_max < 0:
        raise ContractViolation("latencies must be non-negative")
    if latency_min > latency_max:
        raise ContractViolation(f"latency_min {latency_min} > latency_max {latency_max}")
    span = latency_max - latency_min
    if span == 0.0:
        return 0.0, 1.0
    beta = min(max((latency - latency_min) / span, 0.0), 1.0)
    return beta, 1.0 - beta


def update_trust(
    prev_core: float, score: float, alpha: float, beta: float
) -> tuple[float, float]:
    """Blend the fresh score with history and add the promptness bonus.

    Returns ``(trust, core)``: ``trust`` lies in [0, 2] and is what gets
    stored; ``core`` is the history blend alone, carried into the next round
    so the promptness bonus never compounds.
    """
    for name, v in (("prev_core", prev_core), ("score", score), ("alpha", alpha), ("beta", beta)):
        if not 0.0 <= v <= 1.0:
            raise ContractViolation(f"{name}={v} outside [0, 1]")
    core = min(max(alpha * score + (1.0 - alpha) * prev_core, 0.0), 1.0)
    return min(core + 1.0 - beta, 2.0), core


def infer_opinion(prior: float, posterior: float) -> int:
    # equality is read as rejection
    return 1 if posterior > prior else 0


def aggregate(
    opinions: Mapping[NodeId, int],
    trust: Mapping[NodeId, float],
    d_min: float,
    d_max: float,
) -> Verdict:
    """Decide on a block from the opinions of trustworthy followers only."""
    if not d_min < d_max:
        raise ContractViolation(f"need d_min < d_max, got {d_min}, {d_max}")
    voters = [n for n in opinions if trust[n] / 2.0 > 0.5]
    h = len(voters)
    if h == 0:
        raise NoQuorumError("no trustworthy follower")
    D = sum(opinions[n] for n in voters) / h
    if D <= d_min:
        outcome = Outcome.REJECT_VOTE_OUT
    elif D >= d_max:
        outcome = Outcome.ACCEPT
    else:
        outcome = Outcome.REJECT_RETRY
    return Verdict(D=D, h=h, outcome=outcome, opinions=dict(opinions))


def review_round(
    block: Block,
    followers: Sequence[NodeProfile],
    world: WorldPrior,
    true_quality: str,
    rng: np.random.Generator | int,
    *,
    alpha: float = 0.5,
    d_min: float = 0.33,
    d_max: float = 0.67,
    latencies: Mapping[NodeId, float] | None = None,
    flip_prob: Mapping[NodeId, float] | None = None,
) -> ReviewResult:
    """Run one full peer-prediction round over ``followers`` for ``block``.

    ``flip_prob`` maps a follower to the probability that it reports the
    posterior it would have held under the opposite signal this round;
    absent followers report honestly. The verdict uses trust as it stood
    before this round; the returned profiles carry the updated trust.
    """
    if len(followers) < 2:
        raise ContractViolation("peer review needs at least two followers")
    if true_quality not in (ACCEPT_SIGNAL, REJECT_SIGNAL):
        raise ContractViolation(f"true_quality must be 'a' or 'r', got {true_quality!r}")
    rng = np.random.default_rng(rng)
    flip_prob = flip_prob or {}
    n = len(followers)
    ids = [f.node for f in followers]

    # Draw order is fixed (pairing, signals, flips) so replays match.
    offsets = rng.integers(1, n, size=n)
    peer_index = (np.arange(n) + offsets) % n
    u_signal = rng.random(n)
    u_flip = rng.random(n)

    signals: dict[NodeId, str] = {}
    for k, f in enumerate(followers):
        p_accept = 1.0 - f.p_fa if true_quality == ACCEPT_SIGNAL else f.p_md
        signals[f.node] = ACCEPT_SIGNAL if u_signal[k] < p_accept else REJECT_SIGNAL

    lat = {f.node: (latencies[f.node] if latencies is not None else f.latency) for f in followers}
    lo, hi = min(lat.values()), max(lat.values())

    beliefs: list[BeliefPair] = []
    opinions: dict[NodeId, int] = {}
    flipped = set()
    for k, f in enumerate(followers):
        peer = followers[peer_index[k]]
        s = signals[f.node]
        if u_flip[k] < flip_prob.get(f.node, 0.0):
            s = REJECT_SIGNAL if s == ACCEPT_SIGNAL else ACCEPT_SIGNAL
            flipped.add(f.node)
        y = prior_belief(f, peer, world)
        y_post = posterior_belief(f, peer, world, s)
        beliefs.append(BeliefPair(f.node, peer.node, y, y_post, lat[f.node]))
        opinions[f.node] = infer_opinion(y, y_post)

    verdict = aggregate(opinions, {f.node: f.trust for f in followers}, d_min, d_max)

    scores: list[ScoreRecord] = []
    updated: list[NodeProfile] = []
    for k, (f, pair) in enumerate(zip(followers, beliefs)):
        omega = opinions[ids[peer_index[k]]]
        score = quadratic_score(pair.posterior, omega)
        beta, prompt = promptness(lat[f.node], lo, hi)
        trust, core = update_trust(f.trust_core, score, alpha, beta)
        scores.append(ScoreRecord(f.node, score, f.trust, trust, prompt))
        updated.append(replace(f, trust=trust, trust_core=core))

    return ReviewResult(
        beliefs=beliefs,
        scores=scores,
        verdict=verdict,
        profiles=updated,
        signals=signals,
        flipped=frozenset(flipped),
    )
