"""Leader election: candidate ranking with a boosted classifier, then an
entropy-seeded random draw of the leader and its block budget."""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import NodeId, NodeProfile
from .errors import ContractViolation
from .gbdt import BoostedEnsemble, TreeParams

CANDIDATE = 1
FOLLOWER = 0

MAX_TRUST_SCALED = 10
MAX_BLOCKS = 50

# Reference node and the feature values at which its label flips.
BASELINE = (1, 800, 5, 0)  # (trust_scaled, peers, blocks, voteout)
FLIP_PEERS = 980
FLIP_BLOCKS = 15
FLIP_TRUST = 3

FEATURE_NAMES = ("trust_scaled", "peers", "blocks", "voteout")
# Label direction per feature: more trust/peers/blocks never hurts, a vote-out never helps.
MONOTONE = (1, 1, 1, -1)


@dataclass(frozen=True)
class FeatureVector:
    trust_scaled: float
    peers: int
    blocks_generated: int
    voteout_flag: int

    def __post_init__(self):
        if not 0 <= self.trust_scaled <= MAX_TRUST_SCALED:
            raise ContractViolation(f"trust_scaled {self.trust_scaled} outside [0, 10]")
        if self.peers < 0 or self.blocks_generated < 0:
            raise ContractViolation("peers and blocks_generated must be non-negative")
        if self.voteout_flag not in (0, 1):
            raise ContractViolation("voteout_flag must be 0 or 1")

    def as_row(self) -> list[float]:
        return [float(self.trust_scaled), float(self.peers), float(self.blocks_generated), float(self.voteout_flag)]


def extract_features(profile: NodeProfile, blocks_generated: int) -> FeatureVector:
    trust_scaled = min(max(profile.trust * 5.0, 0.0), float(MAX_TRUST_SCALED))
    return FeatureVector(
        trust_scaled=trust_scaled,
        peers=profile.peers,
        blocks_generated=blocks_generated,
        voteout_flag=1 if profile.voteouts >= 1 else 0,
    )


@dataclass(frozen=True)
class LabelingOracle:
    """Linear threshold rule over normalized features.

    Weights and threshold are exact rationals so the calibrated flip points
    are reproduced without rounding.
    """

    w_peers: Fraction
    w_blocks: Fraction
    w_trust: Fraction
    w_voteout: Fraction
    theta: Fraction
    n_nodes: int

    def score(self, f: FeatureVector) -> Fraction:
        return (
            self.w_peers * Fraction(f.peers) / (self.n_nodes - 1)
            + self.w_blocks * Fraction(f.blocks_generated) / MAX_BLOCKS
            + self.w_trust * Fraction(f.trust_scaled) / MAX_TRUST_SCALED
            - self.w_voteout * f.voteout_flag
        )

    def max_positive_contribution(self) -> Fraction:
        return self.w_peers + self.w_blocks + self.w_trust


def oracle_label(oracle: LabelingOracle, f: FeatureVector) -> int:
    return CANDIDATE if oracle.score(f) >= oracle.theta else FOLLOWER


def calibrate_oracle(n_nodes: int, w_trust: Fraction | int = 1) -> LabelingOracle:
    """Solve for weights that put the label flip exactly at the reference flip points.

    Moving a single feature from the baseline to its flip value must add the
    same margin to the score; that margin is fixed by the trust weight. The
    vote-out weight exceeds every other contribution combined, plus one.
    """
    if n_nodes < 2:
        raise ContractViolation("need at least two nodes")
    w_trust = Fraction(w_trust)
    t0, peers0, blocks0, _ = BASELINE
    margin = w_trust * Fraction(FLIP_TRUST - t0, MAX_TRUST_SCALED)
    w_blocks = margin / Fraction(FLIP_BLOCKS - blocks0, MAX_BLOCKS)
    w_peers = margin * (n_nodes - 1) / (FLIP_PEERS - peers0)
    base = (
        w_peers * Fraction(peers0, n_nodes - 1)
        + w_blocks * Fraction(blocks0, MAX_BLOCKS)
        + w_trust * Fraction(t0, MAX_TRUST_SCALED)
    )
    w_voteout = w_peers + w_blocks + w_trust + 1
    return LabelingOracle(w_peers, w_blocks, w_trust, w_voteout, base + margin, n_nodes)


def default_candidate_count(n_nodes: int) -> int:
    return min(max(3, math.ceil(n_nodes / 20)), candidate_cap(n_nodes))


def candidate_cap(n_nodes: int) -> int:
    return max(1, math.ceil(n_nodes / 10))


# Library defaults: a slow learning rate, monotone constraints, otherwise
# LightGBM-style regularization.
DEFAULT_TREE_PARAMS = TreeParams(
    learning_rate=0.005,
    max_depth=6,
    rounds=2000,
    min_child_samples=20,
    monotone=MONOTONE,
)


def features_matrix(vectors: Iterable[FeatureVector]) -> np.ndarray:
    rows = [v.as_row() for v in vectors]
    return np.asarray(rows, dtype=float).reshape(-1, 4)


def predict_candidates(
    model: BoostedEnsemble,
    profiles: Sequence[NodeProfile],
    n: int,
    blocks_generated: Mapping[NodeId, int] | None = None,
) -> list[NodeId]:
    """Top ``n`` nodes by model probability; ties go to higher trust, then lower id."""
    cap = candidate_cap(len(profiles))
    if n < 1 or n > cap:
        raise ContractViolation(f"candidate count {n} outside [1, {cap}] for {len(profiles)} nodes")
    blocks_generated = blocks_generated or {}
    X = features_matrix(extract_features(p, blocks_generated.get(p.node, 0)) for p in profiles)
    prob = model.predict_proba(X)
    order = sorted(
        range(len(profiles)),
        key=lambda k: (-prob[k], -profiles[k].trust, profiles[k].node),
    )
    return [profiles[k].node for k in order[:n]]


@dataclass(frozen=True)
class ElectionOutcome:
    leader: NodeId
    budget_b: int
    candidate_list: tuple[NodeId, ...]
    knowledge_set: frozenset[NodeId]
    executor: NodeId | None = None


def mtrng_seed(entropy: bytes, round_salt: int, last_height: int) -> bytes:
    h = hashlib.sha256()
    h.update(entropy)
    h.update(round_salt.to_bytes(8, "little", signed=True))
    h.update(last_height.to_bytes(8, "little", signed=True))
    return h.digest()


def mtrng_draw(
    entropy: bytes,
    round_salt: int,
    candidates: Sequence[NodeId],
    b_max: int,
    last_height: int = 0,
) -> ElectionOutcome:
    """Draw the next leader and its block budget from pool entropy.

    A SHA-256 digest of the entropy, salt and chain height keys a Philox
    counter-based generator, so the draw is a pure function of its inputs.
    """
    if not candidates:
        raise ContractViolation("empty candidate list")
    if b_max < 1:
        raise ContractViolation(f"b_max must be >= 1, got {b_max}")
    digest = mtrng_seed(entropy, round_salt, last_height)
    key = np.frombuffer(digest[:16], dtype="<u8")
    rng = np.random.Generator(np.random.Philox(key=key))
    leader = candidates[int(rng.integers(len(candidates)))]
    budget = int(rng.integers(1, b_max + 1))
    cands = tuple(candidates)
    return ElectionOutcome(leader, budget, cands, frozenset(cands))


def choose_executor(
    profiles: Sequence[NodeProfile],
    current_leader: NodeId | None,
    voted_out: bool,
    previous_candidates: Sequence[NodeId] = (),
) -> NodeId:
    """Node that runs the classifier and the draw for the next election.

    The sitting leader does it unless it was voted out; then the most
    trusted member of the previous candidate list (lowest id on ties) takes
    over, falling back to the whole network.
    """
    if not profiles:
        raise ContractViolation("no eligible executor in an empty network")
    by_id = {p.node: p for p in profiles}
    if current_leader is not None and not voted_out:
        return current_leader
    pool = [by_id[c] for c in previous_candidates if c in by_id and c != current_leader]
    if not pool:
        pool = [p for p in profiles if p.node != current_leader] or list(profiles)
    return min(pool, key=lambda p: (-p.trust, p.node)).node


@dataclass(frozen=True)
class ElectionConfig:
    n_candidates: int
    b_max: int = 10


def run_election(
    profiles: Sequence[NodeProfile],
    config: ElectionConfig,
    model: BoostedEnsemble,
    entropy: bytes,
    *,
    round_salt: int = 0,
    last_height: int = 0,
    current_leader: NodeId | None = None,
    voted_out: bool = False,
    previous_candidates: Sequence[NodeId] = (),
    blocks_generated: Mapping[NodeId, int] | None = None,
) -> ElectionOutcome:
    executor = choose_executor(profiles, current_leader, voted_out, previous_candidates)
    candidates = predict_candidates(model, profiles, config.n_candidates, blocks_generated)
    outcome = mtrng_draw(entropy, round_salt, candidates, config.b_max, last_height)
    return ElectionOutcome(
        outcome.leader, outcome.budget_b, outcome.candidate_list, outcome.knowledge_set, executor
    )


DATASET_HEADER = ("trust_scaled", "peers", "blocks", "voteout", "label")


def write_dataset(path, X: np.ndarray, y: np.ndarray) -> None:
    """One row per node in NodeId order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_HEADER)
        for row, label in zip(X, y):
            writer.writerow([f"{row[0]:.9g}", int(row[1]), int(row[2]), int(row[3]), int(label)])


def read_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != DATASET_HEADER:
            raise ContractViolation(f"unexpected dataset header {header!r}")
        rows = [[float(v) for v in r] for r in reader if r]
    arr = np.asarray(rows, dtype=float).reshape(-1, 5)
    return arr[:, :4], arr[:, 4].astype(int)
