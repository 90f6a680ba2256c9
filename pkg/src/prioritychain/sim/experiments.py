"""Reproducible experiments: classifier quality, flip-point sweeps, trust
dynamics of honest vs malicious reviewers, the promptness/history sweep,
and the attack scenarios."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..core import NodeProfile, Transaction, TxClass, make_block
from ..election import BASELINE, MAX_BLOCKS, MAX_TRUST_SCALED, DEFAULT_TREE_PARAMS
from ..gbdt import BoostedEnsemble, TreeParams, logloss, train_classifier
from ..peer_prediction import ACCEPT_SIGNAL, REJECT_SIGNAL, WorldPrior, review_round, update_trust
from .config import HONEST_WARMUP_ROUNDS, BehaviorKind, BehaviorProfile, ScenarioConfig
from .dataset import Dataset, accuracy, generate_dataset, label_rows
from .simulator import SimResult, run_scenario


# classifier


@dataclass(frozen=True)
class ClassifierReport:
    seed: int
    accuracy: float
    test_logloss: float
    train_logloss: float
    seconds: float
    confusion: tuple[int, int, int, int]  # tp, tn, fp, fn


def evaluate_classifier(
    seed: int,
    n: int = 1000,
    test_fraction: float = 0.6,
    params: TreeParams = DEFAULT_TREE_PARAMS,
) -> tuple[ClassifierReport, BoostedEnsemble]:
    train, test = generate_dataset(n, seed).split(test_fraction)
    start = time.perf_counter()
    model = train_classifier(train.X, train.y, params)
    seconds = time.perf_counter() - start
    prob = model.predict_proba(test.X)
    pred = (prob >= 0.5).astype(int)
    tp = int(np.sum((pred == 1) & (test.y == 1)))
    tn = int(np.sum((pred == 0) & (test.y == 0)))
    fp = int(np.sum((pred == 1) & (test.y == 0)))
    fn = int(np.sum((pred == 0) & (test.y == 1)))
    report = ClassifierReport(
        seed,
        accuracy(pred, test.y),
        logloss(test.y, prob),
        model.train_logloss[-1],
        seconds,
        (tp, tn, fp, fn),
    )
    return report, model


# Flip points sit in a sparse corner of feature space (high peers, few
# blocks, low trust), so the flip-point model is fit on many stacked
# networks with a faster learning rate and binned splits.
FLIP_MODEL_NETWORKS = 100
FLIP_TREE_PARAMS = TreeParams(learning_rate=0.1, max_depth=6, rounds=500, max_bins=255)


def stacked_dataset(n_networks: int, n: int = 1000, seed: int = 0) -> Dataset:
    parts = [generate_dataset(n, seed * 100_003 + k) for k in range(n_networks)]
    return Dataset(np.vstack([p.X for p in parts]), np.concatenate([p.y for p in parts]), n)


def train_flip_model(seed: int = 0, n_networks: int = FLIP_MODEL_NETWORKS) -> BoostedEnsemble:
    data = stacked_dataset(n_networks, seed=seed)
    return train_classifier(data.X, data.y, FLIP_TREE_PARAMS)


SWEEPS = {
    "peers": (1, np.arange(0.0, 1000.0)),
    "blocks": (2, np.arange(0.0, MAX_BLOCKS + 1.0)),
    "trust": (0, np.round(np.arange(0.0, MAX_TRUST_SCALED + 1e-9, 0.01), 2)),
}


def flip_point(predict, feature: str) -> float | None:
    """First sweep value at which the baseline node is labelled a candidate."""
    col, values = SWEEPS[feature]
    X = np.tile(np.asarray(BASELINE, dtype=float), (len(values), 1))
    X[:, col] = values
    hits = np.nonzero(np.asarray(predict(X)) == 1)[0]
    return float(values[hits[0]]) if len(hits) else None


def evaluation_grid(n: int = 1000) -> np.ndarray:
    """10 x 10 x 10 x 2 grid over (trust_scaled, peers, blocks, voteout)."""
    t = np.linspace(0, MAX_TRUST_SCALED, 10)
    p = np.round(np.linspace(0, n - 1, 10))
    b = np.round(np.linspace(0, MAX_BLOCKS, 10))
    mesh = np.meshgrid(t, p, b, [0.0, 1.0], indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def oracle_predict(n: int = 1000):
    return lambda X: label_rows(np.asarray(X), n)


# trust dynamics of honest vs malicious reviewers


@dataclass(frozen=True)
class Fig7Config:
    seed: int = 0
    iterations: int = 10
    n_honest: int = 2
    n_malicious: int = 2
    # untracked honest reviewers that make up the rest of the committee
    n_background: int = 26
    flip_prob: float = 0.5
    warmup: int = HONEST_WARMUP_ROUNDS
    p_fa: float = 0.02
    p_md: float = 0.02
    p_work_good: float = 0.8
    alpha: float = 0.5
    latency: float = 0.0


@dataclass
class Fig7Result:
    honest: list[int]
    malicious: list[int]
    # trajectories[node][k] = trust after review round k
    trajectories: dict[int, list[float]] = field(default_factory=dict)

    def mean(self, nodes, k: int = -1) -> float:
        return float(np.mean([self.trajectories[n][k] for n in nodes]))

    @property
    def separated(self) -> bool:
        return self.mean(self.honest) > self.mean(self.malicious)


def run_fig7(cfg: Fig7Config = Fig7Config()) -> Fig7Result:
    """Trust of tracked honest and malicious reviewers over repeated reviews.

    Malicious reviewers behave honestly for ``warmup`` rounds, then report
    the posterior of the opposite signal with probability ``flip_prob``.
    Block quality is drawn from the world prior each round.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_honest + cfg.n_malicious + cfg.n_background
    honest = list(range(cfg.n_honest))
    malicious = list(range(cfg.n_honest, cfg.n_honest + cfg.n_malicious))
    followers = [
        NodeProfile(node=i, peers=n - 1, p_fa=cfg.p_fa, p_md=cfg.p_md, latency=cfg.latency) for i in range(n)
    ]
    world = WorldPrior(cfg.p_work_good)
    block = make_block([Transaction(0, TxClass.NORMAL, 0.0, 0.0)], leader=n, height=1, now=0.0)
    result = Fig7Result(honest, malicious, {i: [] for i in honest + malicious})
    for k in range(cfg.iterations):
        quality = ACCEPT_SIGNAL if rng.random() < cfg.p_work_good else REJECT_SIGNAL
        flip = {i: (cfg.flip_prob if k >= cfg.warmup else 0.0) for i in malicious}
        rr = review_round(block, followers, world, quality, rng, alpha=cfg.alpha, flip_prob=flip)
        followers = rr.profiles
        for p in followers:
            if p.node in result.trajectories:
                result.trajectories[p.node].append(p.trust)
    return result


# promptness and history-weight sweep


@dataclass(frozen=True)
class Fig8Config:
    core: float = 0.9  # history term carried in, above the fresh score
    score: float = 0.6
    alpha: float = 0.5
    promptness: float = 0.8
    promptness_grid: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    alpha_grid: tuple[float, ...] = tuple(np.round(np.linspace(0.0, 1.0, 11), 2))


@dataclass(frozen=True)
class Fig8Result:
    promptness_curve: list[tuple[float, float]]
    alpha_curve: list[tuple[float, float]]


def run_fig8(cfg: Fig8Config = Fig8Config()) -> Fig8Result:
    prompt = [
        (x, update_trust(cfg.core, cfg.score, cfg.alpha, 1.0 - x)[0]) for x in cfg.promptness_grid
    ]
    beta = 1.0 - cfg.promptness
    alph = [(a, update_trust(cfg.core, cfg.score, a, beta)[0]) for a in cfg.alpha_grid]
    return Fig8Result(prompt, alph)


# attacks


def attack_config(scenario: str, seed: int = 0, **overrides) -> ScenarioConfig:
    """Ready-made scenarios. The attacker is node 0 and leads the first term."""
    base = dict(n_nodes=10, seed=seed, duration=120.0, tx_rate_normal=1.0, tx_rate_priority=0.1)
    if scenario == "empty-block":
        base.update(behaviors={0: BehaviorProfile(BehaviorKind.EMPTY_BLOCK)}, initial_leader=0)
    elif scenario == "laggard":
        base.update(
            behaviors={0: BehaviorProfile(BehaviorKind.LAZY_LEADER, delay=3.0)},
            initial_leader=0,
            tx_rate_priority=0.5,
        )
    elif scenario == "collusion":
        colluders = {i: BehaviorProfile(BehaviorKind.COLLUDER, group_id=1) for i in range(1, 5)}
        base.update(behaviors=colluders)
    else:
        raise ValueError(f"unknown attack scenario {scenario!r}")
    base.update(overrides)
    return ScenarioConfig(**base)


def run_attack(scenario: str, seed: int = 0, **overrides) -> SimResult:
    return run_scenario(attack_config(scenario, seed, **overrides))


@dataclass(frozen=True)
class CollusionReport:
    rounds: int
    flipped: int
    colluder_fraction: float

    @property
    def flip_rate(self) -> float:
        return self.flipped / self.rounds


def collusion_flip_rate(
    n_followers: int,
    n_colluders: int,
    seeds: range = range(30),
    rounds: int = 20,
    *,
    p_fa: float = 0.1,
    p_md: float = 0.1,
    p_work_good: float = 0.8,
    alpha: float = 0.5,
    d_min: float = 0.33,
    d_max: float = 0.67,
    latency_range: tuple[float, float] = (0.1, 0.5),
) -> CollusionReport:
    """Share of verdicts that a colluding group changes.

    Each seed runs the same review rounds twice, once with the group
    inverting every posterior and once with everybody honest. The review
    draws are identical in both, so any verdict difference is caused by the
    colluders.
    """
    flipped = total = 0
    colluders = range(n_followers - n_colluders, n_followers)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        start = [NodeProfile(node=i, peers=n_followers, p_fa=p_fa, p_md=p_md) for i in range(n_followers)]
        honest, attacked = list(start), list(start)
        block = make_block([Transaction(0, TxClass.NORMAL, 0.0, 0.0)], leader=n_followers, height=1, now=0.0)
        world = WorldPrior(p_work_good)
        for _ in range(rounds):
            quality = ACCEPT_SIGNAL if rng.random() < p_work_good else REJECT_SIGNAL
            lat = dict(enumerate(rng.uniform(*latency_range, size=n_followers)))
            round_seed = int(rng.integers(2**63))
            kw = dict(alpha=alpha, d_min=d_min, d_max=d_max, latencies=lat)
            a = review_round(block, honest, world, quality, round_seed, **kw)
            b = review_round(
                block, attacked, world, quality, round_seed, flip_prob={i: 1.0 for i in colluders}, **kw
            )
            honest, attacked = a.profiles, b.profiles
            total += 1
            flipped += a.verdict.outcome is not b.verdict.outcome
    return CollusionReport(total, flipped, n_colluders / n_followers)
