"""Acceptance criteria 1-11, one test each, at the stated tolerances.

Each test prints one PASS/FAIL line; the full list is repeated in the
pytest terminal summary. Run directly with ``python3 tests/test_acceptance.py``.
"""
import sys
import time

import numpy as np
import pytest

from prioritychain.core import NodeProfile, Transaction, TxClass, make_block
from prioritychain.election import ElectionConfig, ElectionOutcome, run_election
from prioritychain.engine import (
    BlockBuilt,
    Elected,
    EventKind,
    Phase,
    RecordVoteOut,
    RoundState,
    RunElection,
    VerdictIn,
    distribute_incentives,
    serialize_trace,
    step,
)
from prioritychain.peer_prediction import (
    Outcome,
    WorldPrior,
    aggregate,
    posterior_belief,
    prior_belief,
    quadratic_score,
    signal_probability,
)
from prioritychain.sim.checks import normal_wait_violations, priority_zero_wait_violations
from prioritychain.sim.config import ScenarioConfig
from prioritychain.sim.dataset import simulation_model
from prioritychain.sim.experiments import (
    Fig7Config,
    Fig8Config,
    attack_config,
    collusion_flip_rate,
    evaluate_classifier,
    evaluation_grid,
    flip_point,
    oracle_predict,
    run_fig7,
    run_fig8,
    train_flip_model,
)
from prioritychain.sim.metrics import file_digest, write_metrics
from prioritychain.sim.simulator import run_scenario

D_MIN, D_MAX = 0.33, 0.67


def test_criterion_01_classifier_accuracy(criterion):
    rec = criterion(1, "classifier accuracy >= 0.97, logloss <= 0.10, < 60 s (5 seeds)")
    reports = [evaluate_classifier(seed)[0] for seed in range(5)]
    acc = np.mean([r.accuracy for r in reports])
    ll = np.mean([r.test_logloss for r in reports])
    slowest = max(r.seconds for r in reports)
    ok = acc >= 0.97 and ll <= 0.10 and slowest < 60
    assert rec(ok, f"mean accuracy {acc:.4f}, mean logloss {ll:.4f}, slowest fit {slowest:.1f} s"), (acc, ll)


def test_criterion_02_flip_points(criterion):
    rec = criterion(2, "flip points: oracle exact, model within 2% of range, vote-out -> follower >= 99%")
    oracle = oracle_predict(1000)
    exact = {f: flip_point(oracle, f) for f in ("peers", "blocks", "trust")}
    oracle_ok = exact == {"peers": 980.0, "blocks": 15.0, "trust": 3.0}
    model = train_flip_model()
    predict = lambda X: (model.predict_proba(X) >= 0.5).astype(int)  # noqa: E731
    flips = {f: flip_point(predict, f) for f in ("peers", "blocks", "trust")}
    tol = {"peers": 20, "blocks": 1, "trust": 0.2}
    model_ok = all(flips[f] is not None and abs(flips[f] - exact[f]) <= tol[f] + 1e-9 for f in tol)
    grid = evaluation_grid(1000)
    voted = grid[grid[:, 3] == 1]
    follower_share = float(np.mean(predict(voted) == 0))
    ok = oracle_ok and model_ok and follower_share >= 0.99
    detail = f"oracle {exact}, model {flips}, vote-out follower share {follower_share:.4f}"
    assert rec(ok, detail), detail


def test_criterion_03_scoring_rule(criterion):
    rec = criterion(3, "quadratic score matches closed form to 1e-15 and is proper")
    ys = np.linspace(0, 1, 101)
    err = max(
        max(abs(quadratic_score(float(y), 1) - (2 * y - y * y)), abs(quadratic_score(float(y), 0) - (1 - y * y)))
        for y in ys
    )
    proper = True
    for q in ys:
        expected = [q * quadratic_score(float(y), 1) + (1 - q) * quadratic_score(float(y), 0) for y in ys]
        proper &= abs(ys[int(np.argmax(expected))] - q) <= 0.01
    ok = err <= 1e-15 and proper
    assert rec(ok, f"max error {err:.2e}, argmax within 0.01 of q for all 101 q: {proper}"), err


def test_criterion_04_belief_consistency(criterion):
    rec = criterion(4, "total probability within 1e-12 on 1000 points, strict posterior ordering")
    worst, ordered, points = 0.0, True, 0
    for p_fa in np.linspace(0.0, 0.45, 10):
        for p_md in np.linspace(0.0, 0.45, 10):
            for q in np.linspace(0.05, 0.95, 10):
                i = NodeProfile(node=0, p_fa=float(p_fa), p_md=float(p_md))
                j = NodeProfile(node=1, p_fa=float(p_md), p_md=float(p_fa))
                w = WorldPrior(float(q))
                prior = prior_belief(i, j, w)
                pa, pr = posterior_belief(i, j, w, "a"), posterior_belief(i, j, w, "r")
                mix = pa * signal_probability(i, w, "a") + pr * signal_probability(i, w, "r")
                worst = max(worst, abs(mix - prior))
                ordered &= pa > prior > pr
                points += 1
    ok = points == 1000 and worst <= 1e-12 and ordered
    assert rec(ok, f"{points} points, worst gap {worst:.2e}, strict ordering {ordered}"), worst


def test_criterion_05_priority_zero_wait(criterion):
    rec = criterion(5, "priority zero-wait and normal wait bound, 10 honest seeds, < 30 s each")
    pri_bad = nor_bad = 0
    slowest = 0.0
    simulation_model(10)  # one-off model fit, not part of a scenario run
    for seed in range(10):
        start = time.perf_counter()
        res = run_scenario(ScenarioConfig(n_nodes=10, seed=seed))
        slowest = max(slowest, time.perf_counter() - start)
        pri_bad += len(priority_zero_wait_violations(res))
        nor_bad += len(normal_wait_violations(res))
    ok = pri_bad == 0 and nor_bad == 0 and slowest < 30
    detail = f"priority misses {pri_bad}, normal over-waits {nor_bad}, slowest run {slowest:.1f} s"
    assert rec(ok, detail), detail


def test_criterion_06_trust_separation(criterion):
    rec = criterion(6, "honest trust above malicious after 10 rounds in >= 28 of 30 runs")
    separated = sum(run_fig7(Fig7Config(seed=s)).separated for s in range(30))
    assert rec(separated >= 28, f"{separated}/30 runs separated"), separated


def test_criterion_07_promptness_and_history(criterion):
    rec = criterion(7, "trust rises with promptness, falls with alpha when history > score")
    cfg = Fig8Config()
    res = run_fig8(cfg)
    prompt = np.array([t for _, t in res.promptness_curve])
    alpha = np.array([t for _, t in res.alpha_curve])
    ok = cfg.core > cfg.score and np.all(np.diff(prompt) > 0) and np.all(np.diff(alpha) < 0)
    detail = f"promptness {prompt.min():.3f}..{prompt.max():.3f}, alpha {alpha.max():.3f}..{alpha.min():.3f}"
    assert rec(ok, detail), detail


def test_criterion_08_vote_out_state_machine(criterion):
    rec = criterion(8, "forced vote-out and retry paths")
    cands = (4, 7, 9)
    block = make_block([Transaction(0, TxClass.NORMAL, 0.1, 0.0)], leader=4, height=1, now=1.0)
    trust = {k: 1.5 for k in range(6)}
    s, _, _ = step(RoundState(), Elected(ElectionOutcome(4, 3, cands, frozenset(cands))), 0.0)
    s, _, _ = step(s, BlockBuilt(block), 1.0)

    # D <= d_min
    v = aggregate({k: int(k == 0) for k in range(6)}, trust, D_MIN, D_MAX)
    out, events, cmds = step(s, VerdictIn(v, trust, block), 2.0)
    voted = v.D <= D_MIN and events[-1].kind is EventKind.LEADER_VOTED_OUT and out.phase is Phase.ELECTING
    voted &= RecordVoteOut(4) in cmds and RunElection(True, 4, cands) in cmds
    profiles = [NodeProfile(node=i, peers=29, trust=1.0 + 0.01 * i) for i in range(30)]
    profiles[4] = NodeProfile(node=4, peers=29, trust=1.0, voteouts=1)
    election = run_election(
        profiles, ElectionConfig(3), simulation_model(30), b"x", current_leader=4, voted_out=True,
        previous_candidates=cands,
    )
    executor_ok = election.executor == max((p for p in profiles if p.node in cands), key=lambda p: p.trust).node
    reward = distribute_incentives(profiles, {}, {4: 0.5}, 100.0).leader_rewards.get(4, 0.0)
    sim = run_scenario(attack_config("empty-block", 0))
    sim_reward = sim.incentives.leader_rewards.get(0, 0.0)

    # d_min < D < d_max
    v = aggregate({k: int(k < 3) for k in range(6)}, trust, D_MIN, D_MAX)
    out, events, cmds = step(s, VerdictIn(v, trust, block), 2.0)
    retry = (
        D_MIN < v.D < D_MAX
        and v.outcome is Outcome.REJECT_RETRY
        and out.phase is Phase.BUILDING
        and out.leader == 4
        and out.blocks_done_this_term == s.blocks_done_this_term
        and events[-1].kind is EventKind.BLOCK_REJECTED_RETRY
    )
    ok = voted and executor_ok and reward == 0.0 and sim_reward == 0.0 and retry
    detail = (
        f"vote-out {voted}, executor {election.executor} is argmax-T {executor_ok}, "
        f"voted-out reward {reward} (sim {sim_reward}), retry keeps b_cb {retry}"
    )
    assert rec(ok, detail), detail


def test_criterion_09_empty_block_attack(criterion):
    rec = criterion(9, "empty-block leader voted out at first proposal, zero accepted, 10 seeds")
    failures = []
    for seed in range(10):
        res = run_scenario(attack_config("empty-block", seed))
        trace = res.trace
        first = next(k for k, e in enumerate(trace) if e.kind is EventKind.BLOCK_PROPOSED and e.get("leader") == "0")
        after = [e.kind for e in trace[first + 1:first + 3]]
        accepted = sum(1 for e in trace if e.kind is EventKind.BLOCK_ACCEPTED and e.get("leader") == "0")
        if after != [EventKind.VERDICT_REACHED, EventKind.LEADER_VOTED_OUT] or accepted:
            failures.append(seed)
    assert rec(not failures, f"failing seeds {failures or 'none'}"), failures


def test_criterion_10_collusion_resistance(criterion):
    rec = criterion(10, "colluding minority (< 50%) flips < 5% of verdicts, 30 seeds")
    rates = {k: collusion_flip_rate(10, k).flip_rate for k in range(1, 5)}
    ok = all(r < 0.05 for r in rates.values())
    detail = "flip rate by colluders of 10: " + ", ".join(f"{k}: {r:.3f}" for k, r in rates.items())
    assert rec(ok, detail), detail


def test_criterion_11_determinism(criterion, tmp_path):
    rec = criterion(11, "same seed gives hash-identical metrics and trace")
    scenarios = {
        "honest": ScenarioConfig(n_nodes=10, seed=7, duration=120.0),
        **{name: attack_config(name, 7) for name in ("empty-block", "collusion", "laggard")},
    }
    mismatched = []
    for name, cfg in scenarios.items():
        digests = []
        for run in range(2):
            out = tmp_path / f"{name}-{run}"
            res = run_scenario(cfg)
            paths = write_metrics(res.metrics, out)
            trace = out / "trace.log"
            trace.write_text(serialize_trace(res.trace))
            digests.append(file_digest([*paths, trace]))
        if digests[0] != digests[1]:
            mismatched.append(name)
    ok = not mismatched
    assert rec(ok, f"{len(scenarios)} scenarios replayed, mismatches {mismatched or 'none'}"), mismatched


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
