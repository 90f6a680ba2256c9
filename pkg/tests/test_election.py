from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from prioritychain.core import NodeProfile
from prioritychain.election import (
    CANDIDATE,
    FOLLOWER,
    ElectionConfig,
    FeatureVector,
    calibrate_oracle,
    choose_executor,
    default_candidate_count,
    extract_features,
    mtrng_draw,
    oracle_label,
    predict_candidates,
    read_dataset,
    run_election,
    write_dataset,
)
from prioritychain.errors import ContractViolation
from prioritychain.sim.dataset import simulation_model


@pytest.fixture(scope="module")
def model():
    return simulation_model(1000)


def test_extract_features():
    f = extract_features(NodeProfile(node=0, trust=0.2, peers=800), blocks_generated=5)
    assert (f.trust_scaled, f.peers, f.blocks_generated, f.voteout_flag) == (1.0, 800, 5, 0)
    assert extract_features(NodeProfile(node=0, trust=2.0), 0).trust_scaled == 10
    assert extract_features(NodeProfile(node=0, voteouts=3), 0).voteout_flag == 1


def test_calibration_for_thousand_nodes():
    o = calibrate_oracle(1000)
    assert o.w_trust == 1 and o.w_blocks == 1
    assert o.w_peers == Fraction(999, 900)
    assert float(o.w_peers) == pytest.approx(1.11, abs=0.01)
    assert o.theta == Fraction(58, 45)
    assert float(o.theta) == pytest.approx(1.2889, abs=1e-4)
    assert o.w_voteout > o.max_positive_contribution()
    assert o.w_voteout >= 2.5


def test_oracle_flip_points_are_exact():
    o = calibrate_oracle(1000)
    assert oracle_label(o, FeatureVector(1, 800, 5, 0)) == FOLLOWER
    assert oracle_label(o, FeatureVector(1, 980, 5, 0)) == CANDIDATE
    assert oracle_label(o, FeatureVector(1, 979, 5, 0)) == FOLLOWER
    assert oracle_label(o, FeatureVector(1, 800, 15, 0)) == CANDIDATE
    assert oracle_label(o, FeatureVector(1, 800, 14, 0)) == FOLLOWER
    assert oracle_label(o, FeatureVector(3.0001, 800, 5, 0)) == CANDIDATE
    assert oracle_label(o, FeatureVector(2.9999, 800, 5, 0)) == FOLLOWER


def test_voteout_never_helps():
    o = calibrate_oracle(1000)
    for t in np.linspace(0, 10, 6):
        for p in (0, 500, 999):
            for b in (0, 25, 50):
                assert oracle_label(o, FeatureVector(float(t), p, b, 1)) == FOLLOWER


def test_calibration_needs_two_nodes():
    with pytest.raises(ContractViolation):
        calibrate_oracle(1)


def test_feature_vector_ranges():
    with pytest.raises(ContractViolation):
        FeatureVector(11, 0, 0, 0)
    with pytest.raises(ContractViolation):
        FeatureVector(1, 0, 0, 2)


def test_voteout_node_ranked_last(model):
    profiles = [NodeProfile(node=i, peers=999) for i in range(20)]
    profiles[7] = NodeProfile(node=7, peers=999, voteouts=1)
    ranked = predict_candidates(model, profiles, 2)
    assert 7 not in ranked
    full = sorted(range(20), key=lambda k: -model.predict_proba(
        np.array([extract_features(p, 0).as_row() for p in profiles]))[k])
    assert full[-1] == 7


def test_dominant_node_wins_on_two(model):
    profiles = [NodeProfile(node=0, trust=0.4, peers=1), NodeProfile(node=1, trust=1.8, peers=1)]
    assert predict_candidates(model, profiles, 1, {0: 0, 1: 40}) == [1]


def test_candidate_cap():
    profiles = [NodeProfile(node=i) for i in range(20)]
    with pytest.raises(ContractViolation):
        predict_candidates(None, profiles, 3)


def test_ties_break_by_trust_then_id(model):
    profiles = [NodeProfile(node=i, peers=999) for i in range(30)]
    assert predict_candidates(model, profiles, 3) == [0, 1, 2]


def test_default_candidate_count():
    assert default_candidate_count(1000) == 50
    assert default_candidate_count(40) == 3
    assert default_candidate_count(10) == 1


def test_mtrng_degenerate_and_deterministic():
    out = mtrng_draw(b"x", 0, [4], 1)
    assert (out.leader, out.budget_b) == (4, 1)
    a = mtrng_draw(b"pool", 3, [1, 2, 3], 10, last_height=7)
    b = mtrng_draw(b"pool", 3, [1, 2, 3], 10, last_height=7)
    assert a == b
    assert a.knowledge_set == frozenset(a.candidate_list)
    assert a.leader in a.candidate_list and 1 <= a.budget_b <= 10


def test_mtrng_depends_on_every_input():
    base = mtrng_draw(b"pool", 0, list(range(50)), 1000, 0)
    others = [
        mtrng_draw(b"poo1", 0, list(range(50)), 1000, 0),
        mtrng_draw(b"pool", 1, list(range(50)), 1000, 0),
        mtrng_draw(b"pool", 0, list(range(50)), 1000, 1),
    ]
    assert all((o.leader, o.budget_b) != (base.leader, base.budget_b) for o in others)


def test_mtrng_errors():
    with pytest.raises(ContractViolation):
        mtrng_draw(b"", 0, [], 3)
    with pytest.raises(ContractViolation):
        mtrng_draw(b"", 0, [1], 0)


def test_mtrng_is_uniform():
    counts = np.zeros(5)
    budgets = np.zeros(4)
    for salt in range(10_000):
        out = mtrng_draw(b"entropy", salt, [10, 11, 12, 13, 14], 4)
        counts[out.leader - 10] += 1
        budgets[out.budget_b - 1] += 1
    assert np.all(np.abs(counts / 10_000 - 0.2) <= 0.02)
    assert stats.chisquare(counts).pvalue > 0.001
    assert stats.chisquare(budgets).pvalue > 0.001


def test_executor_rules():
    profiles = [NodeProfile(node=i, trust=t) for i, t in enumerate([1.2, 1.9, 1.9, 1.5])]
    assert choose_executor(profiles, current_leader=3, voted_out=False) == 3
    assert choose_executor(profiles, 3, True, previous_candidates=[0, 2, 1, 3]) == 1
    assert choose_executor(profiles, 1, True, previous_candidates=[0, 1]) == 0
    with pytest.raises(ContractViolation):
        choose_executor([], None, False)


def test_run_election_reports_executor(model):
    profiles = [NodeProfile(node=i, peers=29, trust=1.0 + i / 100) for i in range(30)]
    out = run_election(profiles, ElectionConfig(3, 5), model, b"e", current_leader=4, voted_out=True,
                       previous_candidates=(4, 9, 12))
    assert out.executor == 12
    assert out.leader in out.candidate_list and len(out.candidate_list) == 3
    out = run_election(profiles, ElectionConfig(3, 5), model, b"e", current_leader=4)
    assert out.executor == 4


def test_dataset_roundtrip(tmp_path):
    X = np.array([[1.5, 800, 5, 0], [3.25, 10, 0, 1]])
    y = np.array([0, 1])
    path = tmp_path / "d.csv"
    write_dataset(path, X, y)
    assert path.read_text().splitlines()[0] == "trust_scaled,peers,blocks,voteout,label"
    X2, y2 = read_dataset(path)
    assert np.array_equal(X, X2) and np.array_equal(y, y2)
