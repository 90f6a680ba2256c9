import numpy as np
import pytest

from prioritychain.errors import TrainingError
from prioritychain.gbdt import TreeParams, logloss, sigmoid, train_classifier


def toy(n=300, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, size=(n, 3))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0.8).astype(int)
    return X, y


def test_single_class_is_rejected():
    X = np.zeros((5, 2))
    with pytest.raises(TrainingError):
        train_classifier(X, np.ones(5))


def test_bad_params():
    with pytest.raises(TrainingError):
        TreeParams(rounds=0)
    with pytest.raises(TrainingError):
        TreeParams(learning_rate=0.0)


def test_training_logloss_nonincreasing():
    X, y = toy()
    model = train_classifier(X, y, TreeParams(learning_rate=0.05, max_depth=3, rounds=200))
    diffs = np.diff(model.train_logloss)
    assert diffs.max() <= 1e-9
    assert model.train_logloss[-1] < 0.2


def test_base_score_is_prior_log_odds():
    X, y = toy()
    model = train_classifier(X, y, TreeParams(rounds=1))
    p = y.mean()
    assert model.base_score == pytest.approx(np.log(p / (1 - p)))


def test_probabilities_in_open_interval_and_depth_cap():
    X, y = toy()
    model = train_classifier(X, y, TreeParams(learning_rate=0.1, max_depth=2, rounds=50))
    prob = model.predict_proba(X)
    assert np.all((prob > 0) & (prob < 1))
    assert max(t.depth for t in model.trees) <= 2
    assert np.allclose(prob, sigmoid(model.decision_function(X)))


def test_monotone_constraint_holds():
    rng = np.random.default_rng(3)
    X = rng.uniform(0, 1, size=(400, 2))
    # noisy labels that a free model would fit non-monotonically
    y = ((X[:, 0] > 0.5) ^ (rng.random(400) < 0.2)).astype(int)
    model = train_classifier(
        X, y, TreeParams(learning_rate=0.1, max_depth=4, rounds=100, min_child_samples=2, monotone=(1, 0))
    )
    sweep = np.column_stack([np.linspace(0, 1, 201), np.full(201, 0.3)])
    z = model.decision_function(sweep)
    assert np.all(np.diff(z) >= -1e-12)


def test_binning_matches_exact_when_bins_cover_values():
    rng = np.random.default_rng(1)
    X = rng.integers(0, 20, size=(300, 2)).astype(float)
    y = (X[:, 0] + X[:, 1] > 20).astype(int)
    p = dict(learning_rate=0.1, max_depth=3, rounds=30)
    exact = train_classifier(X, y, TreeParams(**p))
    binned = train_classifier(X, y, TreeParams(max_bins=64, **p))
    assert np.allclose(exact.decision_function(X), binned.decision_function(X))


def test_binned_training_still_fits():
    X, y = toy(2000)
    model = train_classifier(X, y, TreeParams(learning_rate=0.1, max_depth=4, rounds=100, max_bins=16))
    assert np.mean(model.predict(X) == y) > 0.95


def test_eval_logloss_tracked():
    X, y = toy()
    model = train_classifier(X[:200], y[:200], TreeParams(rounds=20), eval_set=(X[200:], y[200:]))
    assert len(model.eval_logloss) == 20
    assert model.eval_logloss[-1] == pytest.approx(logloss(y[200:], model.predict_proba(X[200:])))
