"""Synthetic node populations labelled by the calibrated oracle."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..election import (
    MAX_BLOCKS,
    MAX_TRUST_SCALED,
    FeatureVector,
    calibrate_oracle,
    oracle_label,
)
from ..errors import ContractViolation
from ..gbdt import BoostedEnsemble, TreeParams, train_classifier

VOTEOUT_RATE = 0.15


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray  # columns: trust_scaled, peers, blocks, voteout
    y: np.ndarray
    n_nodes: int

    def __len__(self) -> int:
        return len(self.y)

    def split(self, test_fraction: float) -> tuple["Dataset", "Dataset"]:
        """Leading rows train, trailing rows test (rows are already shuffled)."""
        n_test = int(round(len(self) * test_fraction))
        cut = len(self) - n_test
        return (
            Dataset(self.X[:cut], self.y[:cut], self.n_nodes),
            Dataset(self.X[cut:], self.y[cut:], self.n_nodes),
        )


def label_rows(X: np.ndarray, n_nodes: int) -> np.ndarray:
    oracle = calibrate_oracle(n_nodes)
    return np.array(
        [oracle_label(oracle, FeatureVector(float(t), int(p), int(b), int(v))) for t, p, b, v in X],
        dtype=int,
    )


def generate_dataset(n: int, seed: int, rows: int | None = None) -> Dataset:
    """Features for a network of ``n`` nodes, one row per node unless ``rows`` says otherwise.

    peers ~ U{1..n-1}, blocks ~ U{0..50}, trust_scaled ~ U[0, 10],
    voteout ~ Bernoulli(0.15); labels come from the oracle calibrated for ``n``.
    """
    if n < 10:
        raise ContractViolation(f"need n >= 10, got {n}")
    rows = n if rows is None else rows
    rng = np.random.default_rng(seed)
    peers = rng.integers(1, n, size=rows)
    blocks = rng.integers(0, MAX_BLOCKS + 1, size=rows)
    trust = rng.uniform(0.0, MAX_TRUST_SCALED, size=rows)
    voteout = (rng.random(rows) < VOTEOUT_RATE).astype(int)
    X = np.column_stack([trust, peers, blocks, voteout]).astype(float)
    return Dataset(X, label_rows(X, n), n)


def accuracy(predictions, labels) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ContractViolation(f"length mismatch: {predictions.shape} vs {labels.shape}")
    if predictions.size == 0:
        raise ContractViolation("accuracy of an empty prediction set")
    return float(np.mean(predictions == labels))


# The simulator only needs a sensible ranking, so it trains a lighter model.
SIM_MODEL_SEED = 20240
SIM_MODEL_ROWS = 4000
SIM_TREE_PARAMS = TreeParams(learning_rate=0.1, max_depth=6, rounds=200)


@lru_cache(maxsize=16)
def simulation_model(n_nodes: int) -> BoostedEnsemble:
    data = generate_dataset(max(n_nodes, 10), SIM_MODEL_SEED, rows=SIM_MODEL_ROWS)
    return train_classifier(data.X, data.y, SIM_TREE_PARAMS)
