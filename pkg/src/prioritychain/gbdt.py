"""Gradient-boosted decision trees for binary classification.

Trees are grown level by level with exact greedy split search. Split
statistics for a feature are gathered per (node, distinct value) with a
single ``bincount`` over pre-ranked feature values, so every distinct value
is a candidate threshold. Leaf weights are second-order (Newton) steps on
the binary log-loss, optionally clamped by monotone constraints.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TrainingError

_EPS = 1e-15


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def logloss(y, p) -> float:
    p = np.clip(np.asarray(p, dtype=float), _EPS, 1.0 - _EPS)
    y = np.asarray(y, dtype=float)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass(frozen=True)
class TreeParams:
    learning_rate: float = 0.005
    max_depth: int = 6
    rounds: int = 2000
    min_child_samples: int = 20
    min_child_weight: float = 1e-3
    reg_lambda: float = 0.0
    # quantile-bin features with more distinct values than this; None = exact
    max_bins: int | None = None
    # +1 increasing, -1 decreasing, 0 free; one entry per feature
    monotone: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.rounds < 1:
            raise TrainingError("rounds must be >= 1")
        if self.max_depth < 1:
            raise TrainingError("max_depth must be >= 1")
        if not self.learning_rate > 0:
            raise TrainingError("learning_rate must be > 0")
        if self.max_bins is not None and self.max_bins < 2:
            raise TrainingError("max_bins must be >= 2")


@dataclass(frozen=True)
class RegressionTree:
    """Array-encoded binary tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            feat = self.feature[idx]
            inner = feat >= 0
            if not inner.any():
                return self.value[idx]
            go_left = X[rows, np.maximum(feat, 0)] <= self.threshold[idx]
            nxt = np.where(go_left, self.left[idx], self.right[idx])
            idx = np.where(inner, nxt, idx)


@dataclass
class BoostedEnsemble:
    trees: list[RegressionTree]
    learning_rate: float
    base_score: float
    train_logloss: list[float] = field(default_factory=list)
    eval_logloss: list[float] = field(default_factory=list)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        z = np.full(len(X), self.base_score)
        for tree in self.trees:
            z += self.learning_rate * tree.predict(X)
        return z

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(int)


class _Grower:
    """Grows one tree per call against fixed gradient/hessian vectors."""

    def __init__(self, X: np.ndarray, params: TreeParams):
        self.X = X
        self.p = params
        n, d = X.shape
        # Each rank covers the training values [low, high]; a split after rank
        # k thresholds halfway to the next rank present in the node.
        self.lows, self.highs, self.ranks = [], [], []
        for f in range(d):
            u, r = np.unique(X[:, f], return_inverse=True)
            if params.max_bins is not None and len(u) > params.max_bins:
                qs = np.quantile(X[:, f], np.linspace(0, 1, params.max_bins + 1)[1:-1])
                edges = np.unique(qs)
                r = np.searchsorted(edges, X[:, f], side="left")
                _, r = np.unique(r, return_inverse=True)
                n_bins = r.max() + 1
                lo = np.full(n_bins, np.inf)
                hi = np.full(n_bins, -np.inf)
                np.minimum.at(lo, r, X[:, f])
                np.maximum.at(hi, r, X[:, f])
            else:
                lo = hi = u
            self.lows.append(lo)
            self.highs.append(hi)
            self.ranks.append(r.astype(np.int64).ravel())
        mono = params.monotone or (0,) * d
        if len(mono) != d:
            raise TrainingError(f"monotone has {len(mono)} entries for {d} features")
        self.mono = np.asarray(mono)

    def _objective(self, G, H, w):
        return G * w + 0.5 * (H + self.p.reg_lambda) * w * w

    def _weight(self, G, H, lo, hi):
        return np.clip(-G / (H + self.p.reg_lambda + 1e-300), lo, hi)

    def grow(self, g: np.ndarray, h: np.ndarray) -> tuple[RegressionTree, np.ndarray]:
        p = self.p
        n = len(g)
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(w):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(w)
            return len(value) - 1

        root_w = self._weight(g.sum(), h.sum(), -np.inf, np.inf)
        # per active node: (tree index, lo, hi)
        active = [(new_node(float(root_w)), -np.inf, np.inf)]
        slot = np.zeros(n, dtype=np.int64)  # index into ``active``; -1 when settled
        out = np.full(n, float(root_w))

        for _ in range(p.max_depth):
            if not active:
                break
            K = len(active)
            live = slot >= 0
            s_live = slot[live]
            g_live, h_live = g[live], h[live]
            Gn = np.bincount(s_live, g_live, minlength=K)
            Hn = np.bincount(s_live, h_live, minlength=K)
            Cn = np.bincount(s_live, minlength=K)
            lo = np.array([a[1] for a in active])
            hi = np.array([a[2] for a in active])
            wn = self._weight(Gn, Hn, lo, hi)
            parent_obj = self._objective(Gn, Hn, wn)

            best_gain = np.full(K, 1e-12)
            best = [None] * K
            for f, r in enumerate(self.ranks):
                U = len(self.lows[f])
                if U < 2:
                    continue
                key = s_live * U + r[live]
                gs = np.bincount(key, g_live, minlength=K * U).reshape(K, U)
                hs = np.bincount(key, h_live, minlength=K * U).reshape(K, U)
                cs = np.bincount(key, minlength=K * U).reshape(K, U)
                GL = np.cumsum(gs, axis=1)[:, :-1]
                HL = np.cumsum(hs, axis=1)[:, :-1]
                CL = np.cumsum(cs, axis=1)[:, :-1]
                GR = Gn[:, None] - GL
                HR = Hn[:, None] - HL
                CR = Cn[:, None] - CL
                ok = (
                    (cs[:, :-1] > 0)
                    & (CL >= p.min_child_samples)
                    & (CR >= p.min_child_samples)
                    & (HL >= p.min_child_weight)
                    & (HR >= p.min_child_weight)
                )
                if not ok.any():
                    continue
                wl = self._weight(GL, HL, lo[:, None], hi[:, None])
                wr = self._weight(GR, HR, lo[:, None], hi[:, None])
                if self.mono[f] != 0:
                    ok &= self.mono[f] * (wr - wl) >= 0
                gain = parent_obj[:, None] - self._objective(GL, HL, wl) - self._objective(GR, HR, wr)
                gain = np.where(ok, gain, -np.inf)
                k = np.argmax(gain, axis=1)
                top = gain[np.arange(K), k]
                for node in np.nonzero(top > best_gain)[0]:
                    kk = k[node]
                    # next distinct value actually present in this node
                    nxt = kk + 1 + int(np.argmax(cs[node, kk + 1:] > 0))
                    best_gain[node] = top[node]
                    thr = 0.5 * (self.highs[f][kk] + self.lows[f][nxt])
                    best[node] = (f, thr, float(wl[node, kk]), float(wr[node, kk]))

            next_active = []
            remap = np.full(K, -1, dtype=np.int64)
            split_left = np.zeros(n, dtype=bool)
            for j, (tidx, nlo, nhi) in enumerate(active):
                if best[j] is None:
                    continue
                f, thr, wl, wr = best[j]
                if self.mono[f] > 0:
                    mid = 0.5 * (wl + wr)
                    bounds = ((nlo, min(nhi, mid)), (max(nlo, mid), nhi))
                elif self.mono[f] < 0:
                    mid = 0.5 * (wl + wr)
                    bounds = ((max(nlo, mid), nhi), (nlo, min(nhi, mid)))
                else:
                    bounds = ((nlo, nhi), (nlo, nhi))
                li = new_node(float(np.clip(wl, *bounds[0])))
                ri = new_node(float(np.clip(wr, *bounds[1])))
                feature[tidx], threshold[tidx] = f, thr
                left[tidx], right[tidx] = li, ri
                remap[j] = len(next_active)
                next_active.append((li, *bounds[0]))
                next_active.append((ri, *bounds[1]))
                members = slot == j
                goes_left = members & (self.X[:, f] <= thr)
                split_left |= goes_left
                out[members] = np.where(goes_left[members], value[li], value[ri])

            live_idx = np.nonzero(live)[0]
            new_slot = np.full(n, -1, dtype=np.int64)
            base = remap[slot[live_idx]]
            moved = base >= 0
            moved_idx = live_idx[moved]
            new_slot[moved_idx] = base[moved] + np.where(split_left[moved_idx], 0, 1)
            slot = new_slot
            active = next_active

        tree = RegressionTree(
            feature=np.asarray(feature, dtype=np.int64),
            threshold=np.asarray(threshold, dtype=float),
            left=np.asarray(left, dtype=np.int64),
            right=np.asarray(right, dtype=np.int64),
            value=np.asarray(value, dtype=float),
        )
        return tree, out


def train_classifier(
    X,
    y,
    params: TreeParams | None = None,
    *,
    eval_set: tuple[Sequence, Sequence] | None = None,
) -> BoostedEnsemble:
    """Fit a boosted ensemble to binary labels ``y`` (0/1).

    Training log-loss per round is recorded on the returned ensemble; if
    ``eval_set`` is given its log-loss is tracked alongside.
    """
    params = params or TreeParams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise TrainingError("X must be 2-D with one row per label")
    if not np.isin(y, (0.0, 1.0)).all():
        raise TrainingError("labels must be 0 or 1")
    prior = y.mean()
    if prior in (0.0, 1.0):
        raise TrainingError("training data contains a single class")

    base = float(np.log(prior / (1.0 - prior)))
    grower = _Grower(X, params)
    z = np.full(len(y), base)
    if eval_set is not None:
        Xe = np.asarray(eval_set[0], dtype=float)
        ye = np.asarray(eval_set[1], dtype=float)
        ze = np.full(len(ye), base)
    model = BoostedEnsemble(trees=[], learning_rate=params.learning_rate, base_score=base)
    for _ in range(params.rounds):
        prob = sigmoid(z)
        tree, step = grower.grow(prob - y, prob * (1.0 - prob))
        model.trees.append(tree)
        z += params.learning_rate * step
        model.train_logloss.append(logloss(y, sigmoid(z)))
        if eval_set is not None:
            ze += params.learning_rate * tree.predict(Xe)
            model.eval_logloss.append(logloss(ye, sigmoid(ze)))
    return model
