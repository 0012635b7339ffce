"""C4.5-style decision tree over binary (presence) features.

Splits maximize gain ratio among candidates whose information gain is at
least the average gain; subtrees are pruned bottom-up by replacing them with
a leaf when the pessimistic (upper confidence bound) error estimate of the
leaf does not exceed that of the subtree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np
import scipy.sparse as sp

LEAF = -1


def _entropy(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(p < 1, (1 - p) * np.log2(1 - p), 0.0))
    return np.nan_to_num(h)


def added_errors(n: float, e: float, confidence: float) -> float:
    """Extra errors of the upper confidence limit on a leaf's error rate.

    Same estimate as C4.5: exact binomial bound for e < 1, normal
    approximation with continuity correction otherwise.
    """
    if confidence > 0.5:
        raise ValueError("confidence must be <= 0.5")
    if n <= 0:
        return 0.0
    if e < 1:
        base = n * (1 - confidence ** (1 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1, confidence) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1 - confidence)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (
        1 + z * z / n
    )
    return r * n - e


@dataclass(frozen=True)
class DecisionTree:
    """Flat array tree: node 0 is the root; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    present: np.ndarray  # child index when the feature is active
    absent: np.ndarray
    positives: np.ndarray  # training positives reaching the node
    negatives: np.ndarray
    n_features: int
    fingerprint: str = ""

    @property
    def label(self) -> np.ndarray:
        return self.positives >= self.negatives

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.feature[node] != LEAF:
                stack += [(self.present[node], d + 1), (self.absent[node], d + 1)]
        return best

    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def predict(self, X: sp.csr_matrix) -> np.ndarray:
        X = sp.csr_matrix(X)
        labels = self.label
        out = np.empty(X.shape[0], dtype=bool)
        for r in range(X.shape[0]):
            active = set(X.indices[X.indptr[r]:X.indptr[r + 1]][X.data[X.indptr[r]:X.indptr[r + 1]] != 0])
            node = 0
            while self.feature[node] != LEAF:
                node = self.present[node] if self.feature[node] in active else self.absent[node]
            out[r] = labels[node]
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "present": self.present.tolist(),
            "absent": self.absent.tolist(),
            "positives": self.positives.tolist(),
            "negatives": self.negatives.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d: dict, fingerprint: str = "") -> "DecisionTree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["present"], dtype=np.int64),
            np.asarray(d["absent"], dtype=np.int64),
            np.asarray(d["positives"], dtype=np.int64),
            np.asarray(d["negatives"], dtype=np.int64),
            int(d["n_features"]),
            fingerprint,
        )


def _best_split(Xn: sp.csr_matrix, yn: np.ndarray, min_leaf: int) -> int:
    n = len(yn)
    pos = yn.sum()
    n1 = np.asarray(Xn.sum(axis=0)).ravel()
    p1 = np.asarray(Xn.T @ yn.astype(np.float64)).ravel()
    n0, p0 = n - n1, pos - p1
    valid = (n1 >= min_leaf) & (n0 >= min_leaf)
    if not valid.any():
        return LEAF
    cand = np.flatnonzero(valid)
    n1c, n0c, p1c, p0c = n1[cand], n0[cand], p1[cand], p0[cand]
    h_node = _entropy(np.array([pos / n]))[0]
    cond = (n1c * _entropy(p1c / n1c) + n0c * _entropy(p0c / n0c)) / n
    gain = h_node - cond
    split_info = _entropy(n1c / n)
    informative = gain > 1e-12
    if informative.any():
        # C4.5 restricts gain-ratio ranking to splits with at least average gain
        keep = informative & (gain >= gain[informative].mean() - 1e-3)
    else:
        # Nothing informative (e.g. XOR): take any admissible split so that
        # unpruned trees still fit consistent data exactly.
        keep = np.ones_like(informative)
    ratio = np.where(keep, gain / np.maximum(split_info, 1e-12), -np.inf)
    return int(cand[int(np.argmax(ratio))])


def train_tree(
    X: sp.csr_matrix, y: np.ndarray, confidence: float = 0.25, min_leaf: int = 2,
    prune: bool = True, fingerprint: str = "",
) -> DecisionTree:
    X = sp.csr_matrix(X, dtype=np.float64)
    X.data = (X.data != 0).astype(np.float64)
    y = np.asarray(y, dtype=bool)
    if X.shape[0] == 0:
        raise ValueError("cannot train a tree on zero instances")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    feature, present, absent, positives, negatives = [], [], [], [], []

    def new_node(idx: np.ndarray) -> int:
        feature.append(LEAF)
        present.append(LEAF)
        absent.append(LEAF)
        p = int(y[idx].sum())
        positives.append(p)
        negatives.append(len(idx) - p)
        return len(feature) - 1

    stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        p, q = positives[node], negatives[node]
        if p == 0 or q == 0 or len(idx) < 2 * min_leaf:
            continue
        Xn = X[idx]
        f = _best_split(Xn, y[idx], min_leaf)
        if f == LEAF:
            continue
        mask = np.asarray(Xn[:, f].todense()).ravel() > 0
        feature[node] = f
        present[node] = new_node(idx[mask])
        absent[node] = new_node(idx[~mask])
        stack.append((present[node], idx[mask]))
        stack.append((absent[node], idx[~mask]))

    arrays = [np.asarray(a, dtype=np.int64) for a in (feature, present, absent, positives, negatives)]
    if prune:
        _prune(*arrays, confidence=confidence)
    return _compact(DecisionTree(*arrays, n_features=X.shape[1], fingerprint=fingerprint))


def _prune(feature, present, absent, positives, negatives, confidence: float) -> None:
    """Subtree replacement, children before parents (reverse creation order)."""
    n = len(feature)
    est = np.zeros(n)
    errs = np.zeros(n)
    for node in range(n - 1, -1, -1):
        total = positives[node] + negatives[node]
        leaf_err = min(positives[node], negatives[node])
        leaf_est = leaf_err + added_errors(total, leaf_err, confidence)
        if feature[node] == LEAF:
            est[node], errs[node] = leaf_est, leaf_err
            continue
        a, b = present[node], absent[node]
        sub_est = est[a] + est[b]
        sub_err = errs[a] + errs[b]
        if sub_err >= leaf_err - 1e-3 or leaf_est <= sub_est + 0.1:
            feature[node] = LEAF
            est[node], errs[node] = leaf_est, leaf_err
        else:
            est[node], errs[node] = sub_est, sub_err


def _compact(tree: DecisionTree) -> DecisionTree:
    order, stack = [], [0]
    while stack:
        node = stack.pop()
        order.append(node)
        if tree.feature[node] != LEAF:
            stack += [tree.absent[node], tree.present[node]]
    remap = {old: new for new, old in enumerate(order)}
    old = np.asarray(order)
    feature = tree.feature[old].copy()
    present = np.array([remap[tree.present[o]] if feature[i] != LEAF else LEAF for i, o in enumerate(old)], dtype=np.int64)
    absent = np.array([remap[tree.absent[o]] if feature[i] != LEAF else LEAF for i, o in enumerate(old)], dtype=np.int64)
    return DecisionTree(
        feature, present, absent, tree.positives[old].copy(), tree.negatives[old].copy(),
        tree.n_features, tree.fingerprint,
    )
