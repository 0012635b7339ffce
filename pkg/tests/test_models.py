import itertools
import json
import logging
import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import beta

from termnb.models import (
    Ensemble, FingerprintMismatch, LogisticModel, SvmConvergenceError, SvmModel, SvmParams,
    ZeroR, DecisionTree, ensemble_predict, majority_vote, rbf_kernel, train_logistic, train_svm,
    train_tree, train_zeror,
)
from termnb.models.logistic import loss_and_grad
from termnb.models.tree import LEAF, added_errors


def random_binary(rng, n, d, density=0.3):
    return sp.csr_matrix((rng.random((n, d)) < density).astype(float))


# ---------------------------------------------------------------- ZeroR

@pytest.mark.parametrize("pos, neg, expected", [(449, 61, True), (61, 449, False), (5, 5, True), (0, 3, False)])
def test_zeror_majority(pos, neg, expected):
    model = train_zeror([True] * pos + [False] * neg)
    assert model.majority is expected
    assert model.predict(sp.csr_matrix((4, 2))).tolist() == [expected] * 4


def test_zeror_empty():
    with pytest.raises(ValueError):
        train_zeror([])


# ---------------------------------------------------------------- tree

@pytest.mark.parametrize("n, e, published", [(6, 0, 0.206), (9, 0, 0.143), (1, 0, 0.750)])
def test_upper_error_bound_zero_errors(n, e, published):
    # with no observed errors the bound is exact: 1 - cf^(1/n)
    u = (e + added_errors(n, e, 0.25)) / n
    assert u == pytest.approx(1 - 0.25 ** (1 / n), rel=1e-12)
    assert u == pytest.approx(published, abs=5e-4)


@pytest.mark.parametrize("n, e", [(16, 1), (20, 3), (100, 10), (50, 25)])
def test_upper_error_bound_close_to_exact_binomial(n, e):
    # normal approximation vs the exact Clopper-Pearson upper limit
    exact = beta.ppf(0.75, e + 1, n - e)
    approx = (e + added_errors(n, e, 0.25)) / n
    assert abs(approx - exact) < 0.005


def test_upper_bound_rejects_high_confidence():
    with pytest.raises(ValueError):
        added_errors(10, 1, 0.6)


def test_perfect_separator_is_the_root():
    rng = np.random.default_rng(1)
    X = random_binary(rng, 40, 6).tolil()
    y = rng.random(40) < 0.5
    X[:, 3] = y.astype(float).reshape(-1, 1)
    tree = train_tree(X.tocsr(), y)
    assert tree.feature[0] == 3
    assert tree.n_leaves() == 2
    assert (tree.predict(X.tocsr()) == y).all()


def test_single_class_gives_one_leaf():
    X = random_binary(np.random.default_rng(0), 10, 4)
    tree = train_tree(X, np.ones(10, dtype=bool))
    assert tree.n_nodes == 1 and tree.feature[0] == LEAF
    assert tree.predict(X).all()


def stump_errors(X, y):
    """Brute force: fewest training errors of any depth-0 or depth-1 tree."""
    Xd = X.toarray() > 0
    best = min(y.sum(), (~y).sum())
    for f in range(Xd.shape[1]):
        err = 0
        for side in (Xd[:, f], ~Xd[:, f]):
            err += min(y[side].sum(), (~y[side]).sum())
        best = min(best, err)
    return best


def test_xor_needs_depth_two():
    rows = [(0, 0), (0, 1), (1, 0), (1, 1)] * 3
    X = sp.csr_matrix(np.array(rows, dtype=float))
    y = np.array([a != b for a, b in rows])
    assert stump_errors(X, y) > 0
    tree = train_tree(X, y, prune=False, min_leaf=1)
    assert tree.depth() == 2
    assert (tree.predict(X) == y).all()


@st.composite
def consistent_data(draw):
    d = draw(st.integers(1, 6))
    rows = draw(st.lists(st.tuples(*[st.booleans()] * d), min_size=2, max_size=30))
    # one label per distinct row keeps the data consistent
    labels = {r: draw(st.booleans()) for r in sorted(set(rows))}
    X = sp.csr_matrix(np.array(rows, dtype=float))
    y = np.array([labels[r] for r in rows])
    return X, y


@settings(max_examples=60)
@given(consistent_data())
def test_unpruned_tree_fits_consistent_data(data):
    X, y = data
    tree = train_tree(X, y, prune=False, min_leaf=1)
    assert (tree.predict(X) == y).all()


@settings(max_examples=40)
@given(st.integers(0, 10_000))
def test_pruning_only_shrinks(seed):
    rng = np.random.default_rng(seed)
    X = random_binary(rng, 60, 8)
    y = rng.random(60) < 0.4
    full = train_tree(X, y, prune=False)
    pruned = train_tree(X, y, prune=True)
    assert pruned.n_leaves() <= full.n_leaves()
    assert pruned.positives[0] + pruned.negatives[0] == 60


def test_tree_rejects_empty_and_bad_min_leaf():
    with pytest.raises(ValueError):
        train_tree(sp.csr_matrix((0, 3)), np.array([], dtype=bool))
    with pytest.raises(ValueError):
        train_tree(sp.csr_matrix(np.eye(2)), np.array([True, False]), min_leaf=0)


# ---------------------------------------------------------------- logistic

def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    X = sp.csr_matrix(rng.normal(size=(50, 8)) * (rng.random((50, 8)) < 0.5))
    s = np.where(rng.random(50) < 0.5, 1.0, -1.0)
    params = rng.normal(size=9)
    _, grad = loss_and_grad(params, X, s, 0.3)
    h = 1e-6
    numeric = np.array([
        (loss_and_grad(params + h * e, X, s, 0.3)[0] - loss_and_grad(params - h * e, X, s, 0.3)[0]) / (2 * h)
        for e in np.eye(9)
    ])
    assert np.max(np.abs(numeric - grad)) <= 1e-4 * max(1.0, np.max(np.abs(grad)))


def test_loss_history_is_non_increasing():
    rng = np.random.default_rng(3)
    X = random_binary(rng, 80, 12)
    y = rng.random(80) < 0.6
    model = train_logistic(X, y, lam=0.1)
    h = np.array(model.loss_history)
    assert len(h) >= 2
    assert np.all(np.diff(h) <= 1e-9 * np.abs(h[:-1]))
    assert h[0] == pytest.approx(80 * math.log(2))


def test_zero_weights_predict_positive():
    model = LogisticModel(np.zeros(3), 0.0, 1e-8)
    X = sp.csr_matrix(np.eye(3))
    assert model.predict_proba(X).tolist() == [0.5] * 3
    assert model.predict(X).all()


def test_single_feature_matches_closed_form_mle():
    # x=1: 8 positive / 2 negative; x=0: 3 positive / 7 negative
    x = np.array([1] * 10 + [0] * 10, dtype=float)
    y = np.array([True] * 8 + [False] * 2 + [True] * 3 + [False] * 7)
    model = train_logistic(sp.csr_matrix(x.reshape(-1, 1)), y, lam=1e-8, tol=1e-9)
    b = math.log(3 / 7)
    w = math.log(8 / 2) - b
    assert model.weights[0] > 0
    assert model.bias == pytest.approx(b, abs=1e-4)
    assert model.weights[0] == pytest.approx(w, abs=1e-4)


def test_single_class_logistic_is_constant(caplog):
    X = sp.csr_matrix(np.eye(4))
    with caplog.at_level(logging.WARNING):
        model = train_logistic(X, np.zeros(4, dtype=bool))
    assert model.constant is False
    assert not model.predict(X).any()
    assert "single class" in caplog.text


# ---------------------------------------------------------------- kernel

def test_rbf_kernel_values():
    assert rbf_kernel([1, 0, 1], [1, 0, 1], 0.5) == 1.0
    assert rbf_kernel([1, 0], [0, 0], 1.0) == pytest.approx(0.36788, abs=1e-5)
    assert rbf_kernel([1, 0, 0], [0, 1, 0], 0.5) == pytest.approx(math.exp(-1.0))
    a = sp.csr_matrix([[1.0, 0, 2.0]])
    b = sp.csr_matrix([[0.0, 0, 1.0]])
    assert rbf_kernel(a, b, 0.1) == pytest.approx(math.exp(-0.2))
    assert rbf_kernel(a, b, 0.1) == rbf_kernel(b, a, 0.1)


# ---------------------------------------------------------------- SVM

def dense_kernel(X, gamma):
    A = X.toarray()
    sq = ((A[:, None, :] - A[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-gamma * sq)


def kkt_violation(alpha, s, upper, Q):
    G = Q @ alpha - 1
    v = -s * G
    eps = 1e-9 * upper
    up = ((s > 0) & (alpha < upper - eps)) | ((s < 0) & (alpha > eps))
    low = ((s > 0) & (alpha > eps)) | ((s < 0) & (alpha < upper - eps))
    if not up.any() or not low.any():
        return 0.0
    return v[up].max() - v[low].min()


def dual_oracle(Q, s, upper):
    cp = pytest.importorskip("cvxpy")
    a = cp.Variable(len(s))
    objective = cp.Minimize(0.5 * cp.quad_form(a, cp.psd_wrap(Q)) - cp.sum(a))
    cp.Problem(objective, [a >= 0, a <= upper, s @ a == 0]).solve(solver=cp.CLARABEL)
    return float(objective.value)


@pytest.mark.parametrize("seed", range(20))
def test_smo_satisfies_kkt_and_matches_qp_oracle(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(8, 30)), int(rng.integers(3, 10))
    X = random_binary(rng, n, d, density=0.4)
    y = rng.random(n) < 0.6
    y[0], y[1] = True, False
    model, sol = train_svm(X, y, SvmParams(), return_dual=True)
    s = np.where(y, 1.0, -1.0)
    upper = np.where(y, 128.0, 1088.0)
    assert np.all(sol.upper == upper)
    assert np.all(sol.alpha >= 0) and np.all(sol.alpha <= upper)
    assert abs(s @ sol.alpha) <= 1e-6 * max(1.0, sol.alpha.sum())
    Q = np.outer(s, s) * dense_kernel(X, 1.0 / d)
    assert kkt_violation(sol.alpha, s, upper, Q) <= 1e-3 + 1e-9
    smo = 0.5 * sol.alpha @ Q @ sol.alpha - sol.alpha.sum()
    best = dual_oracle(Q, s, upper)
    scale = max(1.0, abs(best))
    assert smo >= best - 1e-5 * scale
    assert smo - best <= 1e-3 * scale
    assert np.array_equal(model.support, np.flatnonzero(sol.alpha > 0))


def test_separable_set_has_zero_training_error():
    X = sp.csr_matrix(np.array([[1, 1, 0, 0], [1, 0, 0, 0], [1, 1, 1, 0],
                                [0, 0, 1, 1], [0, 0, 0, 1], [0, 1, 1, 1]], dtype=float))
    y = np.array([True, True, True, False, False, False])
    model = train_svm(X, y, SvmParams(weight_negative=1.0))
    f = model.decision_function(X)
    assert (model.predict(X) == y).all()
    # large C, separable: every point sits on or outside the margin
    assert np.all(np.where(y, 1, -1) * f >= 1 - 1e-2)


def identical_points(pos, neg, weight_negative, c=1.0):
    X = sp.csr_matrix(np.ones((pos + neg, 2)))
    y = np.array([True] * pos + [False] * neg)
    return X, y, SvmParams(c=c, weight_negative=weight_negative)


@pytest.mark.parametrize("w", [1.0, 8.5])
def test_negative_weight_shifts_the_decision(w):
    # Two positives and one negative at the same point, so K is all ones.
    # The dual reduces to maximizing t = sum of negative alphas subject to
    # t <= 2c (positives) and t <= w*c; whichever class stays free sets rho.
    X, y, params = identical_points(2, 1, w)
    model, sol = train_svm(X, y, params, return_dual=True)
    grid = np.linspace(0, 10, 100001)
    feasible = grid[(grid <= 2 * params.c + 1e-12) & (grid <= w * params.c + 1e-12)]
    t_star = feasible.max()
    assert sol.alpha[2] == pytest.approx(t_star, abs=1e-4)
    expected_positive = w * params.c < 2 * params.c  # negative at its bound, positives free
    assert bool(model.predict(X[2])[0]) is expected_positive
    if w == 8.5:
        assert not model.predict(X).any()


def test_identical_vector_pair():
    X, y, params = identical_points(1, 1, 1.0)
    model, sol = train_svm(X, y, params, return_dual=True)
    assert len(model.support) == 2
    assert sol.alpha.tolist() == pytest.approx([1.0, 1.0])


def test_iteration_cap_raises():
    rng = np.random.default_rng(0)
    X = random_binary(rng, 40, 6)
    y = rng.random(40) < 0.5
    y[:2] = [True, False]
    with pytest.raises(SvmConvergenceError) as err:
        train_svm(X, y, SvmParams(max_iter=1))
    assert err.value.gap > 1e-3 and err.value.iterations == 1


def test_svm_needs_both_classes():
    with pytest.raises(ValueError):
        train_svm(sp.csr_matrix(np.eye(3)), np.ones(3, dtype=bool))


def test_svm_params_validation():
    for bad in ({"c": 0}, {"gamma": -1.0}, {"weight_negative": 0}):
        with pytest.raises(ValueError):
            SvmParams(**bad)
    assert SvmParams().resolved_gamma(250) == 1 / 250


# ---------------------------------------------------------------- ensemble

class Fixed:
    def __init__(self, votes, fingerprint="fp"):
        self.votes = np.asarray(votes, dtype=bool)
        self.fingerprint = fingerprint

    def predict(self, X):
        return self.votes


def test_all_vote_combinations():
    combos = list(itertools.product([False, True], repeat=3))
    members = [Fixed([c[k] for c in combos]) for k in range(3)]
    labels, votes = ensemble_predict(members, sp.csr_matrix((8, 1)), "fp")
    assert labels.tolist() == [sum(c) >= 2 for c in combos]
    assert votes.tolist() == [list(c) for c in combos]


@given(st.lists(st.tuples(st.booleans(), st.booleans(), st.booleans()), min_size=1, max_size=20),
       st.permutations([0, 1, 2]))
def test_vote_is_order_invariant(rows, perm):
    votes = np.array(rows, dtype=bool)
    assert (majority_vote(votes) == majority_vote(votes[:, perm])).all()


def test_fingerprint_checks():
    with pytest.raises(FingerprintMismatch):
        Ensemble((Fixed([1]), Fixed([1]), Fixed([1], "other")))
    with pytest.raises(FingerprintMismatch):
        ensemble_predict([Fixed([1])] * 3, sp.csr_matrix((1, 1)), "stale")
    with pytest.raises(ValueError):
        Ensemble((Fixed([1]), Fixed([1])))


# ---------------------------------------------------------------- serialization

@pytest.fixture(scope="module")
def trained():
    rng = np.random.default_rng(11)
    X = random_binary(rng, 60, 10)
    y = (X[:, 0].toarray().ravel() > 0) | (rng.random(60) < 0.2)
    return X, {
        "zeror": (ZeroR, train_zeror(y, "fp")),
        "tree": (DecisionTree, train_tree(X, y, fingerprint="fp")),
        "logistic": (LogisticModel, train_logistic(X, y, fingerprint="fp")),
        "svm": (SvmModel, train_svm(X, y, fingerprint="fp")),
    }


@pytest.mark.parametrize("kind", ["zeror", "tree", "logistic", "svm"])
def test_round_trip_is_exact(trained, kind):
    X, models = trained
    cls, model = models[kind]
    text = json.dumps(model.to_dict(), sort_keys=True)
    again = cls.from_dict(json.loads(text), "fp")
    assert json.dumps(again.to_dict(), sort_keys=True) == text
    assert (again.predict(X) == model.predict(X)).all()
    if kind in ("logistic", "svm"):
        assert np.array_equal(again.decision_function(X), model.decision_function(X))
