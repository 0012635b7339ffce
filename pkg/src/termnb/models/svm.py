"""RBF-kernel soft-margin SVM trained by sequential minimal optimization.

Solves the weighted dual

    min_a  1/2 a'Qa - e'a   s.t.  y'a = 0,  0 <= a_i <= c * w(y_i)

with Q_ij = y_i y_j K(x_i, x_j). The working pair is the maximal violating
index i plus the second-order choice of j; iteration stops once the
maximal KKT violation m(a) - M(a) drops to ``tolerance``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

TAU = 1e-12


class SvmConvergenceError(RuntimeError):
    def __init__(self, iterations: int, gap: float):
        self.iterations = iterations
        self.gap = gap
        super().__init__(
            f"SMO did not converge after {iterations} iterations "
            f"(max KKT violation {gap:.3e})"
        )


@dataclass(frozen=True)
class SvmParams:
    c: float = 128.0
    gamma: float | None = None  # None -> 1 / n_features
    weight_positive: float = 1.0
    weight_negative: float = 8.5
    tolerance: float = 1e-3
    max_iter: int | None = None  # None -> max(10_000_000, 100 * n)

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.weight_positive <= 0 or self.weight_negative <= 0:
            raise ValueError("class weights must be positive")

    def resolved_gamma(self, n_features: int) -> float:
        return self.gamma if self.gamma is not None else 1.0 / max(n_features, 1)


def _as_dense_row(v) -> np.ndarray:
    if sp.issparse(v):
        return np.asarray(v.todense()).ravel()
    return np.asarray(v, dtype=np.float64).ravel()


def rbf_kernel(x, y, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2) for two vectors (dense or 1-row sparse)."""
    if sp.issparse(x) and sp.issparse(y):
        d = x - y
        sq = float(d.multiply(d).sum())
    else:
        diff = _as_dense_row(x) - _as_dense_row(y)
        sq = float(diff @ diff)
    return float(np.exp(-gamma * sq))


def rbf_matrix(A, B, gamma: float) -> np.ndarray:
    """Kernel matrix between the rows of A and B via ||a||^2 + ||b||^2 - 2 a.b."""
    A = sp.csr_matrix(A, dtype=np.float64)
    B = sp.csr_matrix(B, dtype=np.float64)
    a2 = np.asarray(A.multiply(A).sum(axis=1)).ravel()
    b2 = np.asarray(B.multiply(B).sum(axis=1)).ravel()
    cross = (A @ B.T).toarray()
    sq = np.maximum(a2[:, None] + b2[None, :] - 2 * cross, 0.0)
    return np.exp(-gamma * sq)


@dataclass(frozen=True)
class SvmModel:
    support_vectors: sp.csr_matrix
    dual_coef: np.ndarray  # alpha_i * y_i for each support vector
    rho: float  # decision is sum(dual_coef * K) - rho
    gamma: float
    params: SvmParams
    support: np.ndarray  # indices of support vectors in the training set
    n_features: int
    fingerprint: str = ""
    iterations: int = field(default=0, compare=False)

    @property
    def bias(self) -> float:
        return -self.rho

    def decision_function(self, X) -> np.ndarray:
        X = sp.csr_matrix(X, dtype=np.float64)
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], -self.rho)
        K = rbf_matrix(X, self.support_vectors, self.gamma)
        return K @ self.dual_coef - self.rho

    def predict(self, X) -> np.ndarray:
        return self.decision_function(X) > 0

    def to_dict(self) -> dict:
        sv = self.support_vectors.tocsr()
        return {
            "sv_indptr": sv.indptr.tolist(),
            "sv_indices": sv.indices.tolist(),
            "sv_data": sv.data.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "rho": self.rho,
            "gamma": self.gamma,
            "params": self.params.__dict__,
            "support": self.support.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d: dict, fingerprint: str = "") -> "SvmModel":
        n_sv = len(d["sv_indptr"]) - 1
        sv = sp.csr_matrix(
            (np.asarray(d["sv_data"], dtype=np.float64),
             np.asarray(d["sv_indices"], dtype=np.int64),
             np.asarray(d["sv_indptr"], dtype=np.int64)),
            shape=(n_sv, int(d["n_features"])),
        )
        return cls(sv, np.asarray(d["dual_coef"], dtype=np.float64), float(d["rho"]),
                   float(d["gamma"]), SvmParams(**d["params"]),
                   np.asarray(d["support"], dtype=np.int64), int(d["n_features"]), fingerprint)


class _KernelColumns:
    """Kernel columns on demand, fully precomputed for moderate n."""

    def __init__(self, X: sp.csr_matrix, gamma: float, full_limit: int = 6000):
        self.X = X
        self.gamma = gamma
        self.full = rbf_matrix(X, X, gamma) if X.shape[0] <= full_limit else None
        self.cache: dict[int, np.ndarray] = {}
        self.diag = np.ones(X.shape[0])

    def column(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[:, i]
        col = self.cache.get(i)
        if col is None:
            if len(self.cache) > 2000:
                self.cache.pop(next(iter(self.cache)))
            col = rbf_matrix(self.X, self.X[i], self.gamma).ravel()
            self.cache[i] = col
        return col


@dataclass(frozen=True)
class DualSolution:
    alpha: np.ndarray
    gradient: np.ndarray  # Q alpha - e
    rho: float
    upper: np.ndarray  # per-instance box bound
    iterations: int
    gap: float


def solve_dual(K: _KernelColumns, s: np.ndarray, upper: np.ndarray, tol: float, max_iter: int) -> DualSolution:
    n = len(s)
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    gap = np.inf
    while True:
        v = -s * G
        up = ((s > 0) & (alpha < upper)) | ((s < 0) & (alpha > 0))
        low = ((s > 0) & (alpha > 0)) | ((s < 0) & (alpha < upper))
        if not up.any() or not low.any():
            gap = 0.0
            break
        v_up = np.where(up, v, -np.inf)
        i = int(np.argmax(v_up))
        m = v_up[i]
        v_low = np.where(low, v, np.inf)
        gap = m - v_low.min()
        if gap <= tol:
            break
        if it >= max_iter:
            raise SvmConvergenceError(it, float(gap))
        it += 1

        Ki = K.column(i)
        b = m - v
        a = K.diag[i] + K.diag - 2 * Ki
        a = np.where(a > 0, a, TAU)
        score = np.where(low & (b > 0), -(b * b) / a, np.inf)
        j = int(np.argmin(score))
        Kj = K.column(j)

        Cu_i, Cu_j = upper[i], upper[j]
        old_i, old_j = alpha[i], alpha[j]
        if s[i] != s[j]:
            quad = max(K.diag[i] + K.diag[j] - 2 * Ki[j], TAU)
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0
                alpha[j] = -diff
            if diff > Cu_i - Cu_j:
                if alpha[i] > Cu_i:
                    alpha[i] = Cu_i
                    alpha[j] = Cu_i - diff
            elif alpha[j] > Cu_j:
                alpha[j] = Cu_j
                alpha[i] = Cu_j + diff
        else:
            quad = max(K.diag[i] + K.diag[j] - 2 * Ki[j], TAU)
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > Cu_i:
                if alpha[i] > Cu_i:
                    alpha[i] = Cu_i
                    alpha[j] = total - Cu_i
            elif alpha[j] < 0:
                alpha[j] = 0
                alpha[i] = total
            if total > Cu_j:
                if alpha[j] > Cu_j:
                    alpha[j] = Cu_j
                    alpha[i] = total - Cu_j
            elif alpha[i] < 0:
                alpha[i] = 0
                alpha[j] = total
        d_i, d_j = alpha[i] - old_i, alpha[j] - old_j
        # Q[:, k] = s * s_k * K[:, k]
        G += s * (s[i] * d_i * Ki + s[j] * d_j * Kj)

    return DualSolution(alpha, G, _rho(alpha, G, s, upper), upper, it, float(gap))


def _rho(alpha, G, s, upper) -> float:
    yG = s * G
    at_upper = alpha >= upper
    at_lower = alpha <= 0
    free = ~at_upper & ~at_lower
    if free.any():
        return float(yG[free].mean())
    ub_mask = (at_upper & (s < 0)) | (at_lower & (s > 0))
    lb_mask = (at_upper & (s > 0)) | (at_lower & (s < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2)


def train_svm(
    X, y: np.ndarray, params: SvmParams = SvmParams(), fingerprint: str = "",
    return_dual: bool = False,
):
    X = sp.csr_matrix(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    if y.all() or not y.any():
        raise ValueError("SVM training needs both classes")
    s = np.where(y, 1.0, -1.0)
    upper = np.where(y, params.c * params.weight_positive, params.c * params.weight_negative)
    gamma = params.resolved_gamma(X.shape[1])
    n = X.shape[0]
    max_iter = params.max_iter if params.max_iter is not None else max(10_000_000, 100 * n)
    sol = solve_dual(_KernelColumns(X, gamma), s, upper, params.tolerance, max_iter)
    support = np.flatnonzero(sol.alpha > 0)
    model = SvmModel(
        X[support], sol.alpha[support] * s[support], sol.rho, gamma, params,
        support, X.shape[1], fingerprint, sol.iterations,
    )
    log.debug("SMO converged in %d iterations, %d support vectors", sol.iterations, len(support))
    return (model, sol) if return_dual else model
