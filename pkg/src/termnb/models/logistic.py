"""Ridge-penalized binary logistic regression on sparse features."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.special import expit

log = logging.getLogger(__name__)


def loss_and_grad(
    params: np.ndarray, X: sp.csr_matrix, s: np.ndarray, lam: float
) -> tuple[float, np.ndarray]:
    """Negative log-likelihood + lam * ||w||^2 and its gradient.

    ``params`` is ``[w..., b]``; ``s`` holds +1/-1 targets. The bias is not
    penalized.
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    loss = float(np.sum(np.logaddexp(0.0, -s * z)) + lam * (w @ w))
    r = -s * expit(-s * z)
    grad = np.empty_like(params)
    grad[:-1] = X.T @ r + 2 * lam * w
    grad[-1] = r.sum()
    return loss, grad


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    l2: float
    fingerprint: str = ""
    constant: bool | None = None  # set when trained on a single class
    loss_history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def decision_function(self, X: sp.csr_matrix) -> np.ndarray:
        return np.asarray(X @ self.weights).ravel() + self.bias

    def predict_proba(self, X: sp.csr_matrix) -> np.ndarray:
        return expit(self.decision_function(X))

    def predict(self, X: sp.csr_matrix) -> np.ndarray:
        if self.constant is not None:
            return np.full(X.shape[0], self.constant, dtype=bool)
        # p >= 0.5 is exactly z >= 0
        return self.decision_function(X) >= 0

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "l2": self.l2,
            "constant": self.constant,
        }

    @classmethod
    def from_dict(cls, d: dict, fingerprint: str = "") -> "LogisticModel":
        return cls(np.asarray(d["weights"], dtype=np.float64), float(d["bias"]),
                   float(d["l2"]), fingerprint, d.get("constant"))


def train_logistic(
    X: sp.csr_matrix, y: np.ndarray, lam: float = 1e-8, tol: float = 1e-6,
    max_iter: int = 1000, fingerprint: str = "",
) -> LogisticModel:
    """Fit from zero weights with L-BFGS; stops once max |gradient| <= tol."""
    X = sp.csr_matrix(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    if X.shape[0] == 0:
        raise ValueError("cannot train logistic regression on zero instances")
    if y.all() or not y.any():
        only = bool(y[0])
        log.warning("logistic regression trained on a single class; predicting %s",
                    "positive" if only else "negative")
        return LogisticModel(np.zeros(X.shape[1]), 0.0, lam, fingerprint, constant=only)
    s = np.where(y, 1.0, -1.0)
    history: list[float] = []

    def fun(params):
        return loss_and_grad(params, X, s, lam)

    def record(intermediate_result):
        history.append(float(intermediate_result.fun))

    x0 = np.zeros(X.shape[1] + 1)
    history.append(fun(x0)[0])
    res = minimize(
        fun, x0, jac=True, method="L-BFGS-B", callback=record,
        options={"gtol": tol, "maxiter": max_iter, "ftol": 1e-10, "maxcor": 20},
    )
    if np.max(np.abs(res.jac)) > tol:
        log.info("logistic regression stopped at |grad|=%.2e (%s)", np.max(np.abs(res.jac)), res.message)
    return LogisticModel(res.x[:-1].copy(), float(res.x[-1]), lam, fingerprint,
                         loss_history=tuple(history))
