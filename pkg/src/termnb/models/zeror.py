"""Majority-class baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ZeroR:
    majority: bool  # True is POSITIVE
    fingerprint: str = ""

    def predict(self, X) -> np.ndarray:
        return np.full(X.shape[0], self.majority, dtype=bool)

    def to_dict(self) -> dict:
        return {"majority": self.majority}

    @classmethod
    def from_dict(cls, d: dict, fingerprint: str = "") -> "ZeroR":
        return cls(bool(d["majority"]), fingerprint)


def train_zeror(y, fingerprint: str = "") -> ZeroR:
    """Predict the majority label; ties go to POSITIVE."""
    y = np.asarray(y, dtype=bool)
    if y.size == 0:
        raise ValueError("ZeroR needs at least one label")
    return ZeroR(bool(2 * y.sum() >= y.size), fingerprint)
