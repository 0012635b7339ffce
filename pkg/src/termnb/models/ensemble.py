"""Majority vote over a decision tree, logistic regression and an SVM."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FingerprintMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Ensemble:
    members: tuple  # exactly three trained models

    def __post_init__(self):
        if len(self.members) != 3:
            raise ValueError(f"ensemble needs exactly 3 members, got {len(self.members)}")
        prints = {m.fingerprint for m in self.members}
        if len(prints) != 1:
            raise FingerprintMismatch(f"ensemble members disagree on vocabulary: {sorted(prints)}")

    @property
    def fingerprint(self) -> str:
        return self.members[0].fingerprint

    def member_votes(self, X) -> np.ndarray:
        """(n_instances, 3) boolean votes."""
        return np.column_stack([m.predict(X) for m in self.members])

    def predict(self, X) -> np.ndarray:
        return majority_vote(self.member_votes(X))


def majority_vote(votes: np.ndarray) -> np.ndarray:
    votes = np.asarray(votes, dtype=bool)
    return 2 * votes.sum(axis=1) > votes.shape[1]


def ensemble_predict(members, X, fingerprint: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Labels and member votes; every member must carry ``fingerprint`` if given."""
    ens = Ensemble(tuple(members))
    if fingerprint is not None and ens.fingerprint != fingerprint:
        raise FingerprintMismatch(
            f"model vocabulary {ens.fingerprint} does not match features {fingerprint}"
        )
    votes = ens.member_votes(X)
    return majority_vote(votes), votes
