"""User-level comparator selection from tweet-level predictions.

A user is included when some TERM-tagged tweet and some NB-tagged tweet, both
predicted positive, were posted at most ``threshold_days`` apart. A single
tweet carrying both tags counts as a pair with gap 0.
"""
from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

from .corpus import Corpus, Label
from .retrieval import MatchResult, Outcome


@dataclass(frozen=True)
class CohortConfig:
    threshold_days: int | None = 50  # None: no temporal restriction

    def __post_init__(self):
        if self.threshold_days is not None and self.threshold_days < 0:
            raise ValueError("threshold_days must be >= 0")


@dataclass(frozen=True)
class CandidatePair:
    term_id: str
    nb_id: str
    gap_days: int


@dataclass(frozen=True)
class CohortDecision:
    user_id: str
    included: bool
    evidence: CandidatePair | None = None
    candidates: tuple[CandidatePair, ...] = field(default=())

    @property
    def min_gap(self) -> int | None:
        return min((c.gap_days for c in self.candidates), default=None)

    def to_record(self) -> dict:
        ev = self.evidence
        return {
            "user_id": self.user_id,
            "included": self.included,
            "term_tweet_id": ev.term_id if ev else None,
            "nb_tweet_id": ev.nb_id if ev else None,
            "gap_days": ev.gap_days if ev else None,
            "candidate_pairs": [[c.term_id, c.nb_id, c.gap_days] for c in self.candidates],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CohortDecision":
        cands = tuple(CandidatePair(str(a), str(b), int(g)) for a, b, g in rec["candidate_pairs"])
        ev = None
        if rec.get("term_tweet_id") is not None:
            ev = CandidatePair(rec["term_tweet_id"], rec["nb_tweet_id"], int(rec["gap_days"]))
        return cls(rec["user_id"], bool(rec["included"]), ev, cands)


def day_gap(d1: dt.date, d2: dt.date) -> int:
    return abs((d2 - d1).days)


def decide_user(
    user_id: str, tweets, predicted_positive: set[str], matches: Mapping[str, MatchResult],
    config: CohortConfig,
) -> CohortDecision:
    terms = [t for t in tweets if t.tweet_id in predicted_positive
             and Outcome.TERM in matches[t.tweet_id].outcomes]
    nbs = [t for t in tweets if t.tweet_id in predicted_positive
           and Outcome.NB in matches[t.tweet_id].outcomes]
    pairs = []
    for a in terms:
        for b in nbs:
            pairs.append((day_gap(a.posted_at, b.posted_at), a.posted_at, a.tweet_id, b.tweet_id))
    pairs.sort()
    candidates = tuple(CandidatePair(term, nb, gap) for gap, _, term, nb in pairs)
    qualifying = [c for c in candidates
                  if config.threshold_days is None or c.gap_days <= config.threshold_days]
    evidence = qualifying[0] if qualifying else None
    return CohortDecision(user_id, evidence is not None, evidence, candidates)


def select_comparators(
    predictions: Mapping[str, Label] | Mapping[str, object],
    matches: Mapping[str, MatchResult],
    corpus: Corpus,
    config: CohortConfig = CohortConfig(),
) -> list[CohortDecision]:
    """One decision per user in ``corpus``, in corpus user order.

    ``predictions`` maps tweet id to a Label (or to an object with ``.label``).
    Evidence is the minimum-gap qualifying pair; ties go to the earlier term
    tweet, then to tweet ids.
    """
    positive = set()
    for tid, pred in predictions.items():
        label = getattr(pred, "label", pred)
        if tid not in corpus or tid not in matches:
            raise KeyError(f"prediction for unknown or unmatched tweet {tid!r}")
        if Label(label) is Label.POSITIVE:
            positive.add(tid)
    return [decide_user(u, tweets, positive, matches, config) for u, tweets in corpus.by_user.items()]


def included_users(decisions: Iterable[CohortDecision]) -> set[str]:
    return {d.user_id for d in decisions if d.included}


def dump_cohort(decisions: Iterable[CohortDecision], out: IO[str]) -> None:
    for d in decisions:
        out.write(json.dumps(d.to_record()) + "\n")


def parse_cohort(stream: Iterable[str]) -> list[CohortDecision]:
    return [CohortDecision.from_record(json.loads(line)) for line in stream if line.strip()]


def read_cohort(path) -> list[CohortDecision]:
    with open(path, encoding="utf-8") as fh:
        return parse_cohort(fh)
