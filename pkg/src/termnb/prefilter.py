"""Removal of accounts that relay other people's pregnancy reports.

Two mechanisms: prefix rules (auto-removal) and a frequency-outlier flag over
per-user matched-tweet counts (advisory, surfaced for review only).
"""
from __future__ import annotations

import importlib.resources
import json
import re
import statistics
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

from .corpus import Corpus, Tweet
from .retrieval import MatchResult

DEFAULT_PREFIXES = (
    "ccb",
    "baby club update",
    "from our inbox",
    "a question from our inbox",
    "fq",
    "fan share",
    "#fanquestion",
    "mummy to be advice",
)


@dataclass(frozen=True)
class PrefixRuleSet:
    prefixes: tuple[str, ...] = DEFAULT_PREFIXES

    def __post_init__(self):
        cleaned = tuple(p.strip().lower() for p in self.prefixes if p.strip())
        object.__setattr__(self, "prefixes", cleaned)
        # A prefix must end at a non-letter so "fq" does not catch "fqueen".
        alternation = "|".join(re.escape(p) for p in sorted(cleaned, key=len, reverse=True))
        object.__setattr__(
            self, "_regex", re.compile(rf"(?:{alternation})(?![^\W\d_])") if cleaned else None
        )

    @classmethod
    def parse(cls, stream: Iterable[str]) -> "PrefixRuleSet":
        # no comment syntax: "#fanquestion" is itself a prefix
        return cls(tuple(line.rstrip("\r\n") for line in stream))

    @classmethod
    def load(cls, path) -> "PrefixRuleSet":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh)

    @classmethod
    def default(cls) -> "PrefixRuleSet":
        res = importlib.resources.files("termnb") / "data" / "prefixes.txt"
        with res.open(encoding="utf-8") as fh:
            return cls.parse(fh)

    def match(self, text: str) -> str | None:
        """The prefix the text starts with (case-insensitive), if any."""
        if self._regex is None:
            return None
        m = self._regex.match(text.lstrip().lower())
        return m.group(0) if m else None


def flag_prefix_users(
    by_user: Mapping[str, Sequence[Tweet]], rules: PrefixRuleSet
) -> dict[str, str]:
    """Users with any tweet starting with a listed prefix -> the first such prefix."""
    flagged = {}
    for user, tweets in by_user.items():
        for t in tweets:
            hit = rules.match(t.text)
            if hit is not None:
                flagged[user] = hit
                break
    return flagged


def flag_frequency_outliers(
    by_user: Mapping[str, Sequence[Tweet]], k: float = 3.0
) -> tuple[set[str], float, float]:
    """Users whose tweet count exceeds mean + k * stddev (population stddev)."""
    if len(by_user) < 2:
        raise ValueError("frequency statistics need at least two users")
    counts = {u: len(ts) for u, ts in by_user.items()}
    mean = statistics.fmean(counts.values())
    sd = statistics.pstdev(counts.values(), mu=mean)
    cut = mean + k * sd
    return {u for u, c in counts.items() if c > cut}, mean, sd


@dataclass
class PrefilterReport:
    flagged_users: dict[str, str] = field(default_factory=dict)  # user -> reason
    outlier_users: list[str] = field(default_factory=list)
    removed_tweet_count: int = 0
    users_before: int = 0
    users_after: int = 0
    tweets_before: int = 0
    tweets_after: int = 0
    mean_tweets_per_user: float = 0.0
    stddev_tweets_per_user: float = 0.0
    threshold_count: float = 0.0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["flagged_users"] = dict(sorted(self.flagged_users.items()))
        d["outlier_users"] = sorted(self.outlier_users)
        return d

    def dump(self, out: IO[str]) -> None:
        json.dump(self.to_dict(), out, indent=2, sort_keys=True)
        out.write("\n")


def apply_prefilter(
    matched: Corpus, flagged: Iterable[str] | Mapping[str, str],
    results: Mapping[str, MatchResult] | None = None,
) -> tuple[Corpus, dict[str, MatchResult] | None, PrefilterReport]:
    """Drop every tweet by a flagged user."""
    reasons = dict(flagged) if isinstance(flagged, Mapping) else {u: "flagged" for u in flagged}
    unknown = set(reasons) - set(matched.by_user)
    if unknown:
        raise ValueError(f"flagged users not in the matched set: {sorted(unknown)}")
    kept = matched.subset(lambda t: t.user_id not in reasons)
    report = PrefilterReport(
        flagged_users=reasons,
        removed_tweet_count=len(matched) - len(kept),
        users_before=len(matched.by_user),
        users_after=len(kept.by_user),
        tweets_before=len(matched),
        tweets_after=len(kept),
    )
    kept_results = None
    if results is not None:
        kept_results = {t.tweet_id: results[t.tweet_id] for t in kept}
    return kept, kept_results, report


def prefilter(
    matched: Corpus,
    results: Mapping[str, MatchResult] | None = None,
    rules: PrefixRuleSet | None = None,
    k: float = 3.0,
) -> tuple[Corpus, dict[str, MatchResult] | None, PrefilterReport]:
    """Prefix-rule removal plus advisory outlier statistics in one report."""
    rules = PrefixRuleSet.default() if rules is None else rules
    flagged = flag_prefix_users(matched.by_user, rules)
    kept, kept_results, report = apply_prefilter(matched, flagged, results)
    if len(matched.by_user) >= 2:
        outliers, mean, sd = flag_frequency_outliers(matched.by_user, k)
        report.outlier_users = sorted(outliers)
        report.mean_tweets_per_user = mean
        report.stddev_tweets_per_user = sd
        report.threshold_count = mean + k * sd
    return kept, kept_results, report
