"""Tweet corpus and gold-annotation file handling.

Tweets arrive as JSON lines (``id``, ``user_id``, ``created_at``, ``text``).
Annotations are two-column TSV rows whose second column is either a tweet
label (``positive``/``negative``) or a user stratum
(``same``/``different``/``none``).
"""
from __future__ import annotations

import datetime as dt
import enum
import json
import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import IO, Iterable, Iterator, Mapping, Union

log = logging.getLogger(__name__)


class CorpusError(ValueError):
    """A record in an input file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Label(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class Stratum(str, enum.Enum):
    SAME_PREGNANCY = "same"
    DIFFERENT_PREGNANCY = "different"
    NO_POSITIVE_PAIR = "none"


@dataclass(frozen=True)
class Tweet:
    tweet_id: str
    user_id: str
    posted_at: dt.date
    text: str

    def to_record(self) -> dict:
        return {
            "id": self.tweet_id,
            "user_id": self.user_id,
            "created_at": self.posted_at.isoformat(),
            "text": self.text,
        }


@dataclass(frozen=True)
class TweetLabel:
    tweet_id: str
    label: Label


@dataclass(frozen=True)
class UserGold:
    user_id: str
    stratum: Stratum


@dataclass(frozen=True)
class Corpus:
    """Immutable collection of tweets with a per-user chronological index."""

    tweets: tuple[Tweet, ...] = ()
    by_user: Mapping[str, tuple[Tweet, ...]] = field(
        default_factory=lambda: MappingProxyType({})
    )
    _by_id: Mapping[str, Tweet] = field(
        default_factory=lambda: MappingProxyType({}), repr=False, compare=False
    )

    @classmethod
    def from_tweets(cls, tweets: Iterable[Tweet]) -> "Corpus":
        tweets = tuple(tweets)
        by_id: dict[str, Tweet] = {}
        buckets: dict[str, list[Tweet]] = {}
        for t in tweets:
            if t.tweet_id in by_id:
                raise CorpusError(f"duplicate tweet id {t.tweet_id!r}")
            by_id[t.tweet_id] = t
            buckets.setdefault(t.user_id, []).append(t)
        # sorted() is stable, so same-day tweets keep file order
        by_user = {
            u: tuple(sorted(ts, key=lambda t: t.posted_at))
            for u, ts in buckets.items()
        }
        return cls(tweets, MappingProxyType(by_user), MappingProxyType(by_id))

    def __len__(self) -> int:
        return len(self.tweets)

    def __iter__(self) -> Iterator[Tweet]:
        return iter(self.tweets)

    def __contains__(self, tweet_id: object) -> bool:
        return tweet_id in self._by_id

    def __getitem__(self, tweet_id: str) -> Tweet:
        return self._by_id[tweet_id]

    @property
    def users(self) -> list[str]:
        return list(self.by_user)

    def subset(self, keep) -> "Corpus":
        """Corpus restricted to tweets for which ``keep(tweet)`` is true."""
        return Corpus.from_tweets(t for t in self.tweets if keep(t))


def parse_date(value: str) -> dt.date:
    """Parse an ISO-8601 date or datetime and return its UTC calendar date."""
    value = value.strip()
    if value.endswith(("Z", "z")):
        value = value[:-1] + "+00:00"
    try:
        if len(value) == 10:
            return dt.date.fromisoformat(value)
        stamp = dt.datetime.fromisoformat(value)
    except ValueError:
        raise ValueError(f"not an ISO-8601 date: {value!r}") from None
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(dt.timezone.utc)
    return stamp.date()


Lines = Iterable[Union[str, bytes]]


def _decoded(stream: Lines) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusError(f"invalid UTF-8 ({exc.reason})", lineno) from None
        yield lineno, raw


def _parse_tweet(line: str, lineno: int) -> Tweet:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed JSON: {exc.msg}", lineno) from None
    if not isinstance(rec, dict):
        raise CorpusError("record is not a JSON object", lineno)
    missing = [k for k in ("id", "user_id", "created_at", "text") if k not in rec]
    if missing:
        raise CorpusError(f"missing field(s) {', '.join(missing)}", lineno)
    text = rec["text"]
    if not isinstance(text, str) or not text:
        raise CorpusError("text must be a non-empty string", lineno)
    try:
        posted = parse_date(str(rec["created_at"]))
    except ValueError as exc:
        raise CorpusError(str(exc), lineno) from None
    return Tweet(str(rec["id"]), str(rec["user_id"]), posted, text)


def parse_corpus(stream: Lines, on_error: str = "raise") -> Corpus:
    """Parse line-delimited tweet records.

    ``on_error`` is ``"raise"`` to abort on the first malformed record or
    ``"skip"`` to log and drop it. Duplicate tweet ids always abort.
    """
    if on_error not in ("raise", "skip"):
        raise ValueError(f"on_error must be 'raise' or 'skip', got {on_error!r}")
    tweets = []
    seen: dict[str, int] = {}
    for lineno, line in _decoded(stream):
        if not line.strip():
            continue
        try:
            tweet = _parse_tweet(line, lineno)
        except CorpusError:
            if on_error == "raise":
                raise
            log.warning("skipping malformed record at line %d", lineno, exc_info=True)
            continue
        if tweet.tweet_id in seen:
            raise CorpusError(
                f"duplicate tweet id {tweet.tweet_id!r} (first seen on line "
                f"{seen[tweet.tweet_id]})",
                lineno,
            )
        seen[tweet.tweet_id] = lineno
        tweets.append(tweet)
    return Corpus.from_tweets(tweets)


def dump_corpus(corpus: Iterable[Tweet], out: IO[str]) -> None:
    for t in corpus:
        out.write(json.dumps(t.to_record(), ensure_ascii=False) + "\n")


def read_corpus(path, on_error: str = "raise") -> Corpus:
    with open(path, "rb") as fh:
        return parse_corpus(fh, on_error=on_error)


_LABELS = {lab.value: lab for lab in Label}
_STRATA = {s.value: s for s in Stratum}


def parse_annotations(stream: Lines) -> tuple[list[TweetLabel], list[UserGold]]:
    """Parse ``id<TAB>label`` rows into tweet labels and user strata.

    Rows for the same id are resolved last-writer-wins with a warning.
    """
    labels: dict[str, TweetLabel] = {}
    golds: dict[str, UserGold] = {}
    for lineno, line in _decoded(stream):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise CorpusError(f"expected 2 tab-separated fields: {line!r}", lineno)
        key, value = parts[0].strip(), parts[1].strip().lower()
        if value in _LABELS:
            if key in labels:
                log.warning("tweet %s labelled twice; keeping line %d", key, lineno)
            labels[key] = TweetLabel(key, _LABELS[value])
        elif value in _STRATA:
            if key in golds:
                log.warning("user %s has two gold rows; keeping line %d", key, lineno)
            golds[key] = UserGold(key, _STRATA[value])
        else:
            raise CorpusError(f"unknown label {parts[1]!r} in row {line!r}", lineno)
    return list(labels.values()), list(golds.values())


def read_annotations(*paths) -> tuple[list[TweetLabel], list[UserGold]]:
    labels: dict[str, TweetLabel] = {}
    golds: dict[str, UserGold] = {}
    for path in paths:
        with open(path, "rb") as fh:
            labs, gs = parse_annotations(fh)
        for lab in labs:
            labels[lab.tweet_id] = lab
        for g in gs:
            if g.user_id in golds:
                log.warning("user %s has gold rows in several files; last wins", g.user_id)
            golds[g.user_id] = g
    return list(labels.values()), list(golds.values())


def check_annotation_join(
    corpus: Corpus, labels: Iterable[TweetLabel], golds: Iterable[UserGold] = ()
) -> list[str]:
    """Return the ids in the annotations that the corpus does not contain."""
    missing = [lab.tweet_id for lab in labels if lab.tweet_id not in corpus]
    missing += [g.user_id for g in golds if g.user_id not in corpus.by_user]
    return missing
