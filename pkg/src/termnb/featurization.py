"""Tweet normalization and sparse n-gram / word-cluster features."""
from __future__ import annotations

import hashlib
import importlib.resources
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import CorpusError, Tweet
from .porter import porter_stem
from .retrieval import MatchResult, Outcome, QueryPattern, collapse_elongations, compile_patterns

TERM_TOKEN = "_term_"
NB_TOKEN = "_normalbirthweight_"
NAME_TOKEN = "_name_"
USER_TOKEN = "_user_"
URL_TOKEN = "_url_"
PLACEHOLDERS = frozenset({TERM_TOKEN, NB_TOKEN, NAME_TOKEN, USER_TOKEN, URL_TOKEN})

OOV_CLUSTER = "<oov>"
CLUSTER_PREFIX = "c:"

_URL = re.compile(r"https?://\S+|www\.\S+", re.IGNORECASE)
_MENTION = re.compile(r"@\w+")
_TOKEN = re.compile(
    "|".join(re.escape(p) for p in sorted(PLACEHOLDERS, key=len, reverse=True))
    + r"|[^\W\d_]+"
)


@dataclass(frozen=True)
class NameLexicon:
    names: frozenset[str] = frozenset()

    def __post_init__(self):
        names = frozenset(n.strip().lower() for n in self.names if n.strip())
        if any(any(c.isspace() for c in n) for n in names):
            raise ValueError("names must not contain whitespace")
        object.__setattr__(self, "names", names)
        regex = None
        if names:
            alternation = "|".join(re.escape(n) for n in sorted(names, key=lambda n: (-len(n), n)))
            regex = re.compile(rf"(?<!\w)(?:{alternation})(?!\w)")
        object.__setattr__(self, "_regex", regex)

    @classmethod
    def parse(cls, stream: Iterable[str]) -> "NameLexicon":
        return cls(frozenset(line.strip() for line in stream if not line.startswith("#")))

    @classmethod
    def load(cls, path) -> "NameLexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh)

    @classmethod
    def default(cls) -> "NameLexicon":
        res = importlib.resources.files("termnb") / "data" / "names.txt"
        with res.open(encoding="utf-8") as fh:
            return cls.parse(fh)

    def __contains__(self, word: str) -> bool:
        return word in self.names

    def substitute(self, text: str) -> str:
        if self._regex is None:
            return text
        return self._regex.sub(NAME_TOKEN, text)


@dataclass(frozen=True)
class ClusterLexicon:
    clusters: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def parse(cls, stream: Iterable[str]) -> "ClusterLexicon":
        """Read ``cluster_bitstring<TAB>word<TAB>count`` rows."""
        table = {}
        for lineno, line in enumerate(stream, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise CorpusError(f"expected cluster<TAB>word<TAB>count: {line!r}", lineno)
            table[parts[1].lower()] = parts[0]
        return cls(table)

    @classmethod
    def load(cls, path) -> "ClusterLexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh)

    def lookup(self, word: str) -> str:
        return self.clusters.get(word, OOV_CLUSTER)

    def __len__(self) -> int:
        return len(self.clusters)


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[str, ...]
    raw_tokens: tuple[str, ...]


def _substitution_spans(
    text: str, match: MatchResult, patterns: Mapping[int, QueryPattern]
) -> list[tuple[int, int, str]]:
    spans = []
    for pid in match.pattern_ids:
        pattern = patterns.get(pid)
        if pattern is None:
            raise KeyError(f"match references unknown pattern {pid}")
        token = TERM_TOKEN if pattern.outcome is Outcome.TERM else NB_TOKEN
        for m in pattern.regex.finditer(text):
            start, end = pattern.value_span(m)
            if end > start:
                spans.append((start, end, token))
    spans.sort(key=lambda s: (s[0], -s[1]))
    merged: list[tuple[int, int, str]] = []
    for span in spans:
        if merged and span[0] < merged[-1][1]:
            continue
        merged.append(span)
    return merged


@dataclass(frozen=True)
class Preprocessor:
    """Text normalization chain shared by training and prediction.

    Order: mentions/URLs to placeholders; lowercase (with letter elongations
    collapsed, as retrieval does); matched gestation/weight expressions to
    ``_term_``/``_normalbirthweight_``; lexicon names to ``_name_``; split into
    alphabetic tokens; Porter-stem everything but placeholders.
    """

    names: NameLexicon = field(default_factory=NameLexicon.default)
    patterns: tuple[QueryPattern, ...] = ()

    def __post_init__(self):
        patterns = tuple(self.patterns) or tuple(compile_patterns())
        object.__setattr__(self, "patterns", patterns)
        object.__setattr__(self, "_by_id", {p.pattern_id: p for p in patterns})

    def __call__(self, tweet: Tweet | str, match: MatchResult | None = None) -> TokenSeq:
        text = tweet.text if isinstance(tweet, Tweet) else tweet
        text = _URL.sub(f" {URL_TOKEN} ", text)
        text = _MENTION.sub(f" {USER_TOKEN} ", text)
        text = collapse_elongations(text.lower())
        if match is not None:
            for start, end, token in reversed(_substitution_spans(text, match, self._by_id)):
                text = f"{text[:start]} {token} {text[end:]}"
        text = self.names.substitute(text)
        raw = tuple(_TOKEN.findall(text))
        stemmed = tuple(t if t in PLACEHOLDERS else porter_stem(t) for t in raw)
        return TokenSeq(stemmed, raw)


def preprocess(
    tweet: Tweet, match: MatchResult | None, names: NameLexicon,
    patterns: Sequence[QueryPattern] = (),
) -> TokenSeq:
    return Preprocessor(names, tuple(patterns))(tweet, match)


def ngrams(tokens: Sequence[str], n_max: int = 3) -> set[str]:
    grams = set()
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            grams.add(" ".join(tokens[i:i + n]))
    return grams


def feature_keys(seq: TokenSeq, clusters: ClusterLexicon | None, n_max: int = 3) -> list[str]:
    """All feature keys of a document, with repeats (for count features)."""
    keys = []
    toks = seq.tokens
    for n in range(1, n_max + 1):
        keys.extend(" ".join(toks[i:i + n]) for i in range(len(toks) - n + 1))
    if clusters is not None:
        for raw in seq.raw_tokens:
            cid = clusters.lookup(raw)
            if cid != OOV_CLUSTER:
                keys.append(CLUSTER_PREFIX + cid)
    return keys


@dataclass(frozen=True)
class Vocabulary:
    keys: tuple[str, ...]
    n_max: int = 3

    def __post_init__(self):
        object.__setattr__(self, "index", {k: i for i, k in enumerate(self.keys)})

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256(f"n_max={self.n_max}\n".encode())
        for k in self.keys:
            h.update(k.encode("utf-8") + b"\n")
        return h.hexdigest()[:16]


def build_vocabulary(
    train_seqs: Sequence[TokenSeq], clusters: ClusterLexicon | None = None, n_max: int = 3
) -> Vocabulary:
    if not train_seqs:
        raise ValueError("cannot build a vocabulary from an empty training set")
    keys = set()
    for seq in train_seqs:
        keys.update(feature_keys(seq, clusters, n_max))
    return Vocabulary(tuple(sorted(keys)), n_max)


@dataclass(frozen=True)
class FeatureVector:
    indices: tuple[int, ...]
    values: tuple[float, ...] | None = None  # None means binary presence


def vectorize(
    seq: TokenSeq, vocab: Vocabulary, clusters: ClusterLexicon | None = None,
    binary: bool = True,
) -> FeatureVector:
    counts: dict[int, int] = {}
    for key in feature_keys(seq, clusters, vocab.n_max):
        idx = vocab.index.get(key)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    indices = tuple(sorted(counts))
    if binary:
        return FeatureVector(indices)
    return FeatureVector(indices, tuple(float(counts[i]) for i in indices))


def to_matrix(vectors: Sequence[FeatureVector], n_features: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    idx: list[int] = []
    vals: list[float] = []
    for row, v in enumerate(vectors):
        idx.extend(v.indices)
        vals.extend(v.values if v.values is not None else [1.0] * len(v.indices))
        indptr[row + 1] = len(idx)
    return sp.csr_matrix(
        (np.asarray(vals, dtype=np.float64), np.asarray(idx, dtype=np.int64), indptr),
        shape=(len(vectors), n_features),
    )


@dataclass(frozen=True)
class Featurizer:
    """Preprocessor + vocabulary + cluster lexicon, fitted on training tweets only."""

    preprocessor: Preprocessor
    vocab: Vocabulary
    clusters: ClusterLexicon | None = None
    binary: bool = True

    @classmethod
    def fit(
        cls, tweets: Sequence[Tweet], matches: Mapping[str, MatchResult],
        preprocessor: Preprocessor, clusters: ClusterLexicon | None = None,
        n_max: int = 3, binary: bool = True,
    ) -> "Featurizer":
        seqs = [preprocessor(t, matches.get(t.tweet_id)) for t in tweets]
        return cls(preprocessor, build_vocabulary(seqs, clusters, n_max), clusters, binary)

    def transform(
        self, tweets: Sequence[Tweet], matches: Mapping[str, MatchResult]
    ) -> sp.csr_matrix:
        vecs = [
            vectorize(self.preprocessor(t, matches.get(t.tweet_id)), self.vocab,
                      self.clusters, self.binary)
            for t in tweets
        ]
        return to_matrix(vecs, len(self.vocab))
