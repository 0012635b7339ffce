"""Regex retrieval of tweets reporting a term pregnancy or a normal birthweight.

Pattern sources are templates. ``{word}`` is replaced by an alternation over
the lexical variants of ``word``; ``{!word}`` becomes one fixed-width
negative lookbehind ``(?<!variant\\s)`` per variant, since lookbehinds cannot
hold alternatives of different widths. Each pattern exposes the gestation or
weight sub-expression as a group whose name starts with ``value``; the text
normalizer substitutes exactly that group.

Matching runs on lowercased text with letter elongations collapsed
("dayssssss" -> "days"). Spans are character offsets into the original text.
"""
from __future__ import annotations

import enum
import importlib.resources
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

from .corpus import Corpus, CorpusError, Tweet, parse_corpus


class Outcome(str, enum.Enum):
    TERM = "TERM"
    NB = "NB"


class PatternError(ValueError):
    """A query pattern could not be compiled."""

    def __init__(self, pattern_id: int, construct: str, reason: str):
        self.pattern_id = pattern_id
        self.construct = construct
        super().__init__(f"pattern {pattern_id}: {reason} near {construct!r}")


# Repairs to the source listing, whose alternation bars were lost in
# typesetting: every gap between alternatives is read as "|", the gap after
# "i(\W?m|\sam)" and similar is "\s", "2 [5-9]" in the kilogram branch is
# "2\.[5-9]", and "\b" follows days/weeks so a shorter variant ("day") cannot
# sidestep the trailing negative lookahead of pattern 3.
_QTY_DAYS_WEEKS = r"(?:(?:\d|1[0-9]|2[0-1])\W?{days}\b)|(?:[1-3]\W?{weeks}\b)"
_IM = r"i(?:\W?m|\sam)"
_DUE_DATE_IS = r"my\sdue\sdate(?:\W?s|\sis)"
_POUNDS_SEP = r"{pounds}\.?(?:\s?(?:\W|&|and)\s?)?"

TEMPLATES: tuple[tuple[int, Outcome, str, str], ...] = (
    (1, Outcome.TERM,
     r"{!until}(?<!like\s)(?<!when\s)\b" + _IM
     + r"\s(?P<value>(?:(?:3[7-9]|4[0-2])\W?{weeks}\b)|(?:full\W?term))",
     "I'm 37-42 weeks / full term"),
    (2, Outcome.TERM,
     r"(?<!be\s)(?<!&\s)(?<!and\s)(?<!was\s)\b(?P<value>" + _QTY_DAYS_WEEKS
     + r")\s(?:{until}|away\sfrom|from|to)\s(?:my\sdue\sdate|" + _IM + r"\sdue\b)",
     "<=21 days / 1-3 weeks until my due date"),
    (3, Outcome.TERM,
     r"\b(?:" + _DUE_DATE_IS + r"|" + _IM + r"\sdue)\s(?:in\s)?(?P<value>"
     + _QTY_DAYS_WEEKS + r")(?!\sfrom|\ssooner|\sbefore|\safter)",
     "due in <=21 days / 1-3 weeks"),
    (4, Outcome.TERM,
     r"(?<!from\s)\b(?:(?P<value>{tomorrow}|{today})(?:\W?s|\sis)"
     r"|(?P<value_y>yesterday)\swas)\smy\sdue\sdate",
     "today/tomorrow is (yesterday was) my due date"),
    (5, Outcome.TERM,
     r"\b(?:(?:" + _DUE_DATE_IS + r"|" + _IM + r"\sdue)\s(?P<value>{tomorrow}|{today})"
     r"|my\sdue\sdate\swas\s(?P<value_y>yesterday)|i\swas\sdue\s(?P<value_y2>yesterday))",
     "I'm due today/tomorrow, was due yesterday"),
    (6, Outcome.NB,
     r"\b(?:born|birth|delivered|arrived|came|meet|welcome|is.*here|introducing"
     r"|debut|entrance)\b.*?\b(?P<value>(?:5\W?" + _POUNDS_SEP
     + r"(?:[8-9]|1[0-5])\W?{ounces})|(?:(?:[6-9]|10)\W?" + _POUNDS_SEP
     + r"(?:[0-9]|1[0-5])\W?{ounces}))",
     "birth verb ... 5 lb 8 oz to 10 lb 15 oz"),
    (7, Outcome.NB,
     r"\bborn\b.*?\b(?P<value>(?:(?:2\.[5-9]|[3-4]\.[0-9])\W?{kilograms})"
     r"|(?:(?:2\W?[5-9][0-9][0-9]|[3-4]\W?[0-9][0-9][0-9])\W?{grams}))\b",
     "born ... 2.5-4.9 kg / 2500-4999 g"),
)


@dataclass(frozen=True)
class VariantLexicon:
    """Canonical keyword -> surface variants (canonical form always included)."""

    variants: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "VariantLexicon":
        table: dict[str, list[str]] = {}
        for canonical, variant in pairs:
            canonical, variant = canonical.strip().lower(), variant.strip().lower()
            if not canonical or not variant:
                continue
            bucket = table.setdefault(canonical, [canonical])
            if variant not in bucket:
                bucket.append(variant)
        return cls({k: tuple(v) for k, v in table.items()})

    @classmethod
    def parse(cls, stream: Iterable[str]) -> "VariantLexicon":
        pairs = []
        for lineno, line in enumerate(stream, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusError(f"expected canonical<TAB>variant: {line!r}", lineno)
            pairs.append((parts[0], parts[1]))
        return cls.from_pairs(pairs)

    @classmethod
    def load(cls, path) -> "VariantLexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh)

    @classmethod
    def default(cls) -> "VariantLexicon":
        res = importlib.resources.files("termnb") / "data" / "variants.tsv"
        with res.open(encoding="utf-8") as fh:
            return cls.parse(fh)

    def __getitem__(self, term: str) -> tuple[str, ...]:
        return self.variants.get(term, (term,))


def _ordered(variants: Iterable[str]) -> list[str]:
    return sorted(set(variants), key=lambda v: (-len(v), v))


def expand_variants(term: str, lexicon: VariantLexicon) -> str:
    """Regex alternation over the variants of ``term``, longest first."""
    if term not in lexicon.variants:
        return term
    forms = _ordered(lexicon.variants[term])
    if len(forms) == 1:
        return re.escape(forms[0])
    return "(?:" + "|".join(re.escape(v) for v in forms) + ")"


_PLACEHOLDER = re.compile(r"\{(!?)([a-z][a-z ]*)\}")


def expand_template(template: str, lexicon: VariantLexicon) -> str:
    def repl(m: re.Match) -> str:
        negated, term = m.group(1), m.group(2)
        if negated:
            return "".join(
                "(?<!" + re.escape(v).replace(r"\ ", r"\s") + r"\s)"
                for v in _ordered(lexicon[term])
            )
        return expand_variants(term, lexicon)

    return _PLACEHOLDER.sub(repl, template)


@dataclass(frozen=True)
class QueryPattern:
    pattern_id: int
    outcome: Outcome
    source: str
    description: str = ""
    regex: re.Pattern = field(default=None, repr=False, compare=False)

    def value_span(self, m: re.Match) -> tuple[int, int]:
        """Span of the gestation/weight sub-expression inside a match."""
        for name in self.regex.groupindex:
            if name.startswith("value") and m.start(name) >= 0:
                return m.span(name)
        return m.span()


def compile_pattern(
    pattern_id: int, outcome: Outcome, template: str, lexicon: VariantLexicon,
    description: str = "",
) -> QueryPattern:
    source = expand_template(template, lexicon)
    try:
        regex = re.compile(source)
    except re.error as exc:
        pos = exc.pos or 0
        raise PatternError(pattern_id, source[max(0, pos - 10): pos + 10], exc.msg) from None
    return QueryPattern(pattern_id, Outcome(outcome), source, description, regex)


def compile_patterns(
    lexicon: VariantLexicon | None = None,
    templates: Iterable[tuple[int, Outcome, str, str]] = TEMPLATES,
) -> list[QueryPattern]:
    lexicon = VariantLexicon.default() if lexicon is None else lexicon
    patterns = [compile_pattern(pid, out, src, lexicon, desc) for pid, out, src, desc in templates]
    ids = [p.pattern_id for p in patterns]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate pattern ids in {ids}")
    return patterns


def parse_pattern_file(stream: Iterable[str]) -> list[tuple[int, Outcome, str, str]]:
    """Read ``id<TAB>TERM|NB<TAB>regex`` override rows."""
    rows = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t", 2)
        if len(parts) != 3:
            raise CorpusError(f"expected id<TAB>outcome<TAB>regex: {line!r}", lineno)
        try:
            rows.append((int(parts[0]), Outcome(parts[1].strip().upper()), parts[2], ""))
        except ValueError as exc:
            raise CorpusError(str(exc), lineno) from None
    return rows


_ELONGATION = re.compile(r"([^\W\d_])\1{2,}")


def normalize_for_matching(text: str) -> tuple[str, list[int]]:
    """Lowercase and collapse letter runs of 3+ to one letter.

    Returns the normalized text and, for each of its characters, the index of
    the original character it came from (plus a trailing ``len(text)``).
    """
    chars: list[str] = []
    origin: list[int] = []
    for i, ch in enumerate(text):
        for low in ch.lower():
            chars.append(low)
            origin.append(i)
    lowered = "".join(chars)
    out: list[str] = []
    out_origin: list[int] = []
    last = 0
    for m in _ELONGATION.finditer(lowered):
        out.append(lowered[last:m.start() + 1])
        out_origin.extend(origin[last:m.start() + 1])
        last = m.end()
    out.append(lowered[last:])
    out_origin.extend(origin[last:])
    out_origin.append(len(text))
    return "".join(out), out_origin


def collapse_elongations(text: str) -> str:
    return _ELONGATION.sub(r"\1", text)


@dataclass(frozen=True)
class MatchResult:
    tweet_id: str
    matched: tuple[tuple[int, int, int], ...]  # (pattern_id, start, end)
    outcomes: frozenset[Outcome]

    @property
    def pattern_ids(self) -> tuple[int, ...]:
        return tuple(pid for pid, _, _ in self.matched)

    def to_record(self) -> dict:
        return {
            "outcomes": sorted(o.value for o in self.outcomes),
            "matches": [list(m) for m in self.matched],
        }


def is_retweet(text: str) -> bool:
    return text[:4].lower() == "rt @"


def match_tweet(tweet: Tweet, patterns: Iterable[QueryPattern]) -> MatchResult | None:
    """Return every pattern the tweet matches (first span each), or None."""
    if is_retweet(tweet.text):
        return None
    norm, origin = normalize_for_matching(tweet.text)
    matched = []
    outcomes = set()
    for p in patterns:
        m = p.regex.search(norm)
        if m is None:
            continue
        # a collapsed letter run belongs to the span up to the next kept character
        end = max(origin[m.end()], origin[m.end() - 1] + 1)
        matched.append((p.pattern_id, origin[m.start()], end))
        outcomes.add(p.outcome)
    if not matched:
        return None
    return MatchResult(tweet.tweet_id, tuple(matched), frozenset(outcomes))


@dataclass
class RetrievalReport:
    tweets_scanned: int = 0
    retweets_skipped: int = 0
    tweets_matched: int = 0
    users_matched: int = 0
    per_pattern: dict[int, int] = field(default_factory=dict)
    multi_pattern_tweets: int = 0
    dual_outcome_users: int = 0
    tweets_kept: int = 0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["per_pattern"] = {str(k): v for k, v in sorted(self.per_pattern.items())}
        return d


def retrieve(
    corpus: Corpus, patterns: list[QueryPattern], require_both: bool = True,
) -> tuple[Corpus, dict[str, MatchResult], RetrievalReport]:
    """Match every tweet and keep those by users with both TERM and NB matches.

    With ``require_both=False`` every matching tweet is kept.
    """
    report = RetrievalReport(tweets_scanned=len(corpus))
    report.per_pattern = {p.pattern_id: 0 for p in patterns}
    results: dict[str, MatchResult] = {}
    for tweet in corpus:
        if is_retweet(tweet.text):
            report.retweets_skipped += 1
            continue
        res = match_tweet(tweet, patterns)
        if res is None:
            continue
        results[tweet.tweet_id] = res
        for pid in res.pattern_ids:
            report.per_pattern[pid] += 1
        if len(res.matched) > 1:
            report.multi_pattern_tweets += 1
    report.tweets_matched = len(results)
    user_outcomes: dict[str, set] = {}
    for tid, res in results.items():
        user_outcomes.setdefault(corpus[tid].user_id, set()).update(res.outcomes)
    report.users_matched = len(user_outcomes)
    dual = {u for u, outs in user_outcomes.items() if len(outs) == 2}
    report.dual_outcome_users = len(dual)
    if require_both:
        results = {tid: r for tid, r in results.items() if corpus[tid].user_id in dual}
    matched = corpus.subset(lambda t: t.tweet_id in results)
    report.tweets_kept = len(matched)
    return matched, results, report


def per_user_counts(corpus: Corpus) -> Counter:
    return Counter({u: len(ts) for u, ts in corpus.by_user.items()})


# matches.jsonl: one matched tweet per line, the tweet record plus
# "outcomes" (sorted TERM/NB tags) and "matches" ([pattern_id, start, end]).

def dump_matches(corpus: Corpus, results: Mapping[str, MatchResult], out: IO[str]) -> None:
    for tweet in corpus:
        rec = tweet.to_record()
        rec.update(results[tweet.tweet_id].to_record())
        out.write(json.dumps(rec, ensure_ascii=False) + "\n")


def parse_matches(stream) -> tuple[Corpus, dict[str, MatchResult]]:
    lines = list(stream)
    corpus = parse_corpus(lines)
    results: dict[str, MatchResult] = {}
    for lineno, line in enumerate(lines, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        if not line.strip():
            continue
        rec = json.loads(line)
        try:
            matched = tuple((int(p), int(s), int(e)) for p, s, e in rec["matches"])
            outcomes = frozenset(Outcome(o) for o in rec["outcomes"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"bad match fields: {exc}", lineno) from None
        results[str(rec["id"])] = MatchResult(str(rec["id"]), matched, outcomes)
    return corpus, results


def read_matches(path) -> tuple[Corpus, dict[str, MatchResult]]:
    with open(path, "rb") as fh:
        return parse_matches(fh)
