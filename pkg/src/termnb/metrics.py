"""Evaluation: confusion matrices, P/R/F1, Cohen's kappa, splits, learning curves."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .corpus import Corpus, Label, Stratum, UserGold

log = logging.getLogger(__name__)


def _positive(value) -> bool:
    value = getattr(value, "label", value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    return Label(value) is Label.POSITIVE


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(gold: Mapping[str, object], predicted: Mapping[str, object]) -> ConfusionMatrix:
    """Count (gold, predicted) pairs with POSITIVE as the target class."""
    if set(gold) != set(predicted):
        missing = sorted(set(gold) ^ set(predicted))[:5]
        raise ValueError(f"gold and predicted ids differ, e.g. {missing}")
    tp = fp = fn = tn = 0
    for key, g in gold.items():
        g, p = _positive(g), _positive(predicted[key])
        if g and p:
            tp += 1
        elif p:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    degenerate: frozenset[str] = frozenset()  # metrics whose denominator was 0

    def rounded(self, digits: int = 3) -> tuple[float, float, float]:
        return tuple(round_half_up(v, digits) for v in (self.precision, self.recall, self.f1))


def round_half_up(x: float, digits: int = 3) -> float:
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def prf(cm: ConfusionMatrix) -> Metrics:
    degenerate = set()
    if cm.tp + cm.fp:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        degenerate.add("precision")
    if cm.tp + cm.fn:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        degenerate.add("recall")
    if precision + recall:
        f1 = 2 * recall * precision / (recall + precision)
    else:
        f1 = 0.0
        degenerate.add("f1")
    return Metrics(precision, recall, f1, frozenset(degenerate))


@dataclass(frozen=True)
class Agreement:
    kappa: float
    observed: float
    expected: float
    degenerate: bool = False


def agreement(a, b) -> Agreement:
    """Cohen's kappa for two binary annotations (aligned sequences or id maps)."""
    if isinstance(a, Mapping) or isinstance(b, Mapping):
        if set(a) != set(b):
            raise ValueError("annotations cover different ids")
        keys = sorted(a)
        a, b = [a[k] for k in keys], [b[k] for k in keys]
    a = np.array([_positive(v) for v in a], dtype=bool)
    b = np.array([_positive(v) for v in b], dtype=bool)
    if len(a) != len(b) or len(a) == 0:
        raise ValueError("annotations must be non-empty and of equal length")
    po = float(np.mean(a == b))
    pa, pb = a.mean(), b.mean()
    pe = float(pa * pb + (1 - pa) * (1 - pb))
    if pe >= 1.0:
        return Agreement(1.0, po, pe, degenerate=True)
    return Agreement((po - pe) / (1 - pe), po, pe)


def cohen_kappa(a, b) -> float:
    return agreement(a, b).kappa


@dataclass(frozen=True)
class Split:
    train_users: frozenset[str]
    test_users: frozenset[str]
    train_counts: Mapping[Stratum, int] = field(default_factory=dict)
    test_counts: Mapping[Stratum, int] = field(default_factory=dict)


def _largest_remainder(sizes: Sequence[int], ratio: float) -> list[int]:
    """Split floor(ratio * total) training slots across strata by largest remainder."""
    quotas = [ratio * n for n in sizes]
    alloc = [math.floor(q) for q in quotas]
    spare = math.floor(ratio * sum(sizes)) - sum(alloc)
    # ties go to the earlier stratum
    for i in sorted(range(len(sizes)), key=lambda i: (alloc[i] - quotas[i], i))[:spare]:
        alloc[i] += 1
    return alloc


def stratified_split(golds: Iterable[UserGold], ratio: float = 0.8, seed: int = 0) -> Split:
    """Per-stratum random partition; training shares by largest remainder."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    by_stratum: dict[Stratum, list[str]] = {s: [] for s in Stratum}
    for g in golds:
        by_stratum[g.stratum].append(g.user_id)
    shares = _largest_remainder([len(by_stratum[s]) for s in Stratum], ratio)
    rng = np.random.default_rng(seed)
    train, test = set(), set()
    train_counts, test_counts = {}, {}
    for stratum, n_train in zip(Stratum, shares):
        users = sorted(by_stratum[stratum])
        order = rng.permutation(len(users))
        picked = [users[i] for i in order]
        train.update(picked[:n_train])
        test.update(picked[n_train:])
        train_counts[stratum] = n_train
        test_counts[stratum] = len(users) - n_train
    return Split(frozenset(train), frozenset(test), train_counts, test_counts)


def user_gold_labels(golds: Iterable[UserGold]) -> dict[str, Label]:
    """Same-pregnancy users are positive; everyone else is negative."""
    return {
        g.user_id: Label.POSITIVE if g.stratum is Stratum.SAME_PREGNANCY else Label.NEGATIVE
        for g in golds
    }


@dataclass(frozen=True)
class CurvePoint:
    fraction: float
    n_users: int
    n_tweets: int
    metrics: Metrics


def learning_curve(
    train: Corpus, test: Corpus, matches, labels: Mapping[str, Label], sizes: Sequence[float],
    preprocessor, clusters=None, config=None, seed: int = 0,
) -> list[CurvePoint]:
    """Tweet-level P/R/F on ``test`` for classifiers trained on nested user subsets."""
    from .classifier import ClassifierConfig, train_classifier

    config = config or ClassifierConfig()
    if list(sizes) != sorted(sizes) or any(not 0 < s <= 1 for s in sizes):
        raise ValueError("sizes must be ascending fractions in (0, 1]")
    users = sorted(train.by_user)
    order = [users[i] for i in np.random.default_rng(seed).permutation(len(users))]
    test_tweets = [t for t in test if t.tweet_id in labels]
    gold = {t.tweet_id: labels[t.tweet_id] for t in test_tweets}
    points = []
    for frac in sizes:
        n_users = math.floor(frac * len(order) + 0.5)
        if n_users == 0:
            log.warning("training fraction %.3f selects no users; skipped", frac)
            continue
        subset = set(order[:n_users])
        tweets = [t for t in train if t.user_id in subset]
        try:
            clf = train_classifier(tweets, matches, labels, preprocessor, clusters, config)
        except ValueError as exc:
            log.warning("training fraction %.3f skipped: %s", frac, exc)
            continue
        preds = {p.tweet_id: p.label for p in clf.predict(test_tweets, matches)}
        n_train = sum(t.tweet_id in labels for t in tweets)
        points.append(CurvePoint(frac, n_users, n_train, prf(confusion(gold, preds))))
    return points


def _fmt(x: float) -> str:
    return f"{round_half_up(x):.3f}"


def write_metrics_csv(rows: Iterable[tuple[str, str, Metrics]], out: IO[str]) -> None:
    """Columns: classifier, level (tweet|user_pre|user_post), precision, recall, f1."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["classifier", "level", "precision", "recall", "f1"])
    for name, level, m in rows:
        w.writerow([name, level, _fmt(m.precision), _fmt(m.recall), _fmt(m.f1)])


def write_learning_curve_csv(points: Iterable[CurvePoint], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["size", "precision", "recall", "f1"])
    for p in points:
        w.writerow([repr(p.fraction), _fmt(p.metrics.precision), _fmt(p.metrics.recall),
                    _fmt(p.metrics.f1)])
