"""Featurizer + model bundles: training, prediction, files, cross-validation."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .corpus import Corpus, CorpusError, Label, Tweet
from .featurization import ClusterLexicon, Featurizer, NameLexicon, Preprocessor, Vocabulary
from .models import (
    CLASSIFIERS, DecisionTree, Ensemble, FingerprintMismatch, LogisticModel, SvmModel,
    SvmParams, ZeroR, train_logistic, train_svm, train_tree, train_zeror,
)
from .retrieval import MatchResult, QueryPattern

log = logging.getLogger(__name__)

MODEL_FORMAT = "termnb-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = "ensemble"
    tree_confidence: float = 0.25
    tree_min_leaf: int = 2
    tree_prune: bool = True
    logistic_l2: float = 1e-8
    logistic_tol: float = 1e-6
    svm: SvmParams = field(default_factory=SvmParams)
    n_max: int = 3
    binary: bool = True

    def __post_init__(self):
        if self.kind not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {self.kind!r}; choose from {', '.join(CLASSIFIERS)}")


def train_model(kind: str, X, y: np.ndarray, config: ClassifierConfig, fingerprint: str = ""):
    if kind == "zeror":
        return train_zeror(y, fingerprint)
    if kind == "tree":
        return train_tree(X, y, config.tree_confidence, config.tree_min_leaf,
                          config.tree_prune, fingerprint)
    if kind == "logistic":
        return train_logistic(X, y, config.logistic_l2, config.logistic_tol, fingerprint=fingerprint)
    if kind == "svm":
        return train_svm(X, y, config.svm, fingerprint)
    if kind == "ensemble":
        return Ensemble(tuple(train_model(k, X, y, config, fingerprint)
                              for k in ("tree", "logistic", "svm")))
    raise ValueError(f"unknown classifier {kind!r}")


@dataclass(frozen=True)
class Prediction:
    tweet_id: str
    label: Label
    member_votes: tuple[Label, ...] | None = None


def _as_label(flag) -> Label:
    return Label.POSITIVE if flag else Label.NEGATIVE


@dataclass(frozen=True)
class TrainedClassifier:
    kind: str
    featurizer: Featurizer
    model: object

    def __post_init__(self):
        if self.model.fingerprint != self.featurizer.vocab.fingerprint:
            raise FingerprintMismatch(
                f"model vocabulary {self.model.fingerprint} does not match "
                f"featurizer {self.featurizer.vocab.fingerprint}"
            )

    def predict(self, tweets: Sequence[Tweet], matches: Mapping[str, MatchResult]) -> list[Prediction]:
        tweets = list(tweets)
        if not tweets:
            return []
        X = self.featurizer.transform(tweets, matches)
        if isinstance(self.model, Ensemble):
            votes = self.model.member_votes(X)
            labels = 2 * votes.sum(axis=1) > 3
            return [
                Prediction(t.tweet_id, _as_label(lab), tuple(_as_label(v) for v in row))
                for t, lab, row in zip(tweets, labels, votes)
            ]
        labels = self.model.predict(X)
        return [Prediction(t.tweet_id, _as_label(lab)) for t, lab in zip(tweets, labels)]


def training_arrays(
    tweets: Iterable[Tweet], labels: Mapping[str, Label]
) -> tuple[list[Tweet], np.ndarray]:
    kept = [t for t in tweets if t.tweet_id in labels]
    y = np.array([labels[t.tweet_id] is Label.POSITIVE for t in kept], dtype=bool)
    return kept, y


def train_classifier(
    tweets: Iterable[Tweet], matches: Mapping[str, MatchResult], labels: Mapping[str, Label],
    preprocessor: Preprocessor, clusters: ClusterLexicon | None = None,
    config: ClassifierConfig = ClassifierConfig(),
) -> TrainedClassifier:
    """Fit vocabulary and model on the labelled subset of ``tweets``."""
    train, y = training_arrays(tweets, labels)
    if not train:
        raise ValueError("no labelled tweets to train on")
    feat = Featurizer.fit(train, matches, preprocessor, clusters, config.n_max, config.binary)
    X = feat.transform(train, matches)
    model = train_model(config.kind, X, y, config, feat.vocab.fingerprint)
    return TrainedClassifier(config.kind, feat, model)


# Model file: one JSON object with "format", "version", "variant",
# "fingerprint", a "featurizer" section (vocabulary, names, the cluster entries
# that map into the vocabulary) and a "model" section whose layout depends on
# the variant. Floats are written with repr precision, so load/save is exact.

def _model_to_dict(kind: str, model) -> dict:
    if kind == "ensemble":
        return {"members": [
            {"variant": k, **m.to_dict()} for k, m in zip(("tree", "logistic", "svm"), model.members)
        ]}
    return model.to_dict()


_LOADERS = {"zeror": ZeroR, "tree": DecisionTree, "logistic": LogisticModel, "svm": SvmModel}


def _model_from_dict(kind: str, d: dict, fingerprint: str):
    if kind == "ensemble":
        return Ensemble(tuple(
            _LOADERS[m["variant"]].from_dict(m, fingerprint) for m in d["members"]
        ))
    return _LOADERS[kind].from_dict(d, fingerprint)


def classifier_to_dict(clf: TrainedClassifier) -> dict:
    feat = clf.featurizer
    clusters = None
    if feat.clusters is not None:
        wanted = {k[2:] for k in feat.vocab.keys if k.startswith("c:")}
        clusters = {w: c for w, c in sorted(feat.clusters.clusters.items()) if c in wanted}
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "variant": clf.kind,
        "fingerprint": feat.vocab.fingerprint,
        "featurizer": {
            "vocabulary": list(feat.vocab.keys),
            "n_max": feat.vocab.n_max,
            "binary": feat.binary,
            "names": sorted(feat.preprocessor.names.names),
            "clusters": clusters,
        },
        "model": _model_to_dict(clf.kind, clf.model),
    }


def classifier_from_dict(d: dict, patterns: Sequence[QueryPattern] = ()) -> TrainedClassifier:
    if d.get("format") != MODEL_FORMAT:
        raise CorpusError(f"not a {MODEL_FORMAT} file")
    if d.get("version") != MODEL_VERSION:
        raise CorpusError(f"unsupported model file version {d.get('version')}")
    f = d["featurizer"]
    vocab = Vocabulary(tuple(f["vocabulary"]), int(f["n_max"]))
    if vocab.fingerprint != d["fingerprint"]:
        raise FingerprintMismatch("model file vocabulary does not match its fingerprint")
    clusters = ClusterLexicon(f["clusters"]) if f["clusters"] is not None else None
    pre = Preprocessor(NameLexicon(frozenset(f["names"])), tuple(patterns))
    feat = Featurizer(pre, vocab, clusters, bool(f["binary"]))
    return TrainedClassifier(d["variant"], feat, _model_from_dict(d["variant"], d["model"], d["fingerprint"]))


def dump_classifier(clf: TrainedClassifier, out: IO[str]) -> None:
    json.dump(classifier_to_dict(clf), out, sort_keys=True)
    out.write("\n")


def save_classifier(clf: TrainedClassifier, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        dump_classifier(clf, fh)


def load_classifier(path, patterns: Sequence[QueryPattern] = ()) -> TrainedClassifier:
    with open(path, encoding="utf-8") as fh:
        return classifier_from_dict(json.load(fh), patterns)


# predictions.tsv: tweet_id<TAB>positive|negative[<TAB>member votes, e.g. "+,+,-"]

def dump_predictions(preds: Iterable[Prediction], out: IO[str]) -> None:
    for p in preds:
        row = [p.tweet_id, p.label.value]
        if p.member_votes is not None:
            row.append(",".join("+" if v is Label.POSITIVE else "-" for v in p.member_votes))
        out.write("\t".join(row) + "\n")


def parse_predictions(stream: Iterable[str]) -> dict[str, Prediction]:
    preds = {}
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        try:
            label = Label(parts[1].strip().lower())
        except (IndexError, ValueError):
            raise CorpusError(f"bad prediction row {line!r}", lineno) from None
        votes = None
        if len(parts) > 2 and parts[2]:
            votes = tuple(Label.POSITIVE if v == "+" else Label.NEGATIVE for v in parts[2].split(","))
        preds[parts[0]] = Prediction(parts[0], label, votes)
    return preds


def read_predictions(path) -> dict[str, Prediction]:
    with open(path, encoding="utf-8") as fh:
        return parse_predictions(fh)


def user_folds(users: Iterable[str], k: int, seed: int) -> list[list[str]]:
    """Shuffle users deterministically and deal them into k near-equal folds."""
    users = sorted(set(users))
    if k < 2:
        raise ValueError("cross-validation needs k >= 2")
    if k > len(users):
        raise ValueError(f"k={k} folds but only {len(users)} users")
    order = np.random.default_rng(seed).permutation(len(users))
    return [[users[i] for i in chunk] for chunk in np.array_split(order, k)]


@dataclass
class CrossValidation:
    folds: list[list[str]]
    predictions: dict[str, Prediction]
    fold_of: dict[str, int]  # tweet_id -> fold index


def cross_validate(
    corpus: Corpus, matches: Mapping[str, MatchResult], labels: Mapping[str, Label],
    preprocessor: Preprocessor, clusters: ClusterLexicon | None = None,
    config: ClassifierConfig = ClassifierConfig(), k: int = 10, seed: int = 0,
) -> CrossValidation:
    """Out-of-fold predictions for every tweet; folds partition users."""
    folds = user_folds(corpus.by_user, k, seed)
    predictions: dict[str, Prediction] = {}
    fold_of: dict[str, int] = {}
    for f, test_users in enumerate(folds):
        held_out = set(test_users)
        train = [t for t in corpus if t.user_id not in held_out]
        clf = train_classifier(train, matches, labels, preprocessor, clusters, config)
        test = [t for u in test_users for t in corpus.by_user[u]]
        for p in clf.predict(test, matches):
            predictions[p.tweet_id] = p
            fold_of[p.tweet_id] = f
        log.info("fold %d/%d: trained on %d tweets, predicted %d", f + 1, k, len(train), len(test))
    ordered = {t.tweet_id: predictions[t.tweet_id] for t in corpus}
    return CrossValidation(folds, ordered, fold_of)
