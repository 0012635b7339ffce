"""File-to-file pipeline stages and the end-to-end runner.

Every stage reads its inputs from disk and writes plain JSONL/TSV/CSV/JSON
outputs. ``run_pipeline`` chains the same stage functions through a single
output directory, so a staged run and a full run produce identical bytes.
"""
from __future__ import annotations

import configparser
import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

from .classifier import (
    ClassifierConfig, cross_validate, dump_predictions, load_classifier, read_predictions,
    save_classifier, train_classifier,
)
from .cohort import CohortConfig, dump_cohort, read_cohort, select_comparators
from .corpus import Label, parse_annotations, read_annotations, read_corpus
from .featurization import ClusterLexicon, NameLexicon, Preprocessor
from .metrics import (
    confusion, learning_curve, prf, stratified_split, user_gold_labels, write_learning_curve_csv,
    write_metrics_csv,
)
from .prefilter import PrefixRuleSet, prefilter
from .retrieval import (
    VariantLexicon, compile_patterns, dump_matches, parse_pattern_file, read_matches, retrieve,
)

log = logging.getLogger(__name__)

# Output file names inside a run directory.
MATCHES = "matches.jsonl"
MATCH_REPORT = "match_report.json"
FILTERED = "filtered.jsonl"
PREFILTER_REPORT = "prefilter_report.json"
PREDICTIONS = "predictions.tsv"
COHORT = "cohort.jsonl"
METRICS = "metrics.csv"
RUN_REPORT = "run_report.json"
FAILED_MARKER = "FAILED"


class ConfigError(ValueError):
    """Invalid configuration, detected before any stage runs."""


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")


@dataclass(frozen=True)
class Resources:
    """Lexicons and compiled patterns shared by all stages."""

    patterns: tuple
    rules: PrefixRuleSet
    names: NameLexicon
    clusters: ClusterLexicon | None = None

    @classmethod
    def load(
        cls, variants=None, patterns=None, prefixes=None, names=None, clusters=None,
    ) -> "Resources":
        for p in (variants, patterns, prefixes, names, clusters):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"file not found: {p}")
        lexicon = VariantLexicon.load(variants) if variants else VariantLexicon.default()
        if patterns:
            with open(patterns, encoding="utf-8") as fh:
                compiled = compile_patterns(lexicon, parse_pattern_file(fh))
        else:
            compiled = compile_patterns(lexicon)
        return cls(
            tuple(compiled),
            PrefixRuleSet.load(prefixes) if prefixes else PrefixRuleSet.default(),
            NameLexicon.load(names) if names else NameLexicon.default(),
            ClusterLexicon.load(clusters) if clusters else None,
        )

    @property
    def preprocessor(self) -> Preprocessor:
        return Preprocessor(self.names, self.patterns)


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _labels(path) -> dict[str, Label]:
    labs, _ = read_annotations(path)
    return {lab.tweet_id: lab.label for lab in labs}


# -- stages -----------------------------------------------------------------

def stage_retrieve(corpus_path, out_matches, out_report, res: Resources) -> dict:
    corpus = read_corpus(corpus_path)
    matched, results, report = retrieve(corpus, list(res.patterns))
    with open(out_matches, "w", encoding="utf-8") as fh:
        dump_matches(matched, results, fh)
    summary = report.to_dict()
    summary["users_scanned"] = len(corpus.by_user)
    _write_json(summary, out_report)
    log.info("retrieve: %d tweets scanned, %d matched, %d kept from %d dual-outcome users",
             report.tweets_scanned, report.tweets_matched, report.tweets_kept,
             report.dual_outcome_users)
    return summary


def stage_prefilter(matches_path, out_filtered, out_report, res: Resources, k: float = 3.0) -> dict:
    matched, results = read_matches(matches_path)
    kept, kept_results, report = prefilter(matched, results, res.rules, k)
    with open(out_filtered, "w", encoding="utf-8") as fh:
        dump_matches(kept, kept_results, fh)
    with open(out_report, "w", encoding="utf-8") as fh:
        report.dump(fh)
    log.info("prefilter: removed %d users (%d tweets); %d tweets by %d users remain",
             len(report.flagged_users), report.removed_tweet_count,
             report.tweets_after, report.users_after)
    return report.to_dict()


def stage_train(matches_path, labels_path, out_model, res: Resources, config: ClassifierConfig):
    corpus, results = read_matches(matches_path)
    clf = train_classifier(corpus, results, _labels(labels_path), res.preprocessor,
                           res.clusters, config)
    save_classifier(clf, out_model)
    log.info("train: %s model over %d features", config.kind, len(clf.featurizer.vocab))
    return clf


def stage_predict(matches_path, model_path, out_predictions, res: Resources) -> int:
    corpus, results = read_matches(matches_path)
    clf = load_classifier(model_path, res.patterns)
    preds = clf.predict(list(corpus), results)
    with open(out_predictions, "w", encoding="utf-8") as fh:
        dump_predictions(preds, fh)
    log.info("predict: %d tweets, %d positive", len(preds),
             sum(p.label is Label.POSITIVE for p in preds))
    return len(preds)


def stage_cross_validate(
    matches_path, labels_path, out_predictions, res: Resources, config: ClassifierConfig,
    folds: int = 10, seed: int = 0,
) -> int:
    corpus, results = read_matches(matches_path)
    preds = []
    if len(corpus):
        cv = cross_validate(corpus, results, _labels(labels_path), res.preprocessor,
                            res.clusters, config, k=folds, seed=seed)
        preds = list(cv.predictions.values())
    with open(out_predictions, "w", encoding="utf-8") as fh:
        dump_predictions(preds, fh)
    log.info("cross-validate: %d-fold out-of-fold predictions for %d tweets", folds, len(preds))
    return len(preds)


def stage_select(matches_path, predictions_path, out_cohort, threshold_days: int | None = 50):
    corpus, results = read_matches(matches_path)
    preds = read_predictions(predictions_path)
    decisions = select_comparators(preds, results, corpus, CohortConfig(threshold_days))
    with open(out_cohort, "w", encoding="utf-8") as fh:
        dump_cohort(decisions, fh)
    log.info("select: %d of %d users included (threshold %s days)",
             sum(d.included for d in decisions), len(decisions), threshold_days)
    return decisions


def evaluation_rows(
    classifier: str, labels_path=None, predictions_path=None, gold_path=None, cohort_path=None,
) -> list:
    """Metric rows for whatever gold/prediction pairs are supplied.

    Tweet level compares tweet labels with predictions on their shared ids.
    User level compares same-pregnancy users against cohort membership, both
    without (``user_pre``) and with (``user_post``) the day threshold.
    """
    rows = []
    if labels_path and predictions_path:
        gold = _labels(labels_path)
        preds = read_predictions(predictions_path)
        shared = sorted(set(gold) & set(preds))
        cm = confusion({k: gold[k] for k in shared}, {k: preds[k].label for k in shared})
        rows.append((classifier, "tweet", prf(cm)))
    if gold_path and cohort_path:
        with open(gold_path, "rb") as fh:
            _, golds = parse_annotations(fh)
        gold = user_gold_labels(golds)
        decisions = {d.user_id: d for d in read_cohort(cohort_path)}
        pre, post = {}, {}
        for user in gold:
            d = decisions.get(user)
            pre[user] = d is not None and bool(d.candidates)
            post[user] = d is not None and d.included
        rows.append((classifier, "user_pre", prf(confusion(gold, pre))))
        rows.append((classifier, "user_post", prf(confusion(gold, post))))
    return rows


def stage_evaluate(out_metrics, classifier: str = "ensemble", **paths) -> list:
    rows = evaluation_rows(classifier, **paths)
    with open(out_metrics, "w", encoding="utf-8", newline="") as fh:
        write_metrics_csv(rows, fh)
    return rows


def stage_learning_curve(
    matches_path, labels_path, gold_path, out_csv, res: Resources, config: ClassifierConfig,
    sizes: Sequence[float] = tuple(i / 10 for i in range(1, 11)), ratio: float = 0.8,
    seed: int = 0,
):
    corpus, results = read_matches(matches_path)
    with open(gold_path, "rb") as fh:
        _, golds = parse_annotations(fh)
    golds = [g for g in golds if g.user_id in corpus.by_user]
    split = stratified_split(golds, ratio, seed)
    train = corpus.subset(lambda t: t.user_id in split.train_users)
    test = corpus.subset(lambda t: t.user_id in split.test_users)
    points = learning_curve(train, test, results, _labels(labels_path), sizes,
                            res.preprocessor, res.clusters, config, seed)
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        write_learning_curve_csv(points, fh)
    return points


# -- configuration and the full run ----------------------------------------

_PATH_KEYS = ("corpus", "labels", "gold", "model", "variants", "patterns", "prefixes",
              "names", "clusters", "out_dir")


@dataclass(frozen=True)
class PipelineConfig:
    corpus: str | None = None
    labels: str | None = None  # tweet_labels.tsv, used for cross-validation and tweet metrics
    gold: str | None = None  # user_gold.tsv, used for user-level metrics
    model: str | None = None  # pretrained model; if set, no training happens
    variants: str | None = None
    patterns: str | None = None
    prefixes: str | None = None
    names: str | None = None
    clusters: str | None = None
    out_dir: str = "out"
    threshold_days: int | None = 50
    seed: int = 0
    split_ratio: float = 0.8
    cv_folds: int = 10
    classifier: str = "ensemble"
    outlier_k: float = 3.0

    def __post_init__(self):
        if self.threshold_days is not None and self.threshold_days < 0:
            raise ConfigError("threshold_days must be >= 0")
        if not 0 < self.split_ratio < 1:
            raise ConfigError("split_ratio must lie in (0, 1)")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be >= 2")

    def classifier_config(self) -> ClassifierConfig:
        return ClassifierConfig(kind=self.classifier)

    def validate(self) -> None:
        if not self.corpus:
            raise ConfigError("no corpus given")
        for key in _PATH_KEYS[:-1]:
            path = getattr(self, key)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{key} file not found: {path}")
        if self.model is None and self.labels is None:
            raise ConfigError("need either a model file or tweet labels to classify")
        ClassifierConfig(kind=self.classifier)


def parse_threshold(value) -> int | None:
    if value is None or str(value).strip().lower() in ("none", "inf", "infinity", ""):
        return None
    return int(value)


def load_config(path) -> PipelineConfig:
    """Read an INI file with a ``[pipeline]`` section.

    Relative paths are resolved against the config file's directory.
    """
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"config file not found: {path}")
    if "pipeline" not in parser:
        raise ConfigError(f"{path}: missing [pipeline] section")
    section = parser["pipeline"]
    known = {f.name: f for f in fields(PipelineConfig)}
    unknown = set(section) - set(known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    base = Path(path).resolve().parent
    values = {}
    for key, raw in section.items():
        if key in _PATH_KEYS:
            values[key] = str(base / raw)
        elif key == "threshold_days":
            values[key] = parse_threshold(raw)
        elif key in ("seed", "cv_folds"):
            values[key] = section.getint(key)
        elif key in ("split_ratio", "outlier_k"):
            values[key] = section.getfloat(key)
        else:
            values[key] = raw
    return PipelineConfig(**values)


def with_overrides(config: PipelineConfig, **overrides) -> PipelineConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})


@dataclass
class RunReport:
    status: str = "ok"
    failed_stage: str | None = None
    error: str | None = None
    stages: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)


def run_pipeline(config: PipelineConfig) -> RunReport:
    """Run every stage into ``config.out_dir``; raises StageError on failure.

    A failed run leaves a FAILED marker and a run report naming the stage,
    so that partial outputs are never mistaken for complete ones.
    """
    try:
        config.validate()
        res = Resources.load(config.variants, config.patterns, config.prefixes,
                             config.names, config.clusters)
    except ConfigError as exc:
        raise StageError("startup", exc) from exc
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for stale in (FAILED_MARKER, RUN_REPORT):
        if (out / stale).exists():
            os.remove(out / stale)
    report = RunReport()
    stage = "retrieve"
    try:
        report.stages[stage] = stage_retrieve(config.corpus, out / MATCHES, out / MATCH_REPORT, res)
        stage = "prefilter"
        report.stages[stage] = stage_prefilter(out / MATCHES, out / FILTERED,
                                               out / PREFILTER_REPORT, res, config.outlier_k)
        stage = "classify"
        if config.model:
            n = stage_predict(out / FILTERED, config.model, out / PREDICTIONS, res)
        else:
            n = stage_cross_validate(out / FILTERED, config.labels, out / PREDICTIONS, res,
                                     config.classifier_config(), config.cv_folds, config.seed)
        report.stages[stage] = {"predicted_tweets": n}
        stage = "select"
        decisions = stage_select(out / FILTERED, out / PREDICTIONS, out / COHORT,
                                 config.threshold_days)
        report.stages[stage] = {"users": len(decisions),
                                "included": sum(d.included for d in decisions)}
        stage = "evaluate"
        rows = stage_evaluate(out / METRICS, config.classifier,
                              labels_path=config.labels, predictions_path=out / PREDICTIONS,
                              gold_path=config.gold, cohort_path=out / COHORT)
        report.stages[stage] = {f"{lvl}": [m.precision, m.recall, m.f1] for _, lvl, m in rows}
    except Exception as exc:
        report.status, report.failed_stage, report.error = "failed", stage, str(exc)
        (out / FAILED_MARKER).write_text(f"stage {stage} failed: {exc}\n", encoding="utf-8")
        _write_json(report.__dict__, out / RUN_REPORT)
        raise StageError(stage, exc) from exc
    report.outputs = [MATCHES, MATCH_REPORT, FILTERED, PREFILTER_REPORT, PREDICTIONS, COHORT, METRICS]
    _write_json(report.__dict__, out / RUN_REPORT)
    return report
