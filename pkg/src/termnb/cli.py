"""Command-line front end: one subcommand per pipeline stage, plus ``run``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import pipeline as pl
from .classifier import ClassifierConfig
from .models import CLASSIFIERS

log = logging.getLogger("termnb")


def _resources(args) -> pl.Resources:
    return pl.Resources.load(args.variants, args.patterns, args.prefixes, args.names,
                             args.clusters)


def _classifier_config(args) -> ClassifierConfig:
    return ClassifierConfig(kind=args.classifier)


def cmd_retrieve(args):
    pl.stage_retrieve(args.corpus, args.out, args.report, _resources(args))


def cmd_prefilter(args):
    pl.stage_prefilter(args.matches, args.out, args.report, _resources(args), args.outlier_k)


def cmd_train(args):
    pl.stage_train(args.matches, args.labels, args.out, _resources(args), _classifier_config(args))


def cmd_predict(args):
    pl.stage_predict(args.matches, args.model, args.out, _resources(args))


def cmd_cross_validate(args):
    pl.stage_cross_validate(args.matches, args.labels, args.out, _resources(args),
                            _classifier_config(args), args.folds, args.seed)


def cmd_select(args):
    pl.stage_select(args.matches, args.predictions, args.out, args.threshold_days)


def cmd_evaluate(args):
    if not ((args.labels and args.predictions) or (args.gold and args.cohort)):
        raise pl.ConfigError("evaluate needs --labels with --predictions, or --gold with --cohort")
    paths = dict(labels_path=args.labels, predictions_path=args.predictions,
                 gold_path=args.gold, cohort_path=args.cohort)
    if args.out:
        rows = pl.stage_evaluate(args.out, args.classifier, **paths)
    else:
        rows = pl.evaluation_rows(args.classifier, **paths)
    for name, level, m in rows:
        p, r, f = m.rounded()
        flag = f"  (degenerate: {', '.join(sorted(m.degenerate))})" if m.degenerate else ""
        print(f"{name}\t{level}\tP={p:.3f} R={r:.3f} F={f:.3f}{flag}")


def cmd_learning_curve(args):
    sizes = [float(s) for s in args.sizes.split(",")]
    points = pl.stage_learning_curve(args.matches, args.labels, args.gold, args.out,
                                     _resources(args), _classifier_config(args), sizes,
                                     args.ratio, args.seed)
    for pt in points:
        p, r, f = pt.metrics.rounded()
        print(f"{pt.fraction:g}\tusers={pt.n_users}\tP={p:.3f} R={r:.3f} F={f:.3f}")


def cmd_synth(args):
    from .synthetic import SynthConfig, generate, write_dataset

    ds = generate(SynthConfig(n_users=args.users, seed=args.seed))
    write_dataset(ds, args.out)
    print(f"wrote {len(ds.tweets)} tweets by {args.users} users to {args.out}")


def cmd_run(args):
    config = pl.load_config(args.config) if args.config else pl.PipelineConfig()
    overrides = {k: getattr(args, k) for k in (
        "corpus", "labels", "gold", "model", "variants", "patterns", "prefixes", "names",
        "clusters", "out_dir", "seed", "classifier")}
    overrides["cv_folds"] = args.folds
    config = pl.with_overrides(config, **overrides)
    if args.threshold_days is not _UNSET:
        config = dataclasses.replace(config, threshold_days=args.threshold_days)
    report = pl.run_pipeline(config)
    sel = report.stages.get("select", {})
    print(f"included {sel.get('included', 0)} of {sel.get('users', 0)} users; "
          f"outputs in {config.out_dir}")


_UNSET = object()


def _threshold(value: str):
    try:
        t = pl.parse_threshold(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a day count: {value!r}") from None
    if t is not None and t < 0:
        raise argparse.ArgumentTypeError("threshold must be >= 0")
    return t


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="termnb",
        description="Find users reporting a term pregnancy and a normal birthweight in tweets.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    lex = argparse.ArgumentParser(add_help=False)
    g = lex.add_argument_group("lexicons")
    g.add_argument("--variants", help="canonical<TAB>variant lexicon (default: bundled)")
    g.add_argument("--patterns", help="id<TAB>TERM|NB<TAB>regex template overrides")
    g.add_argument("--prefixes", help="one pre-filter prefix per line (default: bundled)")
    g.add_argument("--names", help="one given name per line (default: bundled)")
    g.add_argument("--clusters", help="bitstring<TAB>word<TAB>count word clusters")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--classifier", choices=CLASSIFIERS, default="ensemble")
    seed = argparse.ArgumentParser(add_help=False)
    seed.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("retrieve", parents=[lex], help="match query patterns")
    p.add_argument("corpus", help="tweets.jsonl")
    p.add_argument("-o", "--out", required=True, help="matches.jsonl to write")
    p.add_argument("--report", required=True, help="match_report.json to write")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("prefilter", parents=[lex], help="remove re-posting accounts")
    p.add_argument("matches")
    p.add_argument("-o", "--out", required=True, help="filtered matches to write")
    p.add_argument("--report", required=True, help="prefilter_report.json to write")
    p.add_argument("--outlier-k", type=float, default=3.0)
    p.set_defaults(func=cmd_prefilter)

    p = sub.add_parser("train", parents=[lex, model], help="train a tweet classifier")
    p.add_argument("matches")
    p.add_argument("--labels", required=True, help="tweet_labels.tsv")
    p.add_argument("-o", "--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[lex], help="label tweets with a trained model")
    p.add_argument("matches")
    p.add_argument("--model", required=True)
    p.add_argument("-o", "--out", required=True, help="predictions.tsv to write")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cross-validate", parents=[lex, model, seed],
                       help="out-of-fold predictions with folds over users")
    p.add_argument("matches")
    p.add_argument("--labels", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("-o", "--out", required=True, help="predictions.tsv to write")
    p.set_defaults(func=cmd_cross_validate)

    p = sub.add_parser("select", help="apply the day-gap rule per user")
    p.add_argument("matches")
    p.add_argument("--predictions", required=True)
    p.add_argument("--threshold-days", type=_threshold, default=50,
                   help="maximum gap in days, or 'none' for no limit (default 50)")
    p.add_argument("-o", "--out", required=True, help="cohort.jsonl to write")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="precision, recall and F1")
    p.add_argument("--labels", help="gold tweet labels")
    p.add_argument("--predictions", help="predicted tweet labels")
    p.add_argument("--gold", help="user_gold.tsv")
    p.add_argument("--cohort", help="cohort.jsonl")
    p.add_argument("--classifier", default="ensemble", help="name for the report rows")
    p.add_argument("-o", "--out", help="metrics CSV to write")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("learning-curve", parents=[lex, model, seed],
                       help="tweet-level scores for growing training sets")
    p.add_argument("matches")
    p.add_argument("--labels", required=True)
    p.add_argument("--gold", required=True, help="user strata for the train/test split")
    p.add_argument("--sizes", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("-o", "--out", required=True, help="learning_curve.csv to write")
    p.set_defaults(func=cmd_learning_curve)

    p = sub.add_parser("run", parents=[lex], help="run every stage")
    p.add_argument("--config", help="INI file with a [pipeline] section")
    p.add_argument("--corpus")
    p.add_argument("--labels")
    p.add_argument("--gold")
    p.add_argument("--model")
    p.add_argument("-o", "--out-dir", dest="out_dir")
    p.add_argument("--threshold-days", type=_threshold, default=_UNSET)
    p.add_argument("--seed", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--classifier", choices=CLASSIFIERS)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="write a synthetic corpus with planted comparators")
    p.add_argument("out", help="output directory")
    p.add_argument("--users", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    stage = args.command
    try:
        args.func(args)
    except pl.StageError as exc:
        print(f"termnb: {exc}", file=sys.stderr)
        return 2 if exc.stage == "startup" else 1
    except pl.ConfigError as exc:
        print(f"termnb {stage}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"termnb {stage}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
