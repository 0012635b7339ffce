"""Every classifier on a synthetic corpus, scored at tweet and user level.

Runs the full pipeline (10-fold cross-validation over users) once per
classifier and compares the selected cohort with the planted comparators at
several day thresholds.

    python scripts/run_synthetic_experiment.py --users 200 --seed 0
"""
import argparse
import tempfile
import time
from pathlib import Path

from termnb import pipeline as pl
from termnb.classifier import read_predictions
from termnb.cohort import CohortConfig, included_users, select_comparators
from termnb.metrics import ConfusionMatrix, prf
from termnb.models import CLASSIFIERS
from termnb.retrieval import read_matches
from termnb.synthetic import SynthConfig, generate, write_dataset


def recovery(found: set, truth: set):
    tp = len(found & truth)
    return prf(ConfusionMatrix(tp, len(found - truth), len(truth - found)))


def fmt(xs):
    return "/".join(f"{x:.3f}" for x in xs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--out", help="keep outputs here instead of a temp dir")
    args = ap.parse_args()

    ds = generate(SynthConfig(n_users=args.users, seed=args.seed))
    root = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="termnb-"))
    paths = write_dataset(ds, root / "data")
    thresholds = (50, 125, None)

    header = f"{'classifier':<10} {'tweet P/R/F':<18} {'user P/R/F @50':<18} " + \
        " ".join(f"{'recovery F1 @' + str(t or 'inf'):<17}" for t in thresholds) + " secs"
    print(header)
    for kind in CLASSIFIERS:
        out = root / kind
        config = pl.PipelineConfig(corpus=str(paths["tweets.jsonl"]), labels=str(paths["tweet_labels.tsv"]),
                                   gold=str(paths["user_gold.tsv"]), out_dir=str(out), seed=args.seed,
                                   cv_folds=args.folds, classifier=kind)
        start = time.perf_counter()
        report = pl.run_pipeline(config)
        secs = time.perf_counter() - start
        scores = report.stages["evaluate"]
        corpus, matches = read_matches(out / pl.FILTERED)
        preds = read_predictions(out / pl.PREDICTIONS)
        f1s = []
        for th in thresholds:
            found = included_users(select_comparators(preds, matches, corpus, CohortConfig(th)))
            f1s.append(recovery(found, ds.comparators).f1)
        print(f"{kind:<10} {fmt(scores['tweet']):<18} {fmt(scores['user_post']):<18} "
              + " ".join(f"{f:<17.3f}" for f in f1s) + f" {secs:.1f}")
    print(f"outputs under {root}")


if __name__ == "__main__":
    main()
