"""Tweet-level learning curve on a synthetic corpus.

Splits users 80/20 by stratum, trains on nested fractions of the training
users and writes ``size,precision,recall,f1`` rows.

    python scripts/learning_curve.py out/learning_curve.csv --classifier ensemble
"""
import argparse
import tempfile
from pathlib import Path

from termnb import pipeline as pl
from termnb.classifier import ClassifierConfig
from termnb.models import CLASSIFIERS
from termnb.synthetic import SynthConfig, generate, write_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--users", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--classifier", choices=CLASSIFIERS, default="ensemble")
    args = ap.parse_args()

    work = Path(tempfile.mkdtemp(prefix="termnb-curve-"))
    paths = write_dataset(generate(SynthConfig(n_users=args.users, seed=args.seed)), work)
    res = pl.Resources.load()
    pl.stage_retrieve(paths["tweets.jsonl"], work / pl.MATCHES, work / pl.MATCH_REPORT, res)
    pl.stage_prefilter(work / pl.MATCHES, work / pl.FILTERED, work / pl.PREFILTER_REPORT, res)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    points = pl.stage_learning_curve(work / pl.FILTERED, paths["tweet_labels.tsv"], paths["user_gold.tsv"],
                                     args.out, res, ClassifierConfig(kind=args.classifier), seed=args.seed)
    for p in points:
        print(f"{p.fraction:.1f}  users={p.n_users:<4} tweets={p.n_tweets:<4} "
              f"P={p.metrics.precision:.3f} R={p.metrics.recall:.3f} F={p.metrics.f1:.3f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
