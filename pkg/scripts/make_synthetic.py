"""Write a synthetic corpus with planted comparator users.

    python scripts/make_synthetic.py data/synth --users 200 --seed 0
"""
import argparse
from collections import Counter

from termnb.synthetic import SynthConfig, generate, write_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--users", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = generate(SynthConfig(n_users=args.users, seed=args.seed))
    paths = write_dataset(ds, args.out)
    print(f"{len(ds.tweets)} tweets, {len(ds.labels)} labelled, {len(ds.golds)} users with gold strata")
    for kind, n in sorted(Counter(ds.kinds.values()).items()):
        print(f"  {kind:<13}{n}")
    for name, path in paths.items():
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
