"""Synthetic timelines with planted comparator users.

User kinds
----------
comparator      own term tweet and own birthweight tweet 1-45 days apart
different       own term and birthweight tweets from two pregnancies, >= 200 days apart
future_term     hypothetical/future term mention plus an own birthweight tweet
other_weight    own term tweet plus someone else's baby's birthweight
month_old       own term tweet plus a weight reported weeks after birth
reposter        account posting with pre-filter prefixes (many matching tweets)
background      no pattern matches at all

Only ``comparator`` users belong to the ground-truth cohort. Every tweet
that the generator builds from a pattern template is labelled, matching
the annotation of retrieved tweets; background chatter is unlabelled.
"""
from __future__ import annotations

import datetime as dt
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Label, Stratum, Tweet

POS, NEG = Label.POSITIVE, Label.NEGATIVE

_BACKGROUND = (
    "coffee first, then everything else", "watching the game tonight with the family",
    "so tired today, need a nap", "anyone have a good soup recipe?",
    "the dog chewed my favorite shoes again", "finally finished painting the nursery walls",
    "traffic is terrible this morning", "rainy sunday, staying in bed",
    "just booked a weekend trip", "my feet are so swollen lol", "date night!!",
    "new episode tonight, no spoilers please", "craving pickles and ice cream",
    "grocery run done", "work was long today", "happy birthday to my amazing mom",
    "cleaning the whole house because why not", "baby kicks all night long",
    "doctor appointment went great", "cannot sleep at all tonight",
)

_TERM_POS = (
    "I'm {w} weeks pregnant and so ready to meet this baby",
    "i am {w} weeks today and feeling huge",
    "Im {w} wks and this little one is still cozy in there",
    "Yay I'm full term now! come out whenever you want baby",
    "only {d} days until my due date, so excited",
    "{k} weeks until my due date and the bag is packed",
    "my due date is in {d} days!! can't wait",
    "I'm due in {k} weeks and nothing is ready",
    "tomorrow is my due date and no signs yet",
    "I'm due today! any minute now",
)
_TERM_FUTURE = (
    "hoping I'm {w} weeks before the heat wave hits",
    "if I'm full term by the baby shower it will be a miracle",
    "can't wait for the day I'm {w} weeks, still so far away",
    "praying I'm {w} weeks before she decides to come, only 30 weeks now",
)
_NB_POS = (
    "Our baby girl was born this morning at {lb} lbs {oz} oz, so in love",
    "Welcome to the world little one! {lb}lb {oz}oz of perfection",
    "He arrived at 3am weighing {lb} pounds {oz} ounces, mom and baby doing great",
    "our son was born today, {kg}kg and perfect",
    "baby boy born last night, {g} grams of cuteness",
    "she is finally here! born at {lb} lbs and {oz} oz",
)
_NB_OTHER = (
    "my niece was born today at {lb} lbs {oz} oz, congrats sis!",
    "congrats to my cousin, her son arrived at {lb} lb {oz} oz",
    "my best friend's baby was born {kg}kg, so happy for her",
    "so proud of my brother, his daughter was born at {lb} lbs {oz} oz",
)
_NB_MONTH_OLD = (
    "she was born a month ago and now weighs {lb2} lbs {oz} oz, growing so fast",
    "he was born 6 weeks ago and is already {lb2} pounds {oz} ounces at his checkup",
)
_REPOST = (
    "CCB is thrilled to welcome another {lb} lb., {oz} oz. bundle of joy!",
    "#FanQuestion ~ I'm {w} weeks pregnant and my feet are huge, tips?",
    "Fq: I'm {w} weeks and baby is still breech, anyone else?",
    "From our inbox: our little girl was born at {lb} lbs {oz} oz!",
    "Fan Share: I'm full term and so ready!",
)


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 200
    seed: int = 0
    start: dt.date = dt.date(2015, 1, 1)
    # fractions of n_users; the remainder are background users
    mix: tuple[tuple[str, float], ...] = (
        ("comparator", 0.30), ("different", 0.08), ("future_term", 0.07),
        ("other_weight", 0.07), ("month_old", 0.05), ("reposter", 0.03),
    )


@dataclass
class SynthDataset:
    tweets: list[Tweet] = field(default_factory=list)
    labels: dict[str, Label] = field(default_factory=dict)
    golds: dict[str, Stratum] = field(default_factory=dict)
    kinds: dict[str, str] = field(default_factory=dict)

    @property
    def comparators(self) -> set[str]:
        return {u for u, k in self.kinds.items() if k == "comparator"}


class _Writer:
    def __init__(self, rng: random.Random, ds: SynthDataset, start: dt.date):
        self.rng = rng
        self.ds = ds
        self.start = start
        self.count = 0

    def fill(self, template: str) -> str:
        r = self.rng
        lb = r.randint(6, 9)
        return template.format(
            w=r.randint(37, 41), d=r.randint(1, 21), k=r.randint(1, 3), lb=lb,
            lb2=r.randint(8, 10), oz=r.randint(0, 15),
            kg=f"{r.randint(26, 44) / 10:.1f}", g=r.randint(2600, 4400),
        )

    def tweet(self, user: str, day: int, text: str, label: Label | None = None) -> None:
        self.count += 1
        tid = f"t{self.count:06d}"
        posted = self.start + dt.timedelta(days=day)
        self.ds.tweets.append(Tweet(tid, user, posted, text))
        if label is not None:
            self.ds.labels[tid] = label

    def background(self, user: str, lo: int, hi: int, n: int) -> None:
        for _ in range(n):
            self.tweet(user, self.rng.randint(lo, hi), self.rng.choice(_BACKGROUND))


def generate(config: SynthConfig = SynthConfig()) -> SynthDataset:
    rng = random.Random(config.seed)
    ds = SynthDataset()
    w = _Writer(rng, ds, config.start)
    kinds = []
    for kind, frac in config.mix:
        kinds += [kind] * round(frac * config.n_users)
    kinds += ["background"] * (config.n_users - len(kinds))
    rng.shuffle(kinds)
    pick = rng.choice
    for i, kind in enumerate(kinds[: config.n_users]):
        user = f"u{i:04d}"
        ds.kinds[user] = kind
        t0 = rng.randint(0, 500)
        w.background(user, max(0, t0 - 200), t0 + 200, rng.randint(3, 10))
        stratum = Stratum.NO_POSITIVE_PAIR
        if kind == "comparator":
            w.tweet(user, t0, w.fill(pick(_TERM_POS)), POS)
            w.tweet(user, t0 + rng.randint(1, 45), w.fill(pick(_NB_POS)), POS)
            if rng.random() < 0.3:
                w.tweet(user, t0 + rng.randint(-100, 100), w.fill(pick(_NB_OTHER)), NEG)
            stratum = Stratum.SAME_PREGNANCY
        elif kind == "different":
            gap = rng.randint(200, 600)
            w.tweet(user, t0 + gap, w.fill(pick(_TERM_POS)), POS)
            w.tweet(user, t0, w.fill(pick(_NB_POS)), POS)
            stratum = Stratum.DIFFERENT_PREGNANCY
        elif kind == "future_term":
            w.tweet(user, t0, w.fill(pick(_TERM_FUTURE)), NEG)
            w.tweet(user, t0 + rng.randint(1, 45), w.fill(pick(_NB_POS)), POS)
        elif kind == "other_weight":
            w.tweet(user, t0, w.fill(pick(_TERM_POS)), POS)
            w.tweet(user, t0 + rng.randint(1, 45), w.fill(pick(_NB_OTHER)), NEG)
        elif kind == "month_old":
            w.tweet(user, t0, w.fill(pick(_TERM_POS)), POS)
            w.tweet(user, t0 + rng.randint(30, 48), w.fill(pick(_NB_MONTH_OLD)), NEG)
        elif kind == "reposter":
            for j in range(rng.randint(15, 30)):
                w.tweet(user, t0 + j * rng.randint(1, 5), w.fill(_REPOST[j % len(_REPOST)]))
        if kind not in ("background", "reposter"):
            ds.golds[user] = stratum
    ds.tweets.sort(key=lambda t: t.tweet_id)
    return ds


def write_dataset(ds: SynthDataset, out_dir) -> dict[str, Path]:
    """Write tweets.jsonl, tweet_labels.tsv, user_gold.tsv and truth.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in
             ("tweets.jsonl", "tweet_labels.tsv", "user_gold.tsv", "truth.json")}
    with open(paths["tweets.jsonl"], "w", encoding="utf-8") as fh:
        for i, t in enumerate(ds.tweets):
            rec = t.to_record()
            # exercise both date and datetime forms of created_at
            if i % 2:
                rec["created_at"] = f"{t.posted_at.isoformat()}T{(i * 7) % 24:02d}:15:00Z"
            fh.write(json.dumps(rec) + "\n")
    with open(paths["tweet_labels.tsv"], "w", encoding="utf-8") as fh:
        for tid, lab in ds.labels.items():
            fh.write(f"{tid}\t{lab.value}\n")
    with open(paths["user_gold.tsv"], "w", encoding="utf-8") as fh:
        for user, stratum in ds.golds.items():
            fh.write(f"{user}\t{stratum.value}\n")
    with open(paths["truth.json"], "w", encoding="utf-8") as fh:
        json.dump({"comparators": sorted(ds.comparators), "kinds": ds.kinds}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    return paths
