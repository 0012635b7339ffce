"""Recover user-level confusion matrices from rounded P/R/F scores.

Enumerates every matrix over a test set of 137 positive and 33 negative users
and keeps those whose rounded precision, recall and F1 equal the reported
triple. A unique hit means the scores pin the matrix down exactly.

    python scripts/reconcile_user_scores.py
"""
import itertools

from termnb.metrics import ConfusionMatrix, prf

POSITIVES, NEGATIVES = 137, 33
REPORTED = {
    "ZeroR, before threshold": (0.806, 1.000, 0.893),
    "ZeroR, after threshold": (0.941, 0.927, 0.934),
    "Ensemble, before threshold": (0.840, 0.993, 0.910),
    "Ensemble, after threshold": (0.947, 0.920, 0.933),
}


def matrices_for(scores):
    for tp, fp in itertools.product(range(POSITIVES + 1), range(NEGATIVES + 1)):
        cm = ConfusionMatrix(tp, fp, POSITIVES - tp, NEGATIVES - fp)
        if prf(cm).rounded() == scores:
            yield cm


def main():
    for name, scores in REPORTED.items():
        hits = list(matrices_for(scores))
        shown = ", ".join(f"tp={c.tp} fp={c.fp} fn={c.fn} tn={c.tn}" for c in hits) or "none"
        print(f"{name:<28} {'/'.join(f'{s:.3f}' for s in scores)}  ->  {shown}")


if __name__ == "__main__":
    main()
