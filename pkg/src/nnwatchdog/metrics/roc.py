"""ROC curves and AUC from raw scores, with exact tie handling.

Convention: higher score means more positive.  The curve has one point per
distinct score plus a +inf sentinel giving (0, 0); samples sharing a score
enter the positive side together.  AUC is the trapezoidal area, computed in
integer arithmetic over counts so it coincides bit-for-bit with the
pairwise Mann-Whitney statistic (ties counting one half).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

POS = "POS"
NEG = "NEG"


class RocError(Exception):
    pass


@dataclass(frozen=True)
class RocCurve:
    thresholds: tuple[float, ...]  # descending, starts at +inf
    fpr: tuple[float, ...]  # non-decreasing, starts 0 ends 1
    tpr: tuple[float, ...]
    auc: float
    positives: int
    negatives: int

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, s in zip(self.thresholds, self.fpr, self.tpr):
            w.writerow([repr(t), repr(f), repr(s)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def roc(scores, labels) -> RocCurve:
    """ROC curve over scalar scores and POS/NEG labels."""
    score_arr = np.asarray(scores, dtype=np.float64)
    label_arr = np.asarray([1 if l == POS else 0 for l in labels], dtype=np.int64)
    if score_arr.size != label_arr.size:
        raise RocError("scores and labels differ in length")
    if not np.all(np.isfinite(score_arr)):
        raise RocError("scores must be finite")
    p = int(label_arr.sum())
    n = int(label_arr.size - p)
    if p == 0 or n == 0:
        raise RocError("need at least one positive and one negative label")

    order = np.argsort(-score_arr, kind="stable")
    sorted_scores = score_arr[order]
    sorted_labels = label_arr[order]

    thresholds = [float("inf")]
    tp_counts = [0]
    fp_counts = [0]
    tp = fp = 0
    i = 0
    while i < sorted_scores.size:
        j = i
        while j < sorted_scores.size and sorted_scores[j] == sorted_scores[i]:
            j += 1
        tp += int(sorted_labels[i:j].sum())
        fp += (j - i) - int(sorted_labels[i:j].sum())
        thresholds.append(float(sorted_scores[i]))
        tp_counts.append(tp)
        fp_counts.append(fp)
        i = j

    # Trapezoid area in doubled-integer form: exactly the Mann-Whitney sum.
    area2 = 0
    for k in range(1, len(tp_counts)):
        area2 += (fp_counts[k] - fp_counts[k - 1]) * (tp_counts[k] + tp_counts[k - 1])
    auc = area2 / (2 * p * n)

    return RocCurve(
        thresholds=tuple(thresholds),
        fpr=tuple(c / n for c in fp_counts),
        tpr=tuple(c / p for c in tp_counts),
        auc=auc,
        positives=p,
        negatives=n,
    )


def normalized_multiclass_roc(
    class_scores: np.ndarray,
    true_class,
    accepted,
) -> RocCurve:
    """Micro-averaged one-vs-rest ROC pooled over all samples and classes.

    Every (sample, class) pair contributes one (score, label) point: the
    label is POS only when the sample's true class is that class (so
    out-of-distribution samples, true class None, are negatives for every
    class) and rejected samples contribute all-zero scores.
    """
    scores = np.asarray(class_scores, dtype=np.float64)
    if scores.ndim != 2:
        raise RocError("class scores must be (samples, classes)")
    n, k = scores.shape
    if len(true_class) != n or len(accepted) != n:
        raise RocError("labels and scores differ in length")
    pooled_scores = np.where(
        np.asarray(accepted, dtype=bool)[:, None], scores, 0.0
    ).ravel()
    classes = np.arange(k)
    truth = np.array(
        [-1 if c is None else int(c) for c in true_class], dtype=np.int64
    )
    pooled_labels = (truth[:, None] == classes[None, :]).ravel()
    return roc(pooled_scores, [POS if b else NEG for b in pooled_labels])
