"""Gating and end-to-end accuracy summaries over per-input outcomes."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


class ReportError(Exception):
    pass


@dataclass(frozen=True)
class AccuracyReport:
    """Gate quality (in-distribution = positive) and end-to-end accuracy.

    A sample counts as correct end to end when it is in-distribution,
    accepted, and predicted as its true class, or out-of-distribution and
    rejected.
    """

    gating_tpr: float
    gating_fpr: float
    gating_precision: float
    end_to_end_accuracy: float
    in_total: int
    out_total: int
    accepted_in: int
    accepted_out: int
    correct: int

    def to_dict(self) -> dict:
        return asdict(self)


def accuracy_report(verdicts, class_labels, in_distribution) -> AccuracyReport:
    """Summarize verdicts against dual labels.

    `verdicts` is any sequence of objects with `accepted` (bool) and
    `predicted_class` (int or None) attributes; labels follow the dataset
    convention (class -1 or None for out-of-distribution samples).
    """
    n = len(verdicts)
    if len(class_labels) != n or len(in_distribution) != n:
        raise ReportError("verdicts and labels differ in length")
    is_in = np.asarray(in_distribution, dtype=bool)
    labels = np.asarray(
        [-1 if c is None else int(c) for c in class_labels], dtype=np.int64
    )

    accepted_in = accepted_out = correct = 0
    for i, verdict in enumerate(verdicts):
        accepted = bool(verdict.accepted)
        if accepted:
            if is_in[i]:
                accepted_in += 1
            else:
                accepted_out += 1
        if is_in[i]:
            if accepted and verdict.predicted_class == labels[i]:
                correct += 1
        elif not accepted:
            correct += 1

    in_total = int(is_in.sum())
    out_total = n - in_total
    accepted_total = accepted_in + accepted_out
    return AccuracyReport(
        gating_tpr=accepted_in / in_total if in_total else 0.0,
        gating_fpr=accepted_out / out_total if out_total else 0.0,
        gating_precision=accepted_in / accepted_total if accepted_total else 0.0,
        end_to_end_accuracy=correct / n if n else 0.0,
        in_total=in_total,
        out_total=out_total,
        accepted_in=accepted_in,
        accepted_out=accepted_out,
        correct=correct,
    )
