"""The guarded classification pipeline: similarity gate, binary gate, core.

Gates run strictly in order and short-circuit: an input rejected by the
similarity gate never reaches the binary classifier or the core network
(the evaluation counters make this observable).  Disabling a tier skips it
but the verdict records which tiers actually ran.  Evaluation produces
three views of the same mixed dataset: the guarded pipeline as configured,
the unguarded core alone, and the core on the in-distribution subset only.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data.dataset import Dataset
from .metrics.reports import AccuracyReport, accuracy_report
from .metrics.roc import RocCurve, normalized_multiclass_roc
from .metrics.ssim import SsimParams
from .nn.network import Model
from .tiers.autoencoder import tier1_scores
from .tiers.classifiers import binary_scores, classify_batch

REJECTED_TIER1 = "REJECTED_TIER1"
REJECTED_TIER2 = "REJECTED_TIER2"
CLASSIFIED = "CLASSIFIED"


class PipelineError(Exception):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    core: Model
    autoencoder: Model | None = None
    binary: Model | None = None
    tau: float = 0.85
    tier2_threshold: float = 0.5
    tier1_enabled: bool = True
    tier2_enabled: bool = True
    ssim_params: SsimParams = field(default_factory=SsimParams)

    def __post_init__(self):
        if self.tier1_enabled and self.autoencoder is None:
            raise PipelineError("tier 1 enabled but no autoencoder configured")
        if self.tier2_enabled and self.binary is None:
            raise PipelineError("tier 2 enabled but no binary classifier configured")

    def without_tiers(self) -> "PipelineConfig":
        return PipelineConfig(
            core=self.core,
            autoencoder=self.autoencoder,
            binary=self.binary,
            tau=self.tau,
            tier2_threshold=self.tier2_threshold,
            tier1_enabled=False,
            tier2_enabled=False,
            ssim_params=self.ssim_params,
        )


@dataclass(frozen=True)
class Verdict:
    outcome: str
    class_probs: np.ndarray | None = None
    tier1_score: float | None = None
    tier2_p_in: float | None = None
    tiers_run: tuple[str, ...] = ()

    @property
    def accepted(self) -> bool:
        return self.outcome == CLASSIFIED

    @property
    def predicted_class(self) -> int | None:
        if self.class_probs is None:
            return None
        return int(np.argmax(self.class_probs))


@dataclass(frozen=True)
class GuardCounters:
    """How many inputs each stage actually evaluated."""

    total: int
    tier1_evaluations: int
    tier2_evaluations: int
    core_evaluations: int


def guard_batch(
    pipeline: PipelineConfig, images: np.ndarray
) -> tuple[list[Verdict], GuardCounters]:
    """Run the pipeline over (n, h, w, c); stages run only on survivors."""
    n = images.shape[0]
    alive = np.ones(n, dtype=bool)
    t1 = np.full(n, np.nan)
    t2 = np.full(n, np.nan)
    tiers_run: list[list[str]] = [[] for _ in range(n)]

    tier1_evals = tier2_evals = 0
    if pipeline.tier1_enabled:
        tier1_evals = n
        scores = tier1_scores(pipeline.autoencoder, images, pipeline.ssim_params)
        t1[:] = scores
        for i in range(n):
            tiers_run[i].append("tier1")
        alive = scores >= pipeline.tau

    if pipeline.tier2_enabled and alive.any():
        idx = np.flatnonzero(alive)
        tier2_evals = idx.size
        p_in = binary_scores(pipeline.binary, images[idx])
        t2[idx] = p_in
        for i in idx:
            tiers_run[i].append("tier2")
        alive = alive.copy()
        alive[idx] = p_in >= pipeline.tier2_threshold

    survivors = np.flatnonzero(alive)
    probs = (
        classify_batch(pipeline.core, images[survivors])
        if survivors.size
        else np.zeros((0, 1))
    )

    verdicts: list[Verdict] = []
    pos = {int(j): k for k, j in enumerate(survivors)}
    for i in range(n):
        score = None if np.isnan(t1[i]) else float(t1[i])
        p_in = None if np.isnan(t2[i]) else float(t2[i])
        if pipeline.tier1_enabled and score is not None and score < pipeline.tau:
            verdicts.append(
                Verdict(REJECTED_TIER1, None, score, None, tuple(tiers_run[i]))
            )
        elif (
            pipeline.tier2_enabled
            and p_in is not None
            and p_in < pipeline.tier2_threshold
        ):
            verdicts.append(
                Verdict(REJECTED_TIER2, None, score, p_in, tuple(tiers_run[i]))
            )
        else:
            tiers_run[i].append("core")
            verdicts.append(
                Verdict(
                    CLASSIFIED,
                    probs[pos[i]],
                    score,
                    p_in,
                    tuple(tiers_run[i]),
                )
            )
    counters = GuardCounters(n, tier1_evals, tier2_evals, int(survivors.size))
    return verdicts, counters


def guard(pipeline: PipelineConfig, image: np.ndarray) -> Verdict:
    """Verdict for a single (h, w, c) image."""
    return guard_batch(pipeline, image[None])[0][0]


# -- evaluation -------------------------------------------------------------


def _curve_payload(curve: RocCurve) -> dict:
    return {
        "auc": curve.auc,
        "thresholds": [None if np.isinf(t) else t for t in curve.thresholds],
        "fpr": list(curve.fpr),
        "tpr": list(curve.tpr),
    }


@dataclass(frozen=True)
class ModeReport:
    label: str
    dataset_hash: str
    curve: RocCurve
    accuracy: AccuracyReport

    @property
    def auc(self) -> float:
        return self.curve.auc

    @property
    def end_to_end_accuracy(self) -> float:
        return self.accuracy.end_to_end_accuracy

    def to_payload(self) -> dict:
        return {
            "label": self.label,
            "dataset_hash": self.dataset_hash,
            "curve": _curve_payload(self.curve),
            "accuracy": self.accuracy.to_dict(),
        }


@dataclass(frozen=True)
class EvaluationReport:
    dataset_hash: str
    total: int
    rejected_tier1_in: int
    rejected_tier1_out: int
    rejected_tier2_in: int
    rejected_tier2_out: int
    classified_in: int
    classified_out: int
    counters: GuardCounters
    guarded: ModeReport
    unguarded: ModeReport
    baseline: ModeReport

    def __post_init__(self):
        parts = (
            self.rejected_tier1_in
            + self.rejected_tier1_out
            + self.rejected_tier2_in
            + self.rejected_tier2_out
            + self.classified_in
            + self.classified_out
        )
        if parts != self.total:
            raise PipelineError(f"verdict counts {parts} != dataset size {self.total}")

    def to_json(self, path: str | Path | None = None) -> str:
        payload = {
            "dataset_hash": self.dataset_hash,
            "total": self.total,
            "tier_counts": {
                "rejected_tier1": {
                    "in": self.rejected_tier1_in,
                    "out": self.rejected_tier1_out,
                },
                "rejected_tier2": {
                    "in": self.rejected_tier2_in,
                    "out": self.rejected_tier2_out,
                },
                "classified": {
                    "in": self.classified_in,
                    "out": self.classified_out,
                },
            },
            "counters": {
                "tier1_evaluations": self.counters.tier1_evaluations,
                "tier2_evaluations": self.counters.tier2_evaluations,
                "core_evaluations": self.counters.core_evaluations,
            },
            "guarded": self.guarded.to_payload(),
            "unguarded": self.unguarded.to_payload(),
            "baseline": self.baseline.to_payload(),
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _mode_report(
    label: str,
    dataset_hash: str,
    verdicts: list[Verdict],
    dataset: Dataset,
    classes: int,
) -> ModeReport:
    probs = np.zeros((len(verdicts), classes))
    accepted = []
    for i, v in enumerate(verdicts):
        accepted.append(v.accepted)
        if v.accepted and v.class_probs is not None:
            probs[i] = v.class_probs
    true_class = [
        int(c) if c >= 0 else None for c in dataset.class_labels
    ]
    curve = normalized_multiclass_roc(probs, true_class, accepted)
    acc = accuracy_report(verdicts, dataset.class_labels, dataset.in_distribution)
    return ModeReport(label, dataset_hash, curve, acc)


def evaluate(pipeline: PipelineConfig, mixed: Dataset) -> EvaluationReport:
    """Guarded, unguarded, and in-distribution-only views of one dataset."""
    if len(mixed) == 0:
        raise PipelineError("cannot evaluate an empty dataset")
    classes = pipeline.core.spec.output_size
    dataset_hash = mixed.content_hash()

    verdicts, counters = guard_batch(pipeline, mixed.images)
    guarded = _mode_report("guarded", dataset_hash, verdicts, mixed, classes)

    bare, _ = guard_batch(pipeline.without_tiers(), mixed.images)
    unguarded = _mode_report("unguarded", dataset_hash, bare, mixed, classes)

    in_subset = mixed.subset(np.flatnonzero(mixed.in_distribution), name="in-only")
    base_verdicts, _ = guard_batch(pipeline.without_tiers(), in_subset.images)
    baseline = _mode_report("baseline", dataset_hash, base_verdicts, in_subset, classes)

    is_in = mixed.in_distribution
    outcome = np.array([v.outcome for v in verdicts])
    return EvaluationReport(
        dataset_hash=dataset_hash,
        total=len(mixed),
        rejected_tier1_in=int(((outcome == REJECTED_TIER1) & is_in).sum()),
        rejected_tier1_out=int(((outcome == REJECTED_TIER1) & ~is_in).sum()),
        rejected_tier2_in=int(((outcome == REJECTED_TIER2) & is_in).sum()),
        rejected_tier2_out=int(((outcome == REJECTED_TIER2) & ~is_in).sum()),
        classified_in=int(((outcome == CLASSIFIED) & is_in).sum()),
        classified_out=int(((outcome == CLASSIFIED) & ~is_in).sum()),
        counters=counters,
        guarded=guarded,
        unguarded=unguarded,
        baseline=baseline,
    )


def compare_report(
    unguarded: ModeReport,
    guarded: ModeReport,
    baseline: ModeReport,
    csv_path: str | Path | None = None,
    json_path: str | Path | None = None,
) -> tuple[str, str]:
    """Combined three-curve CSV and AUC-delta summary JSON.

    All three reports must stem from the same evaluation dataset (the
    baseline is its in-distribution subset and carries the parent hash).
    """
    hashes = {unguarded.dataset_hash, guarded.dataset_hash, baseline.dataset_hash}
    if len(hashes) != 1:
        raise PipelineError(f"reports built on different datasets: {sorted(hashes)}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve", "threshold", "fpr", "tpr"])
    for report in (unguarded, guarded, baseline):
        for t, f, s in zip(report.curve.thresholds, report.curve.fpr, report.curve.tpr):
            w.writerow([report.label, repr(t), repr(f), repr(s)])
    csv_text = buf.getvalue()

    summary = {
        "auc": {
            "unguarded": unguarded.auc,
            "guarded": guarded.auc,
            "baseline": baseline.auc,
        },
        "auc_delta": {
            "guarded_minus_unguarded": guarded.auc - unguarded.auc,
            "baseline_minus_guarded": baseline.auc - guarded.auc,
        },
        "end_to_end_accuracy": {
            "unguarded": unguarded.end_to_end_accuracy,
            "guarded": guarded.end_to_end_accuracy,
            "baseline": baseline.end_to_end_accuracy,
        },
    }
    json_text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if csv_path is not None:
        Path(csv_path).write_text(csv_text, encoding="utf-8")
    if json_path is not None:
        Path(json_path).write_text(json_text, encoding="utf-8")
    return csv_text, json_text
