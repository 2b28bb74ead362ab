from dataclasses import dataclass

import pytest

from nnwatchdog.metrics import ReportError, accuracy_report


@dataclass
class FakeVerdict:
    accepted: bool
    predicted_class: int | None


def test_perfect_pipeline_is_fully_correct():
    verdicts = [FakeVerdict(True, 0), FakeVerdict(True, 1), FakeVerdict(False, None)]
    rep = accuracy_report(verdicts, [0, 1, None], [True, True, False])
    assert rep.end_to_end_accuracy == 1.0
    assert rep.gating_tpr == 1.0
    assert rep.gating_fpr == 0.0
    assert rep.gating_precision == 1.0


def test_accept_everything_on_one_third_mix():
    # perfect classifier on IN, every OOD sample accepted (and thus wrong):
    # end-to-end accuracy equals the IN fraction
    verdicts = [FakeVerdict(True, i % 3) for i in range(9)]
    labels = [0, 1, 2] + [None] * 6
    in_dist = [True] * 3 + [False] * 6
    rep = accuracy_report(verdicts, labels, in_dist)
    assert rep.end_to_end_accuracy == pytest.approx(1 / 3)


def test_hand_counted_six_samples():
    # IN accepted correct; IN accepted wrong; IN rejected;
    # OOD rejected; OOD accepted; OOD rejected
    verdicts = [
        FakeVerdict(True, 2),
        FakeVerdict(True, 0),
        FakeVerdict(False, None),
        FakeVerdict(False, None),
        FakeVerdict(True, 1),
        FakeVerdict(False, None),
    ]
    labels = [2, 2, 1, None, None, None]
    in_dist = [True, True, True, False, False, False]
    rep = accuracy_report(verdicts, labels, in_dist)
    assert rep.correct == 3  # first sample + two rejected OOD
    assert rep.end_to_end_accuracy == pytest.approx(0.5)
    assert rep.gating_tpr == pytest.approx(2 / 3)
    assert rep.gating_fpr == pytest.approx(1 / 3)
    assert rep.gating_precision == pytest.approx(2 / 3)
    assert rep.in_total == 3 and rep.out_total == 3


def test_rates_within_unit_interval():
    verdicts = [FakeVerdict(True, 0), FakeVerdict(False, None)]
    rep = accuracy_report(verdicts, [0, None], [True, False])
    for value in (
        rep.gating_tpr,
        rep.gating_fpr,
        rep.gating_precision,
        rep.end_to_end_accuracy,
    ):
        assert 0.0 <= value <= 1.0


def test_length_mismatch():
    with pytest.raises(ReportError):
        accuracy_report([FakeVerdict(True, 0)], [0, 1], [True, True])
