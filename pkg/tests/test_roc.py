import numpy as np
import pytest

from nnwatchdog.metrics import NEG, POS, RocError, normalized_multiclass_roc, roc
from nnwatchdog.rng import Rng


def brute_force_curve(scores, labels):
    """Independent threshold enumeration: all distinct scores plus +inf."""
    scores = np.asarray(scores, dtype=np.float64)
    flags = np.array([l == POS for l in labels])
    p, n = int(flags.sum()), int((~flags).sum())
    points = []
    for t in [np.inf] + sorted(set(scores.tolist()), reverse=True):
        predicted = scores >= t
        points.append(
            (t, int((predicted & ~flags).sum()) / n, int((predicted & flags).sum()) / p)
        )
    return points


def mann_whitney(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    pos = scores[[l == POS for l in labels]]
    neg = scores[[l == NEG for l in labels]]
    wins = sum(float(a > b) for a in pos for b in neg)
    ties = sum(float(a == b) for a in pos for b in neg)
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def random_instance(rng, n, quantize):
    scores = rng.uniform(0, 1, n)
    if quantize:
        scores = np.round(scores * 8) / 8  # force ties
    labels = [POS if rng.random() < 0.5 else NEG for _ in range(n)]
    if all(l == POS for l in labels):
        labels[0] = NEG
    if all(l == NEG for l in labels):
        labels[0] = POS
    return scores, labels


def test_perfect_separation():
    assert roc([0.9, 0.8, 0.4, 0.3], [POS, POS, NEG, NEG]).auc == 1.0


def test_anti_separation():
    assert roc([0.9, 0.8, 0.4, 0.3], [NEG, NEG, POS, POS]).auc == 0.0


def test_one_misordered_pair():
    # one of four POS-NEG pairs is misordered
    assert roc([0.9, 0.4, 0.8, 0.3], [POS, POS, NEG, NEG]).auc == 0.75


def test_matches_brute_force_enumeration_exactly():
    rng = Rng(10)
    for trial in range(100):
        scores, labels = random_instance(rng, 5 + int(rng.below(40)), trial % 2 == 0)
        curve = roc(scores, labels)
        expected = brute_force_curve(scores, labels)
        got = list(zip(curve.thresholds, curve.fpr, curve.tpr))
        assert got == expected


def test_auc_equals_mann_whitney_bitwise():
    rng = Rng(11)
    for trial in range(100):
        scores, labels = random_instance(rng, 5 + int(rng.below(40)), True)
        assert roc(scores, labels).auc == mann_whitney(scores, labels)


def test_curve_invariants():
    rng = Rng(12)
    for trial in range(50):
        scores, labels = random_instance(rng, 4 + int(rng.below(30)), trial % 2 == 0)
        curve = roc(scores, labels)
        fpr, tpr = np.array(curve.fpr), np.array(curve.tpr)
        assert fpr[0] == 0.0 and tpr[0] == 0.0
        assert fpr[-1] == 1.0 and tpr[-1] == 1.0
        assert (np.diff(fpr) >= 0).all() and (np.diff(tpr) >= 0).all()
        assert curve.thresholds[0] == np.inf
        assert 0.0 <= curve.auc <= 1.0


def test_single_class_rejected():
    with pytest.raises(RocError):
        roc([0.1, 0.2], [POS, POS])
    with pytest.raises(RocError):
        roc([0.1, np.nan], [POS, NEG])


def test_csv_round_trip(tmp_path):
    curve = roc([0.9, 0.4, 0.8, 0.3], [POS, POS, NEG, NEG])
    path = tmp_path / "roc.csv"
    text = curve.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "threshold,fpr,tpr"
    assert lines[1].startswith("inf,")
    assert len(lines) == len(curve.thresholds) + 1
    assert text == path.read_text()


# -- pooled multiclass curve -------------------------------------------------


def test_perfect_classifier_all_accepted():
    probs = np.eye(3)[[0, 1, 2, 0]]
    curve = normalized_multiclass_roc(probs, [0, 1, 2, 0], [True] * 4)
    assert curve.auc == 1.0


def test_everything_rejected_gives_chance_diagonal():
    probs = Rng(3).uniform(0, 1, (5, 4))
    curve = normalized_multiclass_roc(probs, [0, 1, None, 2, 3], [False] * 5)
    assert curve.auc == 0.5
    assert len(curve.thresholds) == 2  # +inf sentinel and the all-zero tie


def test_pooled_labels_and_rejection_semantics():
    # 2 IN accepted, 1 OOD accepted, 1 IN rejected; K=2
    probs = np.array([[0.9, 0.1], [0.2, 0.8], [0.7, 0.3], [0.6, 0.4]])
    accepted = [True, True, True, False]
    true_class = [0, 1, None, 0]
    curve = normalized_multiclass_roc(probs, true_class, accepted)
    # pooled pairs: (0.9,P)(0.1,N)(0.2,N)(0.8,P)(0.7,N)(0.3,N)(0,P)(0,N)
    oracle = roc(
        [0.9, 0.1, 0.2, 0.8, 0.7, 0.3, 0.0, 0.0],
        [POS, NEG, NEG, POS, NEG, NEG, POS, NEG],
    )
    assert curve == oracle


def test_collapse_on_one_third_mix():
    # 10 IN perfectly classified, 20 OOD confidently classified; K=3
    rng = Rng(4)
    rows = []
    truth = []
    for i in range(10):
        rows.append(np.eye(3)[i % 3])
        truth.append(i % 3)
    for i in range(20):
        rows.append(np.eye(3)[int(rng.below(3))])
        truth.append(None)
    probs = np.stack(rows)
    curve = normalized_multiclass_roc(probs, truth, [True] * 30)
    # at the top threshold (score 1.0): predicted positives = 10 true + 20 false
    k = curve.thresholds.index(1.0)
    tp = curve.tpr[k] * curve.positives
    fp = curve.fpr[k] * curve.negatives
    assert tp / (tp + fp) == pytest.approx(1 / 3)


def test_score_matrix_validation():
    with pytest.raises(RocError):
        normalized_multiclass_roc(np.zeros(4), [0], [True])
    with pytest.raises(RocError):
        normalized_multiclass_roc(np.zeros((2, 3)), [0], [True, False])
