"""
Confusion matrices, macro metrics and cross-client aggregation
"""
import math

import numpy as np
import pytest

from services.metrics_service import ConfusionMatrix, MetricsService
from utils.errors import DimensionError, InvalidArgumentError, LabelError


def brute_force(counts):
    C = len(counts)
    precision, recall, f1 = [], [], []
    for c in range(C):
        tp = counts[c][c]
        fp = sum(counts[r][c] for r in range(C)) - tp
        fn = sum(counts[c]) - tp
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(2 * p * r / (p + r) if p + r else 0.0)
    return sum(precision) / C, sum(recall) / C, sum(f1) / C


def test_confusion_counts():
    cm = MetricsService.confusion([0, 1, 1, 2], [0, 1, 0, 2], 3)
    assert cm.counts.tolist() == [[1, 0, 0], [1, 1, 0], [0, 0, 1]]
    assert cm.total == 4


def test_confusion_errors():
    with pytest.raises(DimensionError):
        MetricsService.confusion([0, 1], [0], 2)
    with pytest.raises(LabelError):
        MetricsService.confusion([0, 3], [0, 1], 2)


def test_report_perfect_predictions():
    rep = MetricsService.report(ConfusionMatrix(np.array([[5, 0], [0, 5]])))
    assert (rep.accuracy, rep.macro_precision, rep.macro_recall, rep.macro_f1) == (1.0, 1.0, 1.0, 1.0)


def test_report_hand_example():
    rep = MetricsService.report(ConfusionMatrix(np.array([[3, 1], [2, 4]])))
    f1_0 = 2 * 0.6 * 0.75 / (0.6 + 0.75)
    f1_1 = 2 * 0.8 * (4 / 6) / (0.8 + 4 / 6)
    assert rep.macro_f1 == pytest.approx((f1_0 + f1_1) / 2, abs=1e-12)
    assert rep.macro_f1 == pytest.approx(0.696970, abs=1e-6)


def test_majority_predictor_on_imbalanced_split():
    cm = MetricsService.confusion([0] * 90 + [1] * 10, [0] * 100, 2)
    rep = MetricsService.report(cm)
    assert rep.accuracy == pytest.approx(0.9)
    assert rep.macro_recall == pytest.approx(0.5)


def test_absent_class_scores_zero_unless_present_mode():
    cm = ConfusionMatrix(np.array([[4, 0, 0], [0, 4, 0], [0, 0, 0]]))
    assert MetricsService.report(cm).macro_f1 == pytest.approx(2 / 3)
    assert MetricsService.report(cm, 'present').macro_f1 == pytest.approx(1.0)
    with pytest.raises(InvalidArgumentError):
        MetricsService.report(cm, 'weighted')


def test_report_matches_brute_force_on_random_matrices(rng):
    for _ in range(1000):
        C = int(rng.integers(2, 6))
        counts = rng.integers(0, 6, size=(C, C))
        counts[0, 0] += 1
        rep = MetricsService.report(ConfusionMatrix(counts))
        p, r, f = brute_force(counts.tolist())
        assert rep.macro_precision == pytest.approx(p, abs=1e-12)
        assert rep.macro_recall == pytest.approx(r, abs=1e-12)
        assert rep.macro_f1 == pytest.approx(f, abs=1e-12)


def test_macro_metrics_invariant_under_relabeling(rng):
    counts = rng.integers(0, 10, size=(4, 4))
    perm = rng.permutation(4)
    a = MetricsService.report(ConfusionMatrix(counts))
    b = MetricsService.report(ConfusionMatrix(counts[np.ix_(perm, perm)]))
    assert a.macro_f1 == pytest.approx(b.macro_f1, abs=1e-12)


def test_confusion_of_empty_batch_keeps_full_shape():
    cm = MetricsService.confusion([], [], 4)
    assert cm.counts.shape == (4, 4) and cm.total == 0


def test_report_counts_every_sample_of_a_sparse_matrix():
    cm = ConfusionMatrix(np.array([[0, 0, 0], [0, 0, 7], [2, 0, 1]]))
    report = MetricsService.report(cm)
    assert report.support.tolist() == [0, 7, 3]
    assert report.accuracy == pytest.approx(0.1)
    assert report.precision.tolist() == pytest.approx([0.0, 0.0, 0.125])


def test_empty_matrix_rejected():
    with pytest.raises(InvalidArgumentError):
        MetricsService.report(ConfusionMatrix(np.zeros((2, 2), dtype=int)))


def test_mean_std():
    assert MetricsService.mean_std([1, 1, 1]) == (1.0, 0.0)
    mean, std = MetricsService.mean_std([0, 2])
    assert mean == 1.0 and std == pytest.approx(math.sqrt(2))
    assert MetricsService.mean_std([0.7]) == (0.7, 0.0)
    with pytest.raises(InvalidArgumentError):
        MetricsService.mean_std([])
