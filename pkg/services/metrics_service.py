"""
Metrics Service for the Sentinel simulator
Confusion matrices, macro precision / recall / F1 and cross-client mean and std
"""
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from utils.errors import DimensionError, InvalidArgumentError, LabelError


@dataclass
class ConfusionMatrix:
    """Rows are true classes, columns are predicted classes"""
    counts: np.ndarray

    @property
    def num_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())


@dataclass
class ClassificationReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray

    def summary(self):
        return {
            'accuracy': self.accuracy,
            'macro_precision': self.macro_precision,
            'macro_recall': self.macro_recall,
            'macro_f1': self.macro_f1,
        }


class MetricsService:
    """Evaluation metrics"""

    METRIC_NAMES = ('accuracy', 'macro_precision', 'macro_recall', 'macro_f1')

    @staticmethod
    def confusion(y_true, y_pred, num_classes):
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape:
            raise DimensionError(f"{len(y_true)} true labels but {len(y_pred)} predictions", axis=0)
        for name, labels in (('true', y_true), ('predicted', y_pred)):
            if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
                raise LabelError(f"{name} labels must lie in [0, {num_classes})")
        if y_true.size == 0:
            return ConfusionMatrix(np.zeros((num_classes, num_classes), dtype=np.int64))
        counts = confusion_matrix(y_true, y_pred, labels=np.arange(num_classes))
        return ConfusionMatrix(counts.astype(np.int64))

    @staticmethod
    def _expand(counts):
        """Label vectors that reproduce a count matrix, one pair per counted sample"""
        true_classes, pred_classes = np.nonzero(counts)
        repeats = counts[true_classes, pred_classes]
        return np.repeat(true_classes, repeats), np.repeat(pred_classes, repeats)

    @staticmethod
    def report(cm, macro_mode='all'):
        """
        Per-class P/R/F1 with 0 for zero denominators. 'all' averages over every class,
        'present' only over classes with non-zero support.
        """
        counts = np.asarray(cm.counts, dtype=np.int64)
        total = counts.sum()
        if total < 1:
            raise InvalidArgumentError("confusion matrix is empty")
        labels = np.arange(cm.num_classes)
        y_true, y_pred = MetricsService._expand(counts)
        precision, recall, f1, support = precision_recall_fscore_support(
            y_true, y_pred, labels=labels, average=None, zero_division=0
        )

        if macro_mode == 'all':
            mask = np.ones_like(support, dtype=bool)
        elif macro_mode == 'present':
            mask = support > 0
        else:
            raise InvalidArgumentError(f"unknown macro mode '{macro_mode}'")

        return ClassificationReport(
            accuracy=float(np.trace(counts) / total),
            macro_precision=float(precision[mask].mean()),
            macro_recall=float(recall[mask].mean()),
            macro_f1=float(f1[mask].mean()),
            precision=precision,
            recall=recall,
            f1=f1,
            support=support.astype(np.int64),
        )

    @staticmethod
    def mean_std(values):
        """Arithmetic mean and sample (N - 1) standard deviation; std is 0 for one value"""
        values = np.asarray(list(values), dtype=np.float64)
        if values.size == 0:
            raise InvalidArgumentError("mean_std needs at least one value")
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
        return float(values.mean()), std
