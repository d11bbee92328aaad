# SPDX-License-Identifier: MIT
#
"""Confusion-matrix accumulation, mean IoU and pixel accuracy.

Metrics come from one global matrix over a whole test set. Classes absent from both ground truth and
prediction are left out of the mean IoU.
"""
import json
from dataclasses import dataclass, asdict

import numpy as np

IGNORE_LABEL = 255


class MetricsError(ValueError):
    """Raised for out-of-range predictions and for metrics requested from an empty matrix"""


def _as_array(labels) -> np.ndarray:
    if hasattr(labels, 'detach'):
        labels = labels.detach().cpu().numpy()
    return np.asarray(labels).astype(np.int64)


class ConfusionMatrix:
    """K x K counts; rows are ground truth, columns are predictions"""

    def __init__(self, num_classes: int, counts=None):
        if num_classes < 1:
            raise MetricsError(f'num_classes must be positive, got {num_classes}')
        self.num_classes = num_classes
        self.counts = np.zeros((num_classes, num_classes), dtype=np.int64) if counts is None else np.array(counts, dtype=np.int64)
        if self.counts.shape != (num_classes, num_classes) or (self.counts < 0).any():
            raise MetricsError(f'counts must be a non-negative {num_classes}x{num_classes} matrix')

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accumulate(self, pred, gt, ignore_index: int = IGNORE_LABEL):
        """Add one batch in place and return self"""
        pred, gt = _as_array(pred), _as_array(gt)
        if pred.shape != gt.shape:
            raise MetricsError(f'prediction {pred.shape} and ground truth {gt.shape} differ in extent')
        k = self.num_classes
        if pred.size and (pred.min() < 0 or pred.max() >= k):
            raise MetricsError(f'predictions must lie in [0, {k}), got values in [{pred.min()}, {pred.max()}]')
        scored = gt != ignore_index
        if ((gt[scored] < 0) | (gt[scored] >= k)).any():
            raise MetricsError(f'ground truth labels must lie in [0, {k}) or equal {ignore_index}')
        self.counts += np.bincount(k * gt[scored] + pred[scored], minlength=k ** 2).reshape(k, k)
        return self

    def merge(self, other: 'ConfusionMatrix') -> 'ConfusionMatrix':
        if other.num_classes != self.num_classes:
            raise MetricsError(f'cannot merge matrices over {self.num_classes} and {other.num_classes} classes')
        return ConfusionMatrix(self.num_classes, self.counts + other.counts)

    def __add__(self, other):
        return self.merge(other)

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def _require_counts(self):
        if self.total == 0:
            raise MetricsError('the confusion matrix is empty')

    def pixel_accuracy(self) -> float:
        self._require_counts()
        return float(np.trace(self.counts)) / self.total

    def per_class_iou(self) -> np.ndarray:
        """IoU per class, NaN for classes absent from both ground truth and prediction"""
        intersection = np.diag(self.counts).astype(np.float64)
        union = self.counts.sum(axis=0) + self.counts.sum(axis=1) - np.diag(self.counts)
        iou = np.full(self.num_classes, np.nan)
        present = union > 0
        iou[present] = intersection[present] / union[present]
        return iou

    def mean_iou(self) -> float:
        self._require_counts()
        iou = self.per_class_iou()
        if np.isnan(iou).all():
            raise MetricsError('every class is absent')
        return float(np.nanmean(iou))

    def class_accuracy(self) -> np.ndarray:
        """Recall per ground-truth class, NaN for classes without ground-truth pixels"""
        rows = self.counts.sum(axis=1)
        accuracy = np.full(self.num_classes, np.nan)
        accuracy[rows > 0] = np.diag(self.counts)[rows > 0] / rows[rows > 0]
        return accuracy


def accumulate(cm: ConfusionMatrix, pred, gt) -> ConfusionMatrix:
    """Functional form: a new matrix with one more batch"""
    return ConfusionMatrix(cm.num_classes, cm.counts).accumulate(pred, gt)


def pixel_accuracy(cm: ConfusionMatrix) -> float:
    return cm.pixel_accuracy()


def mean_iou(cm: ConfusionMatrix) -> float:
    return cm.mean_iou()


def _nan_to_none(values):
    return [None if np.isnan(v) else float(v) for v in values]


@dataclass
class EvaluationReport:
    """Metrics of one checkpoint on one dataset, as written to the JSON report"""
    num_classes: int
    num_samples: int
    scored_pixels: int
    pixel_accuracy: float
    mean_iou: float
    per_class_iou: list  # None for absent classes
    class_accuracy: list
    confusion_matrix: list

    @classmethod
    def from_confusion(cls, cm: ConfusionMatrix, num_samples: int):
        return cls(cm.num_classes, num_samples, cm.total, cm.pixel_accuracy(), cm.mean_iou(), _nan_to_none(cm.per_class_iou()),
                   _nan_to_none(cm.class_accuracy()), cm.counts.tolist())

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load(cls, path):
        with open(path, encoding='utf-8') as f:
            return cls(**json.load(f))
