# SPDX-License-Identifier: MIT
#
"""Pyramid-supervision loss and class weighting"""
from dataclasses import dataclass

import numpy as np
import torch

from backend import ops
from data.dataset import DatasetError, downsample_labels, IGNORE_LABEL
from model.net import ForwardOutput
from training.config import TrainConfig
from utils.custom_logging import logger


@dataclass
class PyramidLoss:
    total: torch.Tensor
    terms: list  # l1 (full resolution), l2 (1/4), l3 (1/8)

    def values(self) -> list:
        return [float(term.detach()) for term in self.terms]


def supervised_outputs(out: ForwardOutput) -> list:
    """The three supervised outputs, finest first.

    The finest term is the full-resolution map the 1/2 head produces; the 1/4 and 1/8 heads follow.
    """
    return [out.main_logits, out.side_logits[1], out.side_logits[2]]


def pyramid_loss(out: ForwardOutput, labels: torch.Tensor, class_weights: torch.Tensor, cfg: TrainConfig) -> PyramidLoss:
    """sum_i lambda_i * l_i with labels nearest-downsampled to the extent of each supervised output"""
    width = labels.shape[-1]
    terms = []
    for logits in supervised_outputs(out):
        factor = width // logits.shape[-1]
        terms.append(ops.weighted_cross_entropy(logits, downsample_labels(labels, factor), class_weights))
    total = sum(weight * term for weight, term in zip(cfg.lambdas, terms))
    return PyramidLoss(total, terms)


def class_frequencies(dataset, num_classes: int) -> np.ndarray:
    """Share of the scored pixels of the whole dataset falling into each class"""
    if len(dataset) == 0:
        raise DatasetError('cannot compute class weights of an empty dataset')
    counts = np.zeros(num_classes, dtype=np.int64)
    for sample in dataset:
        labels = sample.labels if hasattr(sample, 'labels') else np.asarray(sample)
        scored = labels[labels != IGNORE_LABEL]
        counts += np.bincount(scored.ravel(), minlength=num_classes)[:num_classes]
    if counts.sum() == 0:
        raise DatasetError('the dataset has no scored pixels')
    return counts / counts.sum()


def compute_class_weights(dataset, num_classes: int, weighting: str = 'median_frequency') -> np.ndarray:
    """Median-frequency balancing: median(freq) / freq_c over the classes present, 0 for absent classes"""
    freq = class_frequencies(dataset, num_classes)
    if weighting == 'uniform':
        return np.ones(num_classes)
    present = freq > 0
    if not present.all():
        logger.warning('classes %s never occur in the training data and get weight 0', np.flatnonzero(~present).tolist())
    weights = np.zeros(num_classes)
    weights[present] = np.median(freq[present]) / freq[present]
    return weights
