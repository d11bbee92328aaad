# SPDX-License-Identifier: MIT
#
"""This module trains the fusion network on RGB-D samples and evaluates checkpoints"""
import math
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import torch
from torch.utils.data import DataLoader

from data.dataset import DatasetError, SegmentationData, collate, sample_to_tensors
from evaluation.metrics import ConfusionMatrix, EvaluationReport
from model.checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from model.config import ModelConfig, ModelConfigError
from model.net import FSFNet
from training.config import TrainConfig
from training.loss import compute_class_weights, pyramid_loss
from training.optimizer import TrainState, TrainingDivergedError, sgd_step
from training.schedule import learning_rate
from utils.custom_logging import logger
from utils.util import seed_everything, split_by_hash

HISTORY_COLUMNS = ['step', 'lr', 'total_loss', 'l1', 'l2', 'l3']
HISTORY_FILE = 'history.csv'
LAST_CHECKPOINT = 'last.npz'
BEST_CHECKPOINT = 'best.npz'
LAST_GOOD_CHECKPOINT = 'last_good.npz'

__all__ = ['train', 'evaluate', 'evaluate_model', 'TrainResult', 'TrainingDivergedError', 'EvaluationError']


class EvaluationError(Exception):
    """Raised for empty evaluation sets and for datasets whose labels do not fit the checkpoint"""


@dataclass
class TrainResult:
    state: TrainState
    history: pd.DataFrame
    class_weights: np.ndarray
    checkpoint: str = None  # last.npz, None without an output directory
    best_checkpoint: str = None
    val_history: list = field(default_factory=list)  # (step, mean IoU)

    @property
    def model(self) -> FSFNet:
        return self.state.model


def _split(dataset, cfg: TrainConfig):
    if cfg.val_fraction == 0:
        return list(dataset), []
    train_idx, val_idx = split_by_hash(range(len(dataset)), cfg.val_fraction, cfg.seed)
    if not train_idx:
        logger.warning('validation split took every sample, training on all of them')
        return list(dataset), []
    return [dataset[i] for i in train_idx], [dataset[i] for i in val_idx]


def _save(state: TrainState, out_dir, name: str, extra: dict = None):
    path = os.path.join(out_dir, name)
    save_checkpoint(path, state.model, state.optimizer, seed=state.seed, step=state.step, extra=extra)
    return path


def train(model_cfg: ModelConfig, train_cfg: TrainConfig, dataset, out_dir=None, val_dataset=None) -> TrainResult:
    """Seeded loop: crop and flip, forward, pyramid loss, backward, SGD with the scheduled learning rate.

    Without `val_dataset` a hash-based share of `dataset` (val_fraction) is held out for validation.
    With `out_dir` the history CSV and the checkpoints (cadence, best by validation mIoU, last) are written there.
    """
    if not dataset:
        raise ValueError('cannot train on an empty dataset')
    seed_everything(train_cfg.seed)
    if val_dataset is None:
        train_samples, val_samples = _split(dataset, train_cfg)
    else:
        train_samples, val_samples = list(dataset), list(val_dataset)
    for sample in train_samples + val_samples:
        sample.check_labels(model_cfg.num_classes)

    logger.info('training samples: %s, validation samples: %s', len(train_samples), len(val_samples))
    if len(train_samples) < 20:
        logger.warning('Warning: training on fewer than 20 samples.')

    class_weights = compute_class_weights(train_samples, model_cfg.num_classes, train_cfg.class_weighting)
    logger.info('class weights: %s', ' '.join(f'{w:.3f}' for w in class_weights))
    weights = torch.tensor(class_weights, dtype=torch.float32)

    state = TrainState.create(FSFNet(model_cfg), train_cfg)
    model = state.model
    data = SegmentationData(train_samples, crop_size=train_cfg.crop_size, flip=train_cfg.flip, seed=train_cfg.seed)
    loader = DataLoader(data, batch_size=train_cfg.batch_size, shuffle=True, collate_fn=collate, num_workers=train_cfg.num_workers,
                        generator=torch.Generator().manual_seed(train_cfg.seed), drop_last=len(data) >= train_cfg.batch_size)
    steps_per_epoch = len(loader)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    result = TrainResult(state, None, class_weights)
    history = []
    epoch = 0
    model.train()
    while state.step < train_cfg.max_steps:
        data.set_epoch(epoch)
        for rgb, hha, labels in loader:
            if state.step >= train_cfg.max_steps:
                break
            step = state.step
            lr = learning_rate(step, train_cfg, steps_per_epoch)
            loss = pyramid_loss(model(rgb, hha), labels, weights, train_cfg)
            terms = loss.values()
            if not math.isfinite(float(loss.total.detach())):
                _diverged(state, out_dir, f'non-finite loss {terms} at step {step}')

            state.optimizer.zero_grad()
            loss.total.backward()
            try:
                sgd_step(state, lr)
            except TrainingDivergedError as e:
                _diverged(state, out_dir, str(e))

            history.append([step, lr, float(loss.total.detach())] + terms)
            if step % 10 == 0:
                logger.info('step %s\tlr %.5f\tloss %.4f\t(%s)', step, lr, history[-1][2], ' '.join(f'{t:.4f}' for t in terms))

            if out_dir is not None and train_cfg.checkpoint_every and state.step % train_cfg.checkpoint_every == 0:
                _save(state, out_dir, f'step_{state.step:06d}.npz')
            final = state.step == train_cfg.max_steps
            if val_samples and ((train_cfg.eval_every and state.step % train_cfg.eval_every == 0) or final):
                _validate(state, val_samples, out_dir, result)
        epoch += 1

    result.history = pd.DataFrame(history, columns=HISTORY_COLUMNS)
    if out_dir is not None:
        result.history.to_csv(os.path.join(out_dir, HISTORY_FILE), index=False)
        result.checkpoint = _save(state, out_dir, LAST_CHECKPOINT, {'best_mean_iou': _finite_or_none(state.best_mean_iou)})
    logger.info('Finished training after %s steps, final loss %.4f', state.step, history[-1][2] if history else float('nan'))
    return result


def _finite_or_none(value):
    return value if math.isfinite(value) else None


def _diverged(state: TrainState, out_dir, message: str):
    if out_dir is not None:
        path = _save(state, out_dir, LAST_GOOD_CHECKPOINT)
        message = f'{message}; last good checkpoint written to {path}'
    logger.error('Training diverged: %s', message)
    raise TrainingDivergedError(message)


def _validate(state: TrainState, val_samples, out_dir, result: TrainResult):
    model = state.model
    model.eval()
    mean_iou = evaluate_model(model, val_samples).mean_iou()
    model.train()
    result.val_history.append((state.step, mean_iou))
    logger.info('step %s\tvalidation mIoU %.4f', state.step, mean_iou)
    if mean_iou > state.best_mean_iou:
        state.best_mean_iou, state.best_step = mean_iou, state.step
        if out_dir is not None:
            result.best_checkpoint = _save(state, out_dir, BEST_CHECKPOINT, {'best_mean_iou': mean_iou})


@torch.no_grad()
def evaluate_model(model: FSFNet, dataset) -> ConfusionMatrix:
    """Accumulate full-resolution argmax predictions of every sample into one matrix"""
    cm = ConfusionMatrix(model.cfg.num_classes)
    for sample in dataset:
        rgb, hha, labels = sample_to_tensors(sample)
        cm.accumulate(model.predict(rgb.unsqueeze(0), hha.unsqueeze(0))[0], labels)
    return cm


def evaluate(checkpoint, dataset, expected: ModelConfig = None) -> EvaluationReport:
    """Metrics report of a checkpoint (path or loaded Checkpoint) on a dataset"""
    if not dataset:
        raise EvaluationError('cannot evaluate on an empty dataset')
    if not isinstance(checkpoint, Checkpoint):
        checkpoint = load_checkpoint(checkpoint)
    if expected is not None and expected != checkpoint.cfg:
        raise EvaluationError(f'checkpoint was trained for {checkpoint.cfg}, expected {expected}')

    num_classes = checkpoint.cfg.num_classes
    for sample in dataset:
        try:
            sample.check_labels(num_classes)
        except DatasetError as e:
            raise EvaluationError(f'dataset does not fit a {num_classes}-class checkpoint: {e}') from e

    try:
        model = checkpoint.build_model()
    except CheckpointError as e:
        raise EvaluationError(str(e)) from e
    model.eval()
    try:
        cm = evaluate_model(model, dataset)
    except ModelConfigError as e:
        raise EvaluationError(f'sample extent does not fit the model: {e}') from e
    report = EvaluationReport.from_confusion(cm, len(dataset))
    logger.info('mIoU %.4f\tpixel accuracy %.4f\tscored pixels %s', report.mean_iou, report.pixel_accuracy, report.scored_pixels)
    return report
