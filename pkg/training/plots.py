# SPDX-License-Identifier: MIT
#
"""Loss curves, per-class IoU bars, ablation bars and qualitative prediction grids"""
import numpy as np
import pandas as pd
import torch
from matplotlib import pyplot as plt

from data.dataset import IGNORE_LABEL, sample_to_tensors
from data.synth import class_palette
from evaluation.metrics import EvaluationReport


def plot_history(history, path):
    """Total loss and the three pyramid terms over the steps, learning rate on a second axis"""
    df = history if isinstance(history, pd.DataFrame) else pd.read_csv(history)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(df['step'], df['total_loss'], label='total', color='black')
    for term, label in zip(('l1', 'l2', 'l3'), ('l1 (full)', 'l2 (1/4)', 'l3 (1/8)')):
        ax.plot(df['step'], df[term], label=label, linewidth=0.8)
    ax.set_xlabel('step')
    ax.set_ylabel('loss')
    ax.legend(loc='upper right')
    lr_axis = ax.twinx()
    lr_axis.plot(df['step'], df['lr'], color='grey', linestyle='--', linewidth=0.8)
    lr_axis.set_ylabel('learning rate')
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_class_iou(report, path, class_names=None):
    """Bars of the per-class IoU; absent classes are left empty"""
    report = report if isinstance(report, EvaluationReport) else EvaluationReport.load(report)
    iou = np.array([np.nan if v is None else v for v in report.per_class_iou], dtype=np.float64)
    names = class_names or [str(c) for c in range(report.num_classes)]
    fig, ax = plt.subplots(figsize=(max(4, report.num_classes * 0.6), 4))
    ax.bar(names, np.nan_to_num(iou), color=class_palette(report.num_classes))
    ax.axhline(report.mean_iou, color='black', linestyle='--', linewidth=0.8, label=f'mIoU {report.mean_iou:.3f}')
    ax.set_ylim(0, 1)
    ax.set_xlabel('class')
    ax.set_ylabel('IoU')
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_ablation(summary: pd.DataFrame, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(summary['variant'], summary['mean_iou'], yerr=summary['std_iou'].fillna(0.0), capsize=4, color='tab:blue')
    ax.set_ylabel('test mIoU')
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def colorize_labels(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """(height, width, 3) image of a label map; ignored pixels are black"""
    palette = np.vstack([class_palette(num_classes), np.zeros((1, 3))])
    return palette[np.where(labels == IGNORE_LABEL, num_classes, np.clip(labels, 0, num_classes))]


@torch.no_grad()
def plot_predictions(samples, models: dict, path, num_classes: int = None):
    """One row per sample: RGB, HHA, the prediction of every model in `models` (title -> FSFNet), ground truth"""
    if not samples:
        raise ValueError('no samples to plot')
    num_classes = num_classes or next(iter(models.values())).cfg.num_classes
    titles = ['RGB', 'HHA'] + list(models) + ['ground truth']
    fig, axes = plt.subplots(len(samples), len(titles), figsize=(2 * len(titles), 2 * len(samples)), squeeze=False)
    for row, sample in zip(axes, samples):
        rgb, hha, _ = sample_to_tensors(sample)
        panels = [sample.rgb, sample.hha]
        for model in models.values():
            prediction = model.eval().predict(rgb.unsqueeze(0), hha.unsqueeze(0))[0].numpy()
            panels.append(colorize_labels(prediction, num_classes))
        panels.append(colorize_labels(sample.labels, num_classes))
        for ax, panel in zip(row, panels):
            ax.imshow(np.clip(panel, 0.0, 1.0), interpolation='nearest')
            ax.set_xticks([])
            ax.set_yticks([])
        row[0].set_ylabel(sample.stem, fontsize=7)
    for ax, title in zip(axes[0], titles):
        ax.set_title(title, fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
