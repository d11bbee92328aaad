# SPDX-License-Identifier: MIT
#
"""Four-variant ablation of the fusion and propagation modules over several seeds.

Every variant is trained per seed on the same synthetic split and scored on the same test scenes:
element-wise summation (SUM), +DFP, +SCRF and +SCRF+DFP, reported in this order as mean and
standard deviation of the test mIoU.
"""
import dataclasses
from dataclasses import dataclass

import pandas as pd
from joblib import Parallel, delayed
from prettytable import PrettyTable

import storage
from data.synth import generate_scenes
from training.experiment import ExperimentConfig
from training.train import evaluate_model, train
from utils.custom_logging import logger

MIN_SEEDS = 3


class AblationError(Exception):
    """Raised for ablations that cannot support a mean and a spread"""


@dataclass(frozen=True)
class Variant:
    name: str
    use_scrf: bool
    use_dfp: bool


VARIANTS = (Variant('SUM', False, False), Variant('+DFP', False, True), Variant('+SCRF', True, False), Variant('+SCRF+DFP', True, True))


def _run(experiment: ExperimentConfig, variant: Variant, seed: int, train_samples, test_samples) -> dict:
    model_cfg = dataclasses.replace(experiment.model, use_scrf=variant.use_scrf, use_dfp=variant.use_dfp)
    train_cfg = dataclasses.replace(experiment.train, seed=seed, val_fraction=0.0)
    logger.info('Ablation: train %s with seed %s', variant.name, seed)
    result = train(model_cfg, train_cfg, train_samples)
    model = result.model
    model.eval()
    cm = evaluate_model(model, test_samples)
    return {'variant': variant.name, 'variant_order': VARIANTS.index(variant), 'seed': seed, 'mean_iou': cm.mean_iou(),
            'pixel_accuracy': cm.pixel_accuracy(), 'final_loss': float(result.history['total_loss'].iloc[-1]),
            'steps': result.state.step}


def summarize(results: pd.DataFrame) -> pd.DataFrame:
    """Mean and sample standard deviation of the test mIoU per variant, in variant order"""
    summary = results.groupby(['variant_order', 'variant']).agg(mean_iou=('mean_iou', 'mean'), std_iou=('mean_iou', 'std'),
                                                                pixel_accuracy=('pixel_accuracy', 'mean'), seeds=('seed', 'count'))
    return summary.reset_index().sort_values('variant_order').drop(columns='variant_order').reset_index(drop=True)


def format_table(summary: pd.DataFrame) -> PrettyTable:
    table = PrettyTable(['Variant', 'mIoU (mean ± std)', 'Pixel Acc.', 'Seeds'])
    for _, row in summary.iterrows():
        table.add_row([row['variant'], f'{row["mean_iou"]:.4f} ± {row["std_iou"]:.4f}', f'{row["pixel_accuracy"]:.4f}', row['seeds']])
    return table


def ablate(experiment: ExperimentConfig, seeds, train_count: int = 64, test_count: int = 16, n_jobs: int = 1, name: str = None) -> pd.DataFrame:
    """Train all variants for every seed and return the summary in variant order.

    `seeds` is either a count (seeds 0..n-1 offset by the configured training seed) or an explicit list.
    With `name` every (variant, seed) result is also written to the experiment store under that name.
    """
    seeds = list(range(experiment.train.seed, experiment.train.seed + seeds)) if isinstance(seeds, int) else list(seeds)
    if len(seeds) < MIN_SEEDS:
        raise AblationError(f'an ablation needs at least {MIN_SEEDS} seeds, got {len(seeds)}')

    train_samples = generate_scenes(experiment.scene, train_count, start=0, n_jobs=n_jobs)
    test_samples = generate_scenes(experiment.scene, test_count, start=train_count, n_jobs=n_jobs)
    logger.info('Ablation over seeds %s: %s training and %s test scenes', seeds, len(train_samples), len(test_samples))

    jobs = [(variant, seed) for variant in VARIANTS for seed in seeds]
    rows = Parallel(n_jobs=n_jobs)(delayed(_run)(experiment, variant, seed, train_samples, test_samples) for variant, seed in jobs)
    results = pd.DataFrame(rows)

    if name is not None:
        for row in rows:
            model_cfg = dataclasses.replace(experiment.model, use_scrf=VARIANTS[row['variant_order']].use_scrf,
                                            use_dfp=VARIANTS[row['variant_order']].use_dfp)
            config = dict(experiment.to_dict(), model=model_cfg.to_dict())
            run_id = storage.register_run(f'{name}/{row["variant"]}', config, row['seed'], row['steps'], final_loss=row['final_loss'])
            storage.register_ablation_result(name, row['variant'], row['variant_order'], row['seed'], row['mean_iou'], row['pixel_accuracy'],
                                             run_id)

    summary = summarize(results)
    logger.info('Ablation results:\n%s', format_table(summary))
    return summary
