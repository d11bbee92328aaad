# SPDX-License-Identifier: MIT
#
"""Run the lab: synthesize data, encode depth, train, evaluate, ablate and plot"""
import dataclasses
import json
import os
import sys

import storage
from data import png
from data.dataset import DatasetError, load_dataset
from data.synth import generate_scenes, materialize_dataset
from hha.encoding import CameraIntrinsics, HHAEncodingError, encode_hha
from model.checkpoint import CheckpointError, load_checkpoint
from training.ablation import AblationError, ablate
from training.experiment import load_experiment_config
from training.plots import plot_ablation, plot_class_iou, plot_history, plot_predictions
from training.train import EvaluationError, TrainingDivergedError, evaluate, train
from utils.arguments_parser import get_parser
from utils.config import ConfigError, read_config
from utils.custom_logging import logger


def synth_mode(args):
    given = {key: value for key, value in (('count', args.count), ('seed', args.seed), ('image_size', args.size), ('num_classes', args.classes))
             if value is not None}
    scene = dataclasses.replace(load_experiment_config(args.config).scene, **given)
    materialize_dataset(args.out, scene, n_jobs=args.jobs)


def convert_hha_mode(args):
    depth = png.read_depth_png(args.depth)
    hha = encode_hha(depth, CameraIntrinsics.load(args.intrinsics))
    png.write_image_png(args.out, hha)
    logger.info('Wrote HHA encoding of %s to %s', args.depth, args.out)


def train_mode(args):
    experiment = load_experiment_config(args.config, args.override)
    if args.data is not None:
        dataset = load_dataset(args.data)
    else:
        logger.info('No dataset given, generating %s synthetic scenes', experiment.scene.count)
        dataset = generate_scenes(experiment.scene)
    out_dir = experiment.train.out_dir
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, 'config.json'), 'w', encoding='utf-8') as f:
        json.dump(experiment.to_dict(), f, indent=2)

    result = train(experiment.model, experiment.train, dataset, out_dir=out_dir)
    best = result.state.best_mean_iou if result.best_checkpoint else None
    storage.register_run(out_dir, experiment.to_dict(), experiment.train.seed, result.state.step, float(result.history['total_loss'].iloc[-1]),
                         best, result.checkpoint)


def eval_mode(args):
    report = evaluate(args.checkpoint, load_dataset(args.data))
    path = args.report or f'{os.path.splitext(args.checkpoint)[0]}.report.json'
    report.save(path)
    storage.register_evaluation(args.checkpoint, args.data, report.to_dict())
    logger.info('Wrote evaluation report to %s', path)


def ablate_mode(args):
    experiment = load_experiment_config(args.config, args.override)
    defaults = read_config()['ablation']
    seeds = args.seeds if args.seeds is not None else defaults.getint('seeds', 5)
    summary = ablate(experiment, seeds, train_count=args.train_count or defaults.getint('train_count', 64),
                     test_count=args.test_count or defaults.getint('test_count', 16), n_jobs=args.jobs or defaults.getint('n_jobs', 1),
                     name=args.name)
    out_dir = os.path.join(experiment.train.out_dir, args.name)
    os.makedirs(out_dir, exist_ok=True)
    summary.to_csv(os.path.join(out_dir, 'ablation.csv'), index=False)
    plot_ablation(summary, os.path.join(out_dir, 'ablation.png'))
    with open(os.path.join(out_dir, 'config.json'), 'w', encoding='utf-8') as f:
        json.dump(dict(experiment.to_dict(), seeds=seeds), f, indent=2)


def plot_mode(args):
    if args.history is None and args.report is None and args.checkpoint is None:
        raise ConfigError('plot needs --history, --report and/or --checkpoint')
    if args.checkpoint is not None and args.data is None:
        raise ConfigError('plot --checkpoint needs --data')
    os.makedirs(args.out, exist_ok=True)
    if args.history is not None:
        plot_history(args.history, os.path.join(args.out, 'losses.png'))
    if args.report is not None:
        plot_class_iou(args.report, os.path.join(args.out, 'class_iou.png'))
    if args.checkpoint is not None:
        checkpoint = load_checkpoint(args.checkpoint)
        models = {}
        if args.baseline is not None:
            models['SUM'] = load_checkpoint(args.baseline, expected=dataclasses.replace(checkpoint.cfg, use_scrf=False, use_dfp=False)).build_model()
        models['FSFNet'] = checkpoint.build_model()
        samples = load_dataset(args.data)[:args.samples]
        if not samples:
            raise DatasetError(f'{args.data} holds no samples')
        plot_predictions(samples, models, os.path.join(args.out, 'predictions.png'))
    logger.info('Wrote plots to %s', args.out)


MODES = {'synth': synth_mode, 'convert-hha': convert_hha_mode, 'train': train_mode, 'eval': eval_mode, 'ablate': ablate_mode, 'plot': plot_mode}

if __name__ == '__main__':
    args = get_parser().parse_args()
    if args.database is not None:
        storage.use_database(args.database)

    try:
        MODES[args.command](args)
    except (ConfigError, DatasetError, HHAEncodingError, CheckpointError, EvaluationError, AblationError) as e:
        logger.fatal('%s failed: %s', args.command, e)
        sys.exit(1)
    except TrainingDivergedError as e:
        logger.fatal('Training diverged: %s', e)
        sys.exit(1)
