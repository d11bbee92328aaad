# SPDX-License-Identifier: MIT
#
"""Parser for the arguments passed to the lab driver"""
import argparse


def get_parser():
    parser = argparse.ArgumentParser(description='CLI for the FSFNet RGB-D segmentation lab')
    parser.add_argument('--database', help='SQLite file of the experiment store (default: [storage] database in config.cfg)', type=str)
    commands = parser.add_subparsers(dest='command', required=True)

    synth = commands.add_parser('synth', help='materialize synthetic RGB-D scenes in the rgb/ depth/ label/ hha/ layout')
    synth.add_argument('--out', help='output directory', type=str, required=True)
    synth.add_argument('--count', help='number of scenes', type=int)
    synth.add_argument('--seed', help='scene seed', type=int)
    synth.add_argument('--size', help='square image extent in pixels', type=int)
    synth.add_argument('--classes', help='number of classes including the background', type=int)
    synth.add_argument('--config', help='flat JSON experiment config providing the remaining scene settings', type=str)
    synth.add_argument('--jobs', help='parallel workers', type=int, default=1)

    convert = commands.add_parser('convert-hha', help='encode a 16-bit millimeter depth PNG as an 8-bit HHA PNG')
    convert.add_argument('--depth', help='depth PNG', type=str, required=True)
    convert.add_argument('--intrinsics', help='JSON file with fx, fy, cx, cy', type=str, required=True)
    convert.add_argument('--out', help='HHA PNG to write', type=str, required=True)

    train = commands.add_parser('train', help='train a model')
    train.add_argument('--config', help='flat JSON experiment config', type=str)
    train.add_argument('--override', help='key=value setting, may be repeated', action='append', default=[])
    train.add_argument('--data', help='dataset directory; synthetic scenes are generated when omitted', type=str)

    evaluate = commands.add_parser('eval', help='evaluate a checkpoint')
    evaluate.add_argument('--checkpoint', help='checkpoint archive', type=str, required=True)
    evaluate.add_argument('--data', help='dataset directory', type=str, required=True)
    evaluate.add_argument('--report', help='JSON report to write (default: next to the checkpoint)', type=str)

    ablate = commands.add_parser('ablate', help='run the SUM / +DFP / +SCRF / +SCRF+DFP ablation')
    ablate.add_argument('--config', help='flat JSON experiment config', type=str)
    ablate.add_argument('--override', help='key=value setting, may be repeated', action='append', default=[])
    ablate.add_argument('--seeds', help='number of seeds (at least 3)', type=int)
    ablate.add_argument('--train-count', help='synthetic training scenes', type=int)
    ablate.add_argument('--test-count', help='synthetic test scenes', type=int)
    ablate.add_argument('--jobs', help='parallel training jobs', type=int)
    ablate.add_argument('--name', help='name of the ablation in the experiment store', type=str, default='ablation')

    plot = commands.add_parser('plot', help='render loss curves, per-class IoU bars and prediction grids')
    plot.add_argument('--history', help='history CSV written by train', type=str)
    plot.add_argument('--report', help='JSON report written by eval', type=str)
    plot.add_argument('--checkpoint', help='checkpoint whose predictions are drawn next to the ground truth', type=str)
    plot.add_argument('--baseline', help='checkpoint of the summation baseline drawn beside --checkpoint', type=str)
    plot.add_argument('--data', help='dataset directory of the samples to draw', type=str)
    plot.add_argument('--samples', help='number of samples in the prediction grid', type=int, default=4)
    plot.add_argument('--out', help='output directory for the PNG files', type=str, required=True)
    return parser
