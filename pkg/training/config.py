# SPDX-License-Identifier: MIT
#
"""Optimization settings"""
from dataclasses import dataclass

from utils.config import ConfigError

LR_SCHEDULES = ('poly', 'multiplicative')
CLASS_WEIGHTINGS = ('median_frequency', 'uniform')
NUM_SUPERVISED_OUTPUTS = 3


@dataclass(frozen=True)
class TrainConfig:
    lr_init: float = 0.02
    lr_power: float = 0.9
    lr_schedule: str = 'poly'
    momentum: float = 0.9
    weight_decay: float = 0.0005
    batch_size: int = 4
    max_steps: int = 500
    lambdas: tuple[float, ...] = (1.0, 1.0, 1.0)  # weights of the full, 1/4 and 1/8 resolution terms
    crop_size: int = 64
    seed: int = 0
    flip: bool = True
    val_fraction: float = 0.2
    checkpoint_every: int = 100  # 0 disables cadence checkpoints
    eval_every: int = 100  # 0 evaluates only after the last step
    num_workers: int = 0
    class_weighting: str = 'median_frequency'
    out_dir: str = 'runs/desk'

    def __post_init__(self):
        if self.lr_init <= 0:
            raise ConfigError(f'lr_init must be positive, got {self.lr_init}')
        if not 0 <= self.momentum < 1:
            raise ConfigError(f'momentum must lie in [0, 1), got {self.momentum}')
        if self.weight_decay < 0:
            raise ConfigError(f'weight_decay must be non-negative, got {self.weight_decay}')
        if len(self.lambdas) != NUM_SUPERVISED_OUTPUTS or min(self.lambdas) < 0:
            raise ConfigError(f'expected {NUM_SUPERVISED_OUTPUTS} non-negative loss weights, got {self.lambdas}')
        if self.batch_size < 1 or self.max_steps < 1 or self.crop_size < 1:
            raise ConfigError('batch_size, max_steps and crop_size must be positive')
        if self.lr_schedule not in LR_SCHEDULES:
            raise ConfigError(f'unknown lr_schedule {self.lr_schedule!r}, expected one of {LR_SCHEDULES}')
        if self.class_weighting not in CLASS_WEIGHTINGS:
            raise ConfigError(f'unknown class_weighting {self.class_weighting!r}, expected one of {CLASS_WEIGHTINGS}')
        if not 0 <= self.val_fraction < 1:
            raise ConfigError(f'val_fraction must lie in [0, 1), got {self.val_fraction}')
        if min(self.checkpoint_every, self.eval_every, self.num_workers) < 0:
            raise ConfigError('checkpoint_every, eval_every and num_workers must be non-negative')
