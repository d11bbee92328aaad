# SPDX-License-Identifier: MIT
#
"""Learning-rate schedules"""
from training.config import TrainConfig


def poly_lr(step: int, max_steps: int, cfg: TrainConfig) -> float:
    """lr_init * (1 - step / max_steps) ^ lr_power; lr_init at step 0, 0 at max_steps"""
    if not 0 <= step <= max_steps:
        raise ValueError(f'step {step} outside [0, {max_steps}]')
    return cfg.lr_init * (1.0 - step / max_steps) ** cfg.lr_power


def multiplicative_lr(epoch: int, cfg: TrainConfig) -> float:
    """lr_init * lr_power ^ epoch"""
    if epoch < 0:
        raise ValueError(f'epoch must be non-negative, got {epoch}')
    return cfg.lr_init * cfg.lr_power ** epoch


def learning_rate(step: int, cfg: TrainConfig, steps_per_epoch: int = 1) -> float:
    if cfg.lr_schedule == 'multiplicative':
        if step > cfg.max_steps:
            raise ValueError(f'step {step} outside [0, {cfg.max_steps}]')
        return multiplicative_lr(step // max(steps_per_epoch, 1), cfg)
    return poly_lr(step, cfg.max_steps, cfg)
