# SPDX-License-Identifier: MIT
#
"""SGD with momentum and coupled weight decay.

Per parameter: v <- momentum * v + g + weight_decay * p, then p <- p - lr * v. torch.optim.SGD with
zero dampening implements exactly this update, so the state of the optimizer holds the momentum buffers.
"""
import math
from dataclasses import dataclass

import torch

from model.net import FSFNet
from training.config import TrainConfig


class TrainingDivergedError(Exception):
    """Raised when the loss or a gradient stops being finite"""


@dataclass
class TrainState:
    model: FSFNet
    optimizer: torch.optim.SGD
    step: int = 0
    seed: int = 0
    best_mean_iou: float = -math.inf
    best_step: int = -1

    @classmethod
    def create(cls, model: FSFNet, cfg: TrainConfig):
        optimizer = torch.optim.SGD(model.parameters(), lr=cfg.lr_init, momentum=cfg.momentum, weight_decay=cfg.weight_decay)
        return cls(model, optimizer, seed=cfg.seed)

    def momentum_buffers(self) -> dict:
        """Canonical parameter path -> momentum buffer, for parameters that have one yet"""
        buffers = {}
        for name, p in self.model.named_parameters():
            buffer = self.optimizer.state.get(p, {}).get('momentum_buffer')
            if buffer is not None:
                buffers[name] = buffer
        return buffers


def sgd_step(state: TrainState, lr: float, grads: dict = None, cfg: TrainConfig = None) -> TrainState:
    """Apply one update with learning rate `lr`.

    `grads` maps parameter paths to gradients; without it the gradients left by backward() are used.
    A given `cfg` replaces momentum and weight decay of the optimizer.
    """
    parameters = dict(state.model.named_parameters())
    if grads is not None:
        for name, grad in grads.items():
            if name not in parameters:
                raise KeyError(f'gradient for unknown parameter {name}')
            if grad.shape != parameters[name].shape:
                raise ValueError(f'{name}: gradient shape {tuple(grad.shape)} differs from parameter shape {tuple(parameters[name].shape)}')
            parameters[name].grad = grad.detach().to(dtype=parameters[name].dtype).clone()

    for name, p in parameters.items():
        if p.grad is not None and not bool(torch.isfinite(p.grad).all()):
            raise TrainingDivergedError(f'non-finite gradient for parameter {name} at step {state.step}')

    for group in state.optimizer.param_groups:
        group['lr'] = lr
        if cfg is not None:
            group['momentum'] = cfg.momentum
            group['weight_decay'] = cfg.weight_decay
    state.optimizer.step()
    state.step += 1
    return state
