# SPDX-License-Identifier: MIT
#
"""Compare autograd gradients against central finite differences"""
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import torch

from utils.custom_logging import logger

DEFAULT_STEP = 1e-5


class GradientCheckError(Exception):
    """Raised when an analytic or numeric gradient element is not finite"""


@dataclass
class GradientCheckReport:
    max_relative_error: float
    worst_tensor: str
    worst_index: tuple
    num_checked: int


def _relative_error(analytic: float, numeric: float, floor: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def gradient_check(op: Callable, input_shapes: Sequence[tuple], seed: int, parameters: Optional[dict] = None, step: float = DEFAULT_STEP,
                   floor: float = 1e-3, max_checks_per_tensor: Optional[int] = None) -> GradientCheckReport:
    """Check d/dθ sum(op(*inputs) * v) for every input element and every tensor in `parameters`.

    Inputs are drawn from a standard normal in 64-bit precision, v is a fixed random cotangent.
    `parameters` maps names to float64 leaf tensors that `op` closes over. The relative error of one
    element is |a - n| / max(|a|, |n|, floor). With max_checks_per_tensor set, a seeded subset of the
    elements of each tensor is checked instead of all of them.
    """
    generator = torch.Generator().manual_seed(seed)
    inputs = [torch.randn(shape, generator=generator, dtype=torch.float64).requires_grad_(True) for shape in input_shapes]
    targets = [(f'input{i}', x) for i, x in enumerate(inputs)] + list((parameters or {}).items())
    for name, tensor in targets:
        if tensor.dtype != torch.float64:
            raise GradientCheckError(f'{name} must be float64 for a gradient check, got {tensor.dtype}')

    sample = op(*inputs)
    cotangent = torch.ones_like(sample) if sample.numel() == 1 else torch.randn(sample.shape, generator=generator, dtype=torch.float64)

    def objective():
        return (op(*inputs) * cotangent).sum()

    grads = torch.autograd.grad(objective(), [t for _, t in targets], allow_unused=True)

    worst = GradientCheckReport(0.0, '', (), 0)
    for (name, tensor), grad in zip(targets, grads):
        analytic = torch.zeros_like(tensor) if grad is None else grad.detach()
        if not bool(torch.isfinite(analytic).all()):
            bad = tuple(torch.nonzero(~torch.isfinite(analytic))[0].tolist())
            raise GradientCheckError(f'non-finite analytic gradient for {name} at index {bad}')

        flat = tensor.detach().view(-1)
        indices = range(flat.numel())
        if max_checks_per_tensor is not None and flat.numel() > max_checks_per_tensor:
            indices = torch.randperm(flat.numel(), generator=generator)[:max_checks_per_tensor].tolist()
        for i in indices:
            with torch.no_grad():
                original = flat[i].item()
                flat[i] = original + step
                plus = objective().item()
                flat[i] = original - step
                minus = objective().item()
                flat[i] = original
            numeric = (plus - minus) / (2.0 * step)
            index = tuple(int(d) for d in np.unravel_index(i, tuple(tensor.shape)))
            if not (math.isfinite(numeric) and math.isfinite(plus)):
                raise GradientCheckError(f'non-finite numeric gradient for {name} at index {index}')
            error = _relative_error(analytic.view(-1)[i].item(), numeric, floor)
            worst.num_checked += 1
            if error > worst.max_relative_error:
                worst.max_relative_error = error
                worst.worst_tensor = name
                worst.worst_index = index

    logger.debug('gradient check: %s elements, max relative error %.3e at %s%s', worst.num_checked, worst.max_relative_error, worst.worst_tensor,
                 worst.worst_index)
    return worst
