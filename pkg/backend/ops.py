# SPDX-License-Identifier: MIT
#
"""Differentiable operators every higher module composes.

Feature maps are 4-D tensors. Conceptually a feature map has extents (batch, height, width, channels);
in memory the tensors use PyTorch's (batch, channels, height, width) order and every check below is
written in that order. Gradients come from torch.autograd.
"""
import torch
import torch.nn.functional as F

IGNORE_INDEX = 255
UPSAMPLE_MODES = ('nearest', 'bilinear')


class BackendShapeError(ValueError):
    """Raised when an operator receives arguments violating its shape contract"""


def _describe(x: torch.Tensor) -> str:
    return 'x'.join(str(d) for d in x.shape)


def check_feature_map(x: torch.Tensor, name='x'):
    if x.dim() != 4:
        raise BackendShapeError(f'{name} must be a 4-D feature map (batch, channels, height, width), got shape {_describe(x)}')
    if min(x.shape) < 1:
        raise BackendShapeError(f'{name} has an empty extent: {_describe(x)}')


def check_same_extent(a: torch.Tensor, b: torch.Tensor, what='operands'):
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise BackendShapeError(f'{what} differ in extent: {_describe(a)} vs {_describe(b)}')


def conv2d(x: torch.Tensor, weight: torch.Tensor, bias=None, stride: int = 1, padding: int = 0) -> torch.Tensor:
    """Standard 2-D convolution; weight has shape (out_channels, in_channels, k_h, k_w)"""
    check_feature_map(x)
    if weight.dim() != 4:
        raise BackendShapeError(f'kernel must be (out_channels, in_channels, k_h, k_w), got {_describe(weight)}')
    if x.shape[1] != weight.shape[1]:
        raise BackendShapeError(f'channel mismatch: input has {x.shape[1]} channels, kernel expects {weight.shape[1]} '
                                f'(input {_describe(x)}, kernel {_describe(weight)})')
    if stride < 1:
        raise BackendShapeError(f'stride must be positive, got {stride}')
    if padding < 0:
        raise BackendShapeError(f'padding must be non-negative, got {padding}')
    if bias is not None and bias.shape != (weight.shape[0],):
        raise BackendShapeError(f'bias must have {weight.shape[0]} elements, got {_describe(bias)}')
    return F.conv2d(x, weight, bias, stride=stride, padding=padding)


def downsample(x: torch.Tensor, factor: int) -> torch.Tensor:
    """f_down: max-pool with a factor x factor window and stride factor"""
    check_feature_map(x)
    if factor < 1:
        raise BackendShapeError(f'downsample factor must be >= 1, got {factor}')
    if x.shape[2] % factor or x.shape[3] % factor:
        raise BackendShapeError(f'extent {x.shape[2]}x{x.shape[3]} is not divisible by {factor}')
    if factor == 1:
        return x
    return F.max_pool2d(x, kernel_size=factor, stride=factor)


def upsample(x: torch.Tensor, factor: int, mode: str = 'bilinear') -> torch.Tensor:
    """Nearest replication or bilinear interpolation with half-pixel centers (align_corners=False)"""
    check_feature_map(x)
    if factor < 1:
        raise BackendShapeError(f'upsample factor must be >= 1, got {factor}')
    if mode not in UPSAMPLE_MODES:
        raise BackendShapeError(f'unknown upsample mode {mode!r}, expected one of {UPSAMPLE_MODES}')
    if factor == 1:
        return x
    if mode == 'nearest':
        return F.interpolate(x, scale_factor=factor, mode='nearest')
    return F.interpolate(x, scale_factor=factor, mode='bilinear', align_corners=False)


def sigmoid(x: torch.Tensor) -> torch.Tensor:
    return torch.sigmoid(x)


def concat(parts, what='concatenation') -> torch.Tensor:
    """Channel concatenation of feature maps sharing batch and spatial extents"""
    for part in parts:
        check_feature_map(part)
        check_same_extent(parts[0], part, what)
    return torch.cat(list(parts), dim=1)


def add(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.shape != b.shape:
        raise BackendShapeError(f'cannot add {_describe(a)} and {_describe(b)}')
    return a + b


def weighted_cross_entropy(logits: torch.Tensor, labels: torch.Tensor, class_weights: torch.Tensor, ignore_index: int = IGNORE_INDEX) -> torch.Tensor:
    """Mean over non-ignored pixels of weight[label] * -log softmax(logits)[label].

    The mean divides by the number of scored pixels, not by the sum of their weights, so uniform
    weights of 1.0 reproduce the unweighted loss. All pixels ignored gives 0.
    """
    check_feature_map(logits, 'logits')
    num_classes = logits.shape[1]
    if labels.dim() != 3 or labels.shape[0] != logits.shape[0] or labels.shape[1:] != logits.shape[2:]:
        raise BackendShapeError(f'labels {_describe(labels)} do not match logits {_describe(logits)}')
    if class_weights.shape != (num_classes,):
        raise BackendShapeError(f'expected {num_classes} class weights, got {_describe(class_weights)}')
    labels = labels.long()
    scored = labels != ignore_index
    outside = scored & ((labels < 0) | (labels >= num_classes))
    if bool(outside.any()):
        bad = labels[outside].unique().tolist()
        raise BackendShapeError(f'labels {bad} are outside [0, {num_classes}) and are not the ignore label {ignore_index}')
    count = int(scored.sum())
    if count == 0:
        return logits.sum() * 0.0
    weights = class_weights.to(dtype=logits.dtype, device=logits.device)
    total = F.cross_entropy(logits, labels, weight=weights, ignore_index=ignore_index, reduction='sum')
    return total / count
