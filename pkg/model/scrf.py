# SPDX-License-Identifier: MIT
#
"""Symmetric cross-modality residual fusion.

At layer j each modality selects features from itself with a 1x1 convolution and hands them to the
other modality, where they are added residually before f_conv. The two residual outputs are
concatenated with the downsampled fusion feature of layer j-1 and projected to the layer width. The
modality features are only read, never written, so the branches keep their specificity.
"""
from typing import Optional

import torch
from torch import nn

from backend import ops
from backend.ops import BackendShapeError
from model.backbone import ConvBNReLU

MODALITIES = ('rgb', 'hha')


class FusionShapeError(ValueError):
    """Raised when the feature maps handed to a fusion module disagree in extent"""

    def __init__(self, message: str, layer: Optional[int] = None):
        super().__init__(f'layer {layer}: {message}' if layer is not None else message)
        self.layer = layer


def cross_modal_residual(f_own: torch.Tensor, s_other: torch.Tensor, f_conv: nn.Module, layer: Optional[int] = None) -> torch.Tensor:
    """f_conv(s_other + f_own), used for both directions"""
    try:
        return f_conv(ops.add(s_other, f_own))
    except BackendShapeError as e:
        raise FusionShapeError(f'cross-modality residual operands disagree: {e}', layer) from e


class SCRFModule(nn.Module):
    """Fusion of layer j; `prev_channels` is the width of F_fuse^(j-1) and is None at j = 1"""

    def __init__(self, layer: int, channels: int, prev_channels: Optional[int] = None):
        super().__init__()
        if (layer == 1) != (prev_channels is None):
            raise ValueError(f'layer {layer}: a previous fusion feature exists exactly for layers after the first')
        self.layer = layer
        self.select_rgb = nn.Conv2d(channels, channels, kernel_size=1)
        self.select_hha = nn.Conv2d(channels, channels, kernel_size=1)
        self.residual_rgb = ConvBNReLU(channels, channels)
        self.residual_hha = ConvBNReLU(channels, channels)
        self.concat_channels = 2 * channels + (prev_channels or 0)
        self.project = nn.Conv2d(self.concat_channels, channels, kernel_size=1)

    def select(self, f: torch.Tensor, which: str) -> torch.Tensor:
        """S_rgb^j from F_rgb^j or S_hha^j from F_hha^j"""
        if which not in MODALITIES:
            raise ValueError(f'unknown modality {which!r}, expected one of {MODALITIES}')
        ops.check_feature_map(f, f'F_{which}^{self.layer}')
        return self.select_rgb(f) if which == 'rgb' else self.select_hha(f)

    def _check(self, f_rgb, f_hha, f_fuse_prev):
        if f_rgb.shape != f_hha.shape:
            raise FusionShapeError(f'modality features differ: rgb {tuple(f_rgb.shape)} vs hha {tuple(f_hha.shape)}', self.layer)
        if (f_fuse_prev is None) != (self.layer == 1):
            raise FusionShapeError('the previous fusion feature must be given exactly for layers after the first', self.layer)
        if f_fuse_prev is not None:
            expected = (f_rgb.shape[0], 2 * f_rgb.shape[2], 2 * f_rgb.shape[3])
            if (f_fuse_prev.shape[0], f_fuse_prev.shape[2], f_fuse_prev.shape[3]) != expected:
                raise FusionShapeError(f'previous fusion feature {tuple(f_fuse_prev.shape)} must have twice the extent of {tuple(f_rgb.shape)}',
                                       self.layer)

    def concat_parts(self, s_hha, f_rgb, s_rgb, f_hha, f_fuse_prev=None) -> list:
        """[f_down(F_fuse^(j-1)), f_conv(S_hha + F_rgb), f_conv(S_rgb + F_hha)], the first item only after layer 1"""
        self._check(f_rgb, f_hha, f_fuse_prev)
        parts = [cross_modal_residual(f_rgb, s_hha, self.residual_rgb, self.layer),
                 cross_modal_residual(f_hha, s_rgb, self.residual_hha, self.layer)]
        if f_fuse_prev is not None:
            parts.insert(0, ops.downsample(f_fuse_prev, 2))
        return parts

    def fuse(self, s_hha, f_rgb, s_rgb, f_hha, f_fuse_prev=None) -> torch.Tensor:
        """F_fuse^j"""
        try:
            fused = ops.concat(self.concat_parts(s_hha, f_rgb, s_rgb, f_hha, f_fuse_prev), what=f'fusion parts of layer {self.layer}')
        except BackendShapeError as e:
            raise FusionShapeError(str(e), self.layer) from e
        return self.project(fused)

    def forward(self, f_rgb, f_hha, f_fuse_prev=None):
        """Returns (F_fuse^j, S_rgb^j, S_hha^j)"""
        s_rgb = self.select(f_rgb, 'rgb')
        s_hha = self.select(f_hha, 'hha')
        return self.fuse(s_hha, f_rgb, s_rgb, f_hha, f_fuse_prev), s_rgb, s_hha
