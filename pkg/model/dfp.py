# SPDX-License-Identifier: MIT
#
"""Detailed feature propagation: spatially gated fused encoder features concatenated into the decoder"""
import torch
from torch import nn

from backend import ops
from backend.ops import BackendShapeError
from model.scrf import FusionShapeError


class DFPModule(nn.Module):
    """Selects F_fuse^i by spatial attention and fuses it into decoder stage m - i"""

    def __init__(self, layer: int, encoder_channels: int, decoder_channels: int):
        super().__init__()
        self.layer = layer
        self.encoder_channels = encoder_channels
        self.decoder_channels = decoder_channels
        # channel mean and channel max -> one attention logit per pixel
        self.attention = nn.Conv2d(2, 1, kernel_size=1)
        self.project = nn.Conv2d(encoder_channels + decoder_channels, decoder_channels, kernel_size=1)

    def attention_map(self, f_enc: torch.Tensor) -> torch.Tensor:
        """(batch, 1, height, width), every value strictly inside (0, 1)"""
        ops.check_feature_map(f_enc, f'F_fuse^{self.layer}')
        descriptor = ops.concat([f_enc.mean(dim=1, keepdim=True), f_enc.amax(dim=1, keepdim=True)])
        return ops.sigmoid(self.attention(descriptor))

    def select(self, f_enc: torch.Tensor) -> torch.Tensor:
        return self.attention_map(f_enc) * f_enc

    def fuse(self, selected: torch.Tensor, f_dec: torch.Tensor) -> torch.Tensor:
        try:
            return self.project(ops.concat([selected, f_dec], what=f'DFP inputs of layer {self.layer}'))
        except BackendShapeError as e:
            raise FusionShapeError(str(e), self.layer) from e

    @torch.no_grad()
    def reset_to_passthrough(self):
        """Make fuse() return f_dec unchanged: zero weights on the selected channels, identity on the decoder channels"""
        self.project.weight.zero_()
        self.project.bias.zero_()
        identity = torch.eye(self.decoder_channels, dtype=self.project.weight.dtype, device=self.project.weight.device)
        self.project.weight[:, self.encoder_channels:, 0, 0] = identity

    def forward(self, f_enc, f_dec):
        """Returns (enhanced decoder feature, selected encoder feature)"""
        selected = self.select(f_enc)
        return self.fuse(selected, f_dec), selected
