# SPDX-License-Identifier: MIT
#
"""Decoder with pyramid-supervision heads.

Three stages (2x bilinear upsample followed by f_conv) lift F_fuse^4 to 1/8, 1/4 and 1/2 of the input
extent. DFP enhances the 1/8 stage with F_fuse^3 and the 1/4 stage with F_fuse^2. Every stage has a
1x1 classification head; the fourth stage upsamples the logits of the 1/2 head to the input extent.
"""
from dataclasses import dataclass, field

import torch
from torch import nn

from backend import ops
from model.backbone import ConvBNReLU
from model.config import ModelConfig
from model.dfp import DFPModule

NUM_STAGES = 3
# decoder stage s receives the encoder layer m - s
DFP_LAYERS = (3, 2)


@dataclass
class DecoderOutput:
    main_logits: torch.Tensor
    side_logits: list  # 1/2, 1/4, 1/8 of the input extent
    features: list = field(default_factory=list)  # (enhanced) stage outputs, coarsest first
    selected: dict = field(default_factory=dict)  # encoder layer -> DFP-selected feature
    attention: dict = field(default_factory=dict)  # encoder layer -> attention map


class Decoder(nn.Module):

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.use_dfp = cfg.use_dfp
        self.num_layers = cfg.num_layers
        for s in range(1, NUM_STAGES + 1):
            self.add_module(f'stage{s}', ConvBNReLU(cfg.width(self.num_layers - s + 1), cfg.width(self.num_layers - s)))
        for s in range(1, NUM_STAGES + 1):
            self.add_module(f'head{s}', nn.Conv2d(cfg.width(self.num_layers - s), cfg.num_classes, kernel_size=1))
        # built last so that toggling DFP leaves every other initial parameter unchanged
        if self.use_dfp:
            self.dfp = nn.ModuleDict({f'layer{i}': DFPModule(i, cfg.width(i), cfg.width(i)) for i in DFP_LAYERS})

    def dfp_module(self, layer: int) -> DFPModule:
        return self.dfp[f'layer{layer}']

    def forward(self, fused: list) -> DecoderOutput:
        """`fused` holds F_fuse^1..F_fuse^m, finest first"""
        out = DecoderOutput(None, [])
        x = fused[-1]
        stage_logits = []
        for s in range(1, NUM_STAGES + 1):
            x = getattr(self, f'stage{s}')(ops.upsample(x, 2, 'bilinear'))
            encoder_layer = self.num_layers - s
            if self.use_dfp and encoder_layer in DFP_LAYERS:
                module = self.dfp_module(encoder_layer)
                f_enc = fused[encoder_layer - 1]
                attention = module.attention_map(f_enc)
                out.attention[encoder_layer] = attention
                out.selected[encoder_layer] = attention * f_enc
                x = module.fuse(out.selected[encoder_layer], x)
            out.features.append(x)
            stage_logits.append(getattr(self, f'head{s}')(x))
        out.side_logits = list(reversed(stage_logits))
        out.main_logits = ops.upsample(out.side_logits[0], 2, 'bilinear')
        return out
