# SPDX-License-Identifier: MIT
#
"""Two-stream RGB-D segmentation network with a cascaded fusion branch"""
from dataclasses import dataclass, field

import torch
from torch import nn

from backend import ops
from model.backbone import ModalityBranch
from model.config import ModelConfig, ModelConfigError
from model.decoder import Decoder
from model.scrf import SCRFModule

INPUT_CHANNELS = 3


@dataclass
class EncoderFeatures:
    rgb: list  # F_rgb^1..m
    hha: list  # F_hha^1..m
    fuse: list  # F_fuse^1..m
    selected_rgb: list = field(default_factory=list)  # S_rgb^j, empty without SCRF
    selected_hha: list = field(default_factory=list)


@dataclass
class ForwardOutput:
    main_logits: torch.Tensor  # input extent
    side_logits: list  # 1/2, 1/4 and 1/8 of the input extent
    intermediates: dict = field(default_factory=dict)


class Encoder(nn.Module):
    """RGB and HHA branches plus the fusion branch that reads from them.

    Without SCRF the fusion feature of every layer is the element-wise sum of the two modality features.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.use_scrf = cfg.use_scrf
        self.rgb = ModalityBranch(INPUT_CHANNELS, cfg.channel_widths)
        self.hha = ModalityBranch(INPUT_CHANNELS, cfg.channel_widths)
        if self.use_scrf:
            self.fusion = nn.ModuleDict({
                f'layer{j}': SCRFModule(j, cfg.width(j), cfg.width(j - 1) if j > 1 else None) for j in range(1, cfg.num_layers + 1)
            })

    def forward(self, rgb: torch.Tensor, hha: torch.Tensor) -> EncoderFeatures:
        f_rgb = self.rgb(rgb)
        f_hha = self.hha(hha)
        if not self.use_scrf:
            return EncoderFeatures(f_rgb, f_hha, [ops.add(r, h) for r, h in zip(f_rgb, f_hha)])

        features = EncoderFeatures(f_rgb, f_hha, [])
        previous = None
        for j, (r, h) in enumerate(zip(f_rgb, f_hha), start=1):
            previous, s_rgb, s_hha = self.fusion[f'layer{j}'](r, h, previous)
            features.fuse.append(previous)
            features.selected_rgb.append(s_rgb)
            features.selected_hha.append(s_hha)
        return features


class FSFNet(nn.Module):
    """Encoder, fusion branch and pyramid-supervised decoder.

    Inputs are (batch, 3, height, width) RGB and HHA tensors with height and width divisible by 16.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        rng_state = torch.get_rng_state()
        self.encoder = Encoder(cfg)
        self.decoder = Decoder(cfg)
        # initial draws start from the pre-construction generator state in module order; DFP comes last,
        # so toggling it leaves every other parameter unchanged
        torch.set_rng_state(rng_state)
        self.apply(_init_weights)

    def check_inputs(self, rgb: torch.Tensor, hha: torch.Tensor):
        ops.check_feature_map(rgb, 'rgb')
        ops.check_feature_map(hha, 'hha')
        if rgb.shape != hha.shape:
            raise ModelConfigError(f'rgb {tuple(rgb.shape)} and hha {tuple(hha.shape)} inputs must share extents')
        if rgb.shape[1] != INPUT_CHANNELS:
            raise ModelConfigError(f'inputs must have {INPUT_CHANNELS} channels, got {rgb.shape[1]}')
        self.cfg.check_input_extent(rgb.shape[2], rgb.shape[3])

    def forward(self, rgb: torch.Tensor, hha: torch.Tensor) -> ForwardOutput:
        self.check_inputs(rgb, hha)
        features = self.encoder(rgb, hha)
        decoded = self.decoder(features.fuse)

        intermediates = {}
        for j in range(1, self.cfg.num_layers + 1):
            intermediates[f'rgb{j}'] = features.rgb[j - 1]
            intermediates[f'hha{j}'] = features.hha[j - 1]
            intermediates[f'fuse{j}'] = features.fuse[j - 1]
        for j, (s_rgb, s_hha) in enumerate(zip(features.selected_rgb, features.selected_hha), start=1):
            intermediates[f'select_rgb{j}'] = s_rgb
            intermediates[f'select_hha{j}'] = s_hha
        for s, feature in enumerate(decoded.features, start=1):
            intermediates[f'decoder{s}'] = feature
        for layer in decoded.selected:
            intermediates[f'dfp_selected{layer}'] = decoded.selected[layer]
            intermediates[f'dfp_attention{layer}'] = decoded.attention[layer]
        return ForwardOutput(decoded.main_logits, decoded.side_logits, intermediates)

    @torch.no_grad()
    def predict(self, rgb: torch.Tensor, hha: torch.Tensor) -> torch.Tensor:
        """Full-resolution argmax labels (batch, height, width)"""
        return self.forward(rgb, hha).main_logits.argmax(dim=1)


def _init_weights(module: nn.Module):
    if isinstance(module, nn.Conv2d):
        nn.init.kaiming_normal_(module.weight, mode='fan_out', nonlinearity='relu')
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.BatchNorm2d):
        nn.init.ones_(module.weight)
        nn.init.zeros_(module.bias)
