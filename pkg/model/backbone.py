# SPDX-License-Identifier: MIT
#
"""Residual encoder branch shared by the RGB and the HHA modality.

Each of the four stages halves the spatial extent with a stride-2 entry convolution and refines the
result with two residual blocks, so layer j runs at stride 2^j.
"""
import torch
from torch import nn

from backend import ops


class ConvBNReLU(nn.Sequential):
    """f_conv: 3x3 convolution, batch normalization, ReLU"""

    def __init__(self, in_channels: int, out_channels: int, stride: int = 1):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size=3, stride=stride, padding=1, bias=False)
        self.bn = nn.BatchNorm2d(out_channels)
        self.relu = nn.ReLU()


class ResidualBlock(nn.Module):
    """Two 3x3 convolutions with an identity shortcut"""

    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, kernel_size=3, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(channels)
        self.conv2 = nn.Conv2d(channels, channels, kernel_size=3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(channels)
        self.relu = nn.ReLU()

    def forward(self, x):
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.relu(ops.add(out, x))


class EncoderStage(nn.Module):

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.entry = ConvBNReLU(in_channels, out_channels, stride=2)
        self.block1 = ResidualBlock(out_channels)
        self.block2 = ResidualBlock(out_channels)

    def forward(self, x):
        return self.block2(self.block1(self.entry(x)))


class ModalityBranch(nn.Module):
    """One specific-modality encoder; returns the features of every layer, finest first"""

    def __init__(self, in_channels: int, channel_widths):
        super().__init__()
        self.num_layers = len(channel_widths)
        widths = [in_channels] + list(channel_widths)
        for j in range(1, self.num_layers + 1):
            self.add_module(f'stage{j}', EncoderStage(widths[j - 1], widths[j]))

    def stage(self, j: int) -> EncoderStage:
        return getattr(self, f'stage{j}')

    def forward(self, x: torch.Tensor) -> list:
        features = []
        for j in range(1, self.num_layers + 1):
            x = self.stage(j)(x)
            features.append(x)
        return features
