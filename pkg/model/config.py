# SPDX-License-Identifier: MIT
#
"""Architecture settings of the two-stream fusion network"""
from dataclasses import dataclass, asdict

NUM_LAYERS = 4


class ModelConfigError(ValueError):
    """Raised for invalid architecture settings and for inputs the architecture cannot process"""


@dataclass(frozen=True)
class ModelConfig:
    num_layers: int = NUM_LAYERS
    channel_widths: tuple[int, ...] = (16, 32, 64, 128)
    num_classes: int = 6
    use_scrf: bool = True
    use_dfp: bool = True
    input_size: int = 64

    def __post_init__(self):
        if self.num_layers != NUM_LAYERS:
            raise ModelConfigError(f'the network has exactly {NUM_LAYERS} encoder layers, got num_layers={self.num_layers}')
        if len(self.channel_widths) != self.num_layers or min(self.channel_widths) < 1:
            raise ModelConfigError(f'expected {self.num_layers} positive channel widths, got {self.channel_widths}')
        if self.num_classes < 2:
            raise ModelConfigError(f'num_classes must be >= 2, got {self.num_classes}')
        if self.input_size < 1 or self.input_size % self.total_stride:
            raise ModelConfigError(f'input_size {self.input_size} must be a positive multiple of {self.total_stride}')

    @property
    def total_stride(self) -> int:
        return 2 ** self.num_layers

    def width(self, layer: int) -> int:
        """Channel width of encoder layer j, counted from 1"""
        return self.channel_widths[layer - 1]

    def check_input_extent(self, height: int, width: int):
        if height % self.total_stride or width % self.total_stride or height < 1 or width < 1:
            raise ModelConfigError(f'input extent {height}x{width} is not divisible by {self.total_stride}')

    def to_dict(self) -> dict:
        values = asdict(self)
        values['channel_widths'] = list(self.channel_widths)
        return values

    @classmethod
    def from_dict(cls, values: dict):
        values = dict(values)
        values['channel_widths'] = tuple(int(w) for w in values['channel_widths'])
        return cls(**values)
