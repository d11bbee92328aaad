# SPDX-License-Identifier: MIT
#
"""Paired RGB-D samples, the directory loader and the augmentations applied before a forward pass"""
import os
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from data import png
from hha.encoding import CameraIntrinsics, DepthMap, encode_hha
from utils.custom_logging import logger
from utils.util import derive_seed

IGNORE_LABEL = 255
RGB_DIR = 'rgb'
DEPTH_DIR = 'depth'
LABEL_DIR = 'label'
HHA_DIR = 'hha'
INTRINSICS_FILE = 'intrinsics.json'


class DatasetError(Exception):
    """Raised for inconsistent dataset directories, unreadable files and invalid crop or sampling requests"""


@dataclass
class RgbdSample:
    rgb: np.ndarray  # (height, width, 3) in [0, 1]
    depth: DepthMap
    hha: np.ndarray  # (height, width, 3) in [0, 1]
    labels: np.ndarray  # (height, width) class indices, IGNORE_LABEL excluded from loss and metrics
    stem: str = ''
    origin: tuple = (0, 0)  # offset of this sample inside the image it was cropped from
    shapes: tuple = field(default=(), repr=False)  # render record of synthetic scenes

    def __post_init__(self):
        extent = self.labels.shape
        if self.rgb.shape[:2] != extent or self.hha.shape[:2] != extent or self.depth.shape != extent:
            raise DatasetError(f'{self.stem}: rgb {self.rgb.shape}, depth {self.depth.shape}, hha {self.hha.shape} and labels {extent} '
                               f'must share spatial extents')

    @property
    def extent(self):
        return self.labels.shape

    def check_labels(self, num_classes: int):
        scored = self.labels[self.labels != IGNORE_LABEL]
        if scored.size and (scored.min() < 0 or scored.max() >= num_classes):
            raise DatasetError(f'{self.stem}: labels must lie in [0, {num_classes}) or equal {IGNORE_LABEL}')


def _stems(directory):
    if not os.path.isdir(directory):
        return None
    return {os.path.splitext(name)[0] for name in os.listdir(directory) if name.lower().endswith('.png')}


def load_dataset(root, intrinsics: CameraIntrinsics = None) -> list:
    """Load `rgb/`, `depth/`, `label/` (and optionally `hha/`) PNGs with matching stems, sorted by stem.

    Depth PNGs hold millimeters. Without an `hha/` directory the encoding is computed on the fly with the
    camera from `intrinsics` or `intrinsics.json`, falling back to the synthetic camera.
    """
    if not os.path.isdir(root):
        raise DatasetError(f'dataset root {root} is not a directory')
    rgb_stems, depth_stems, label_stems = (_stems(os.path.join(root, d)) for d in (RGB_DIR, DEPTH_DIR, LABEL_DIR))
    hha_stems = _stems(os.path.join(root, HHA_DIR))
    required = [s for s in (rgb_stems, depth_stems, label_stems) if s is not None]
    if not required:
        logger.info('No dataset directories found below %s', root)
        return []
    if len(required) < 3:
        raise DatasetError(f'{root} must contain {RGB_DIR}/, {DEPTH_DIR}/ and {LABEL_DIR}/ directories')

    groups = [rgb_stems, depth_stems, label_stems] + ([hha_stems] if hha_stems is not None else [])
    all_stems = set.union(*groups)
    unmatched = sorted(stem for stem in all_stems if not all(stem in group for group in groups))
    if unmatched:
        raise DatasetError(f'unmatched stem {unmatched[0]} (and {len(unmatched) - 1} more) in {root}')

    if intrinsics is None and os.path.isfile(os.path.join(root, INTRINSICS_FILE)):
        intrinsics = CameraIntrinsics.load(os.path.join(root, INTRINSICS_FILE))

    samples = []
    for stem in sorted(all_stems):
        try:
            rgb = png.read_image_png(os.path.join(root, RGB_DIR, f'{stem}.png'))
            depth = png.read_depth_png(os.path.join(root, DEPTH_DIR, f'{stem}.png'))
            labels = png.read_label_png(os.path.join(root, LABEL_DIR, f'{stem}.png'))
            if hha_stems is not None:
                hha = png.read_image_png(os.path.join(root, HHA_DIR, f'{stem}.png'))
            else:
                camera = intrinsics if intrinsics is not None else CameraIntrinsics.for_image(*labels.shape)
                hha = encode_hha(depth, camera)
        except (OSError, ValueError) as e:
            raise DatasetError(f'cannot read sample {stem}: {e}') from e
        samples.append(RgbdSample(rgb, depth, hha, labels, stem=stem))
    logger.info('Loaded %s samples from %s', len(samples), root)
    return samples


def random_crop(s: RgbdSample, size: int, seed: int) -> RgbdSample:
    """Crop all modalities at one offset drawn from `seed`"""
    height, width = s.extent
    if size > height or size > width:
        raise DatasetError(f'{s.stem}: crop size {size} exceeds the image extent {height}x{width}')
    rng = np.random.default_rng(seed)
    top = int(rng.integers(0, height - size + 1))
    left = int(rng.integers(0, width - size + 1))
    window = (slice(top, top + size), slice(left, left + size))
    depth = DepthMap(s.depth.values[window].copy(), s.depth.valid[window].copy())
    return replace(s, rgb=s.rgb[window].copy(), depth=depth, hha=s.hha[window].copy(), labels=s.labels[window].copy(),
                   origin=(s.origin[0] + top, s.origin[1] + left))


def horizontal_flip(s: RgbdSample, seed: int, probability: float = 0.5) -> RgbdSample:
    if np.random.default_rng(seed).random() >= probability:
        return s
    depth = DepthMap(s.depth.values[:, ::-1].copy(), s.depth.valid[:, ::-1].copy())
    return replace(s, rgb=s.rgb[:, ::-1].copy(), depth=depth, hha=s.hha[:, ::-1].copy(), labels=s.labels[:, ::-1].copy())


def downsample_labels(labels, factor: int):
    """Nearest-neighbour subsampling taking the top-left element of each factor x factor block.

    Works on numpy arrays and torch tensors whose last two dimensions are (height, width).
    """
    if factor < 1:
        raise DatasetError(f'label downsampling factor must be >= 1, got {factor}')
    height, width = labels.shape[-2:]
    if height % factor or width % factor:
        raise DatasetError(f'label extent {height}x{width} is not divisible by {factor}')
    return labels[..., ::factor, ::factor]


def sample_to_tensors(s: RgbdSample):
    rgb = torch.from_numpy(np.ascontiguousarray(s.rgb.transpose(2, 0, 1))).float()
    hha = torch.from_numpy(np.ascontiguousarray(s.hha.transpose(2, 0, 1))).float()
    labels = torch.from_numpy(np.ascontiguousarray(s.labels)).long()
    return rgb, hha, labels


class SegmentationData(torch.utils.data.Dataset):
    """Serves (rgb, hha, labels) tensors; crop offsets and flips are a function of (seed, epoch, index)"""

    def __init__(self, samples, crop_size: int = None, flip: bool = False, seed: int = 0):
        assert samples
        self.__samples = samples
        self.__crop_size = crop_size
        self.__flip = flip
        self.__seed = seed
        self.__epoch = 0

    def set_epoch(self, epoch: int):
        self.__epoch = epoch

    def __len__(self):
        return len(self.__samples)

    def __getitem__(self, idx):
        sample = self.__samples[idx]
        if self.__crop_size is not None:
            sample = random_crop(sample, self.__crop_size, derive_seed(self.__seed, self.__epoch, idx, 0))
        if self.__flip:
            sample = horizontal_flip(sample, derive_seed(self.__seed, self.__epoch, idx, 1))
        return sample_to_tensors(sample)


def collate(x):
    rgbs, hhas, labels = zip(*x)
    return torch.stack(rgbs), torch.stack(hhas), torch.stack(labels)
