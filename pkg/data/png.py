# SPDX-License-Identifier: MIT
#
"""PNG codecs for the on-disk dataset layout: 8-bit RGB/HHA, 8-bit labels and 16-bit depth in millimeters"""
import numpy as np
from PIL import Image

from hha.encoding import DepthMap

MAX_DEPTH_MM = np.iinfo(np.uint16).max


def read_depth_png(path) -> DepthMap:
    """Zero encodes a missing measurement"""
    with Image.open(path) as image:
        millimeters = np.array(image).astype(np.float64)
    if millimeters.ndim != 2:
        raise ValueError(f'{path}: depth PNG must be single-channel, got shape {millimeters.shape}')
    return DepthMap.from_array(millimeters / 1000.0)


def write_depth_png(path, depth: DepthMap):
    millimeters = np.clip(np.rint(depth.values * 1000.0), 0, MAX_DEPTH_MM)
    millimeters[~depth.valid] = 0
    Image.fromarray(millimeters.astype(np.uint16)).save(path)


def read_image_png(path) -> np.ndarray:
    """(height, width, 3) float array in [0, 1]"""
    with Image.open(path) as image:
        return np.array(image.convert('RGB')).astype(np.float64) / 255.0


def write_image_png(path, image: np.ndarray):
    """Channel value = round(255 * normalized)"""
    Image.fromarray(np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8), mode='RGB').save(path)


def read_label_png(path) -> np.ndarray:
    with Image.open(path) as image:
        labels = np.array(image)
    if labels.ndim != 2:
        raise ValueError(f'{path}: label PNG must be single-channel, got shape {labels.shape}')
    return labels.astype(np.int64)


def write_label_png(path, labels: np.ndarray):
    Image.fromarray(labels.astype(np.uint8), mode='L').save(path)
