# SPDX-License-Identifier: MIT
#
"""Encode a metric depth map into the three HHA channels: disparity, height above ground and angle with gravity.

Camera frame convention: x to the right, y up, z along the viewing direction. Gravity points along -y,
so the gravity-up axis is +y; it is fixed rather than estimated from the scene.
"""
import json
from dataclasses import dataclass, asdict

import numpy as np
from sklearn import preprocessing

from utils.custom_logging import logger

GRAVITY_UP = np.array([0.0, 1.0, 0.0])


class HHAEncodingError(Exception):
    """Raised when a depth map cannot be encoded"""


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise HHAEncodingError(f'focal lengths must be positive, got fx={self.fx}, fy={self.fy}')

    @classmethod
    def for_image(cls, height: int, width: int = None):
        """The fixed camera used for synthetic scenes: focal length equal to the image extent, centered principal point"""
        width = height if width is None else width
        return cls(float(width), float(width), (width - 1) / 2.0, (height - 1) / 2.0)

    @classmethod
    def load(cls, path):
        with open(path, encoding='utf-8') as f:
            values = json.load(f)
        return cls(float(values['fx']), float(values['fy']), float(values['cx']), float(values['cy']))

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(asdict(self), f, indent=2)


@dataclass
class DepthMap:
    values: np.ndarray  # (height, width) in meters
    valid: np.ndarray  # (height, width) bool

    def __post_init__(self):
        if self.values.shape != self.valid.shape or self.values.ndim != 2:
            raise HHAEncodingError(f'depth {self.values.shape} and validity mask {self.valid.shape} must be matching 2-D arrays')
        if not np.all(self.values[self.valid] > 0):
            raise HHAEncodingError('valid depths must be strictly positive')

    @classmethod
    def from_array(cls, values):
        """Pixels with zero, negative or non-finite depth are invalid"""
        values = np.asarray(values, dtype=np.float64)
        valid = np.isfinite(values) & (values > 0)
        return cls(np.where(valid, values, 0.0), valid)

    @property
    def shape(self):
        return self.values.shape

    def scaled(self, factor: float):
        return DepthMap(self.values * factor, self.valid.copy())


def _normalize_valid(channel: np.ndarray, valid: np.ndarray, name: str) -> np.ndarray:
    """Min-max normalize over valid pixels; a constant channel becomes all zeros, invalid pixels are 0"""
    out = np.zeros(channel.shape, dtype=np.float64)
    values = channel[valid]
    if values.max() == values.min():
        logger.warning('%s channel has zero range over valid pixels, encoding it as zeros', name)
    out[valid] = np.clip(preprocessing.minmax_scale(values.reshape(-1, 1)).ravel(), 0.0, 1.0)
    return out


def _require_valid(d: DepthMap):
    if not d.valid.any():
        raise HHAEncodingError('depth map has no valid pixels, there is no normalization range')


def depth_to_disparity(d: DepthMap) -> np.ndarray:
    _require_valid(d)
    disparity = np.zeros(d.shape, dtype=np.float64)
    disparity[d.valid] = 1.0 / d.values[d.valid]
    return _normalize_valid(disparity, d.valid, 'disparity')


def back_project(d: DepthMap, k: CameraIntrinsics) -> np.ndarray:
    """3-D points (height, width, 3) in the y-up camera frame"""
    rows, cols = np.indices(d.shape, dtype=np.float64)
    z = d.values
    x = (cols - k.cx) * z / k.fx
    y = (k.cy - rows) * z / k.fy
    return np.stack([x, y, z], axis=-1)


def estimate_normals(d: DepthMap, k: CameraIntrinsics):
    """Unit surface normals from central-difference tangents, oriented toward the camera.

    Returns (normals (height, width, 3), valid (height, width)). A pixel has a normal only when it and
    its four direct neighbours carry valid depth, so the image border never does.
    """
    points = back_project(d, k)
    normals = np.zeros(points.shape, dtype=np.float64)
    valid = np.zeros(d.shape, dtype=bool)
    if d.shape[0] < 3 or d.shape[1] < 3:
        return normals, valid

    tangent_u = points[1:-1, 2:] - points[1:-1, :-2]
    tangent_v = points[2:, 1:-1] - points[:-2, 1:-1]
    cross = np.cross(tangent_u, tangent_v)
    length = np.linalg.norm(cross, axis=-1)

    m = d.valid
    neighbourhood = m[1:-1, 1:-1] & m[1:-1, 2:] & m[1:-1, :-2] & m[2:, 1:-1] & m[:-2, 1:-1]
    interior_valid = neighbourhood & (length > 0)
    unit = np.where(interior_valid[..., None], cross / np.where(length > 0, length, 1.0)[..., None], 0.0)

    # the camera sits at the origin: flip normals pointing away from it
    facing_away = np.sum(unit * points[1:-1, 1:-1], axis=-1) > 0
    unit[facing_away] *= -1.0

    normals[1:-1, 1:-1] = unit
    valid[1:-1, 1:-1] = interior_valid
    return normals, valid


def height_above_ground(d: DepthMap, k: CameraIntrinsics) -> np.ndarray:
    heights = back_project(d, k)[..., 1]
    return _normalize_valid(heights, d.valid, 'height')


def angle_with_gravity(d: DepthMap, k: CameraIntrinsics) -> np.ndarray:
    """Angle between the normal and gravity-up, mapped from [0, 180] degrees to [0, 1]; 0 where there is no normal"""
    normals, valid = estimate_normals(d, k)
    cosine = np.clip(normals @ GRAVITY_UP, -1.0, 1.0)
    angle = np.degrees(np.arccos(cosine)) / 180.0
    return np.where(valid, angle, 0.0)


def encode_hha(d: DepthMap, k: CameraIntrinsics) -> np.ndarray:
    """(height, width, 3) array in [0, 1]; invalid pixels are 0 in all channels"""
    _require_valid(d)
    hha = np.stack([depth_to_disparity(d), height_above_ground(d, k), angle_with_gravity(d, k)], axis=-1)
    hha[~d.valid] = 0.0
    return hha
