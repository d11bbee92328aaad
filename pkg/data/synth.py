# SPDX-License-Identifier: MIT
#
"""Procedural desk-scale RGB-D scenes with exact labels.

A scene is a tilted background plane (class 0) in front of which axis-aligned rectangles and ellipses
are placed at constant depth. The class of a shape fixes its base color and its depth band, so both
modalities carry class information. Shapes are painted far to near, the nearer shape wins.
"""
import os
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from matplotlib import colormaps

from data import png
from data.dataset import RgbdSample, RGB_DIR, DEPTH_DIR, LABEL_DIR, HHA_DIR, INTRINSICS_FILE, DatasetError
from hha.encoding import CameraIntrinsics, DepthMap, encode_hha
from utils.custom_logging import logger

BACKGROUND_CLASS = 0
BACKGROUND_TILT_DEGREES = 30.0
SHAPE_KINDS = ('rectangle', 'ellipse')
# shapes stay in front of the background, whose closest point lies at far_depth
SHAPE_DEPTH_LIMIT = 0.9


@dataclass(frozen=True)
class SceneConfig:
    image_size: int = 64
    num_classes: int = 6
    min_shapes: int = 2
    max_shapes: int = 5
    near_depth: float = 1.0
    far_depth: float = 6.0
    rgb_noise_sigma: float = 0.03
    seed: int = 0
    count: int = 80

    def __post_init__(self):
        if self.num_classes < 2:
            raise DatasetError(f'a scene needs at least 2 classes, got {self.num_classes}')
        if not 0 < self.near_depth < self.far_depth * SHAPE_DEPTH_LIMIT:
            raise DatasetError(f'depth range must be positive and ordered, got ({self.near_depth}, {self.far_depth})')
        if not 0 <= self.min_shapes <= self.max_shapes:
            raise DatasetError(f'invalid shapes per scene range ({self.min_shapes}, {self.max_shapes})')
        if self.image_size < 4:
            raise DatasetError(f'image size {self.image_size} is too small')
        if self.rgb_noise_sigma < 0:
            raise DatasetError('rgb_noise_sigma must be non-negative')

    @property
    def shapes_per_scene(self):
        return self.min_shapes, self.max_shapes

    @property
    def depth_range(self):
        return self.near_depth, self.far_depth

    def depth_band(self, class_id: int):
        """Foreground classes 1..K-1 partition [near_depth, far_depth * 0.9] into equal bands, class 1 nearest"""
        width = (self.far_depth * SHAPE_DEPTH_LIMIT - self.near_depth) / (self.num_classes - 1)
        low = self.near_depth + (class_id - 1) * width
        return low, low + width


@dataclass(frozen=True)
class ShapeRecord:
    """One painted shape; `order` is its position in the far-to-near painting sequence"""
    class_id: int
    kind: str
    center: tuple  # (row, col)
    half_extent: tuple  # (rows, cols)
    depth: float
    order: int

    def mask(self, height: int, width: int) -> np.ndarray:
        rows, cols = np.indices((height, width), dtype=np.float64)
        dr = (rows - self.center[0]) / self.half_extent[0]
        dc = (cols - self.center[1]) / self.half_extent[1]
        if self.kind == 'rectangle':
            return (np.abs(dr) <= 1.0) & (np.abs(dc) <= 1.0)
        return dr ** 2 + dc ** 2 <= 1.0


def class_palette(num_classes: int) -> np.ndarray:
    """(num_classes, 3) base colors taken from matplotlib's qualitative maps"""
    cmap = colormaps['tab10'] if num_classes <= 10 else colormaps['tab20']
    return np.asarray(cmap(np.arange(num_classes) % cmap.N))[:, :3]


def background_depth(size: int, far_depth: float, k: CameraIntrinsics) -> np.ndarray:
    """Depth of a plane tilted back around the x axis whose closest point lies at far_depth"""
    tilt = np.radians(BACKGROUND_TILT_DEGREES)
    rows = np.arange(size, dtype=np.float64)[:, None]
    # the ray through pixel (v, u) meets the plane at Z proportional to 1 / (cos(t) - sin(t) * y_ray)
    denominator = np.cos(tilt) - np.sin(tilt) * (k.cy - rows) / k.fy
    depth = far_depth * denominator.max() / denominator
    return np.broadcast_to(depth, (size, size)).copy()


def _draw_shapes(cfg: SceneConfig, rng: np.random.Generator):
    count = int(rng.integers(cfg.min_shapes, cfg.max_shapes + 1))
    drafts = []
    for _ in range(count):
        class_id = int(rng.integers(1, cfg.num_classes))
        kind = SHAPE_KINDS[int(rng.integers(0, len(SHAPE_KINDS)))]
        half_extent = tuple(float(h) for h in rng.uniform(0.1 * cfg.image_size, 0.3 * cfg.image_size, size=2))
        center = tuple(float(c) for c in rng.uniform(0, cfg.image_size - 1, size=2))
        low, high = cfg.depth_band(class_id)
        drafts.append((float(rng.uniform(low, high)), class_id, kind, center, half_extent))
    # far to near; ties keep draw order
    drafts = sorted(enumerate(drafts), key=lambda item: (-item[1][0], item[0]))
    return tuple(ShapeRecord(class_id, kind, center, half_extent, depth, order)
                 for order, (_, (depth, class_id, kind, center, half_extent)) in enumerate(drafts))


def synth_scene(cfg: SceneConfig, index: int) -> RgbdSample:
    """Deterministic function of (cfg.seed, index)"""
    rng = np.random.default_rng([cfg.seed, index])
    size = cfg.image_size
    camera = CameraIntrinsics.for_image(size)
    palette = class_palette(cfg.num_classes)

    depth = background_depth(size, cfg.far_depth, camera)
    labels = np.full((size, size), BACKGROUND_CLASS, dtype=np.int64)
    shapes = _draw_shapes(cfg, rng)
    for shape in shapes:
        covered = shape.mask(size, size)
        depth[covered] = shape.depth
        labels[covered] = shape.class_id

    rgb = palette[labels]
    if cfg.rgb_noise_sigma > 0:
        rgb = np.clip(rgb + rng.normal(0.0, cfg.rgb_noise_sigma, size=rgb.shape), 0.0, 1.0)

    depth_map = DepthMap.from_array(depth)
    return RgbdSample(rgb, depth_map, encode_hha(depth_map, camera), labels, stem=f'{index:05d}', shapes=shapes)


def generate_scenes(cfg: SceneConfig, count: int = None, start: int = 0, n_jobs: int = 1) -> list:
    """Scenes start .. start+count-1 in index order, whatever the number of workers"""
    count = cfg.count if count is None else count
    return Parallel(n_jobs=n_jobs)(delayed(synth_scene)(cfg, index) for index in range(start, start + count))


def _write_scene(out_dir, cfg: SceneConfig, index: int) -> str:
    sample = synth_scene(cfg, index)
    png.write_image_png(os.path.join(out_dir, RGB_DIR, f'{sample.stem}.png'), sample.rgb)
    png.write_depth_png(os.path.join(out_dir, DEPTH_DIR, f'{sample.stem}.png'), sample.depth)
    png.write_label_png(os.path.join(out_dir, LABEL_DIR, f'{sample.stem}.png'), sample.labels)
    png.write_image_png(os.path.join(out_dir, HHA_DIR, f'{sample.stem}.png'), sample.hha)
    return sample.stem


def materialize_dataset(out_dir, cfg: SceneConfig, count: int = None, n_jobs: int = 1) -> list:
    """Write `count` scenes in the rgb/ depth/ label/ hha/ layout read by load_dataset, plus intrinsics.json"""
    count = cfg.count if count is None else count
    for directory in (RGB_DIR, DEPTH_DIR, LABEL_DIR, HHA_DIR):
        os.makedirs(os.path.join(out_dir, directory), exist_ok=True)
    CameraIntrinsics.for_image(cfg.image_size).save(os.path.join(out_dir, INTRINSICS_FILE))
    stems = Parallel(n_jobs=n_jobs)(delayed(_write_scene)(out_dir, cfg, index) for index in range(count))
    logger.info('Wrote %s synthetic scenes (%sx%s, %s classes, seed %s) to %s', count, cfg.image_size, cfg.image_size, cfg.num_classes,
                cfg.seed, out_dir)
    return stems
