# SPDX-License-Identifier: MIT
#
"""Test module for the synthetic scene generator"""
import os
import tempfile
import unittest

import numpy as np

from data.dataset import DatasetError, load_dataset
from data.synth import BACKGROUND_CLASS, SceneConfig, class_palette, generate_scenes, materialize_dataset, synth_scene


class TestSynthScene(unittest.TestCase):
    """Test cases for scene generation"""

    def test_deterministic(self):
        cfg = SceneConfig(image_size=32, seed=4)
        a, b = synth_scene(cfg, 7), synth_scene(cfg, 7)
        for field in ('rgb', 'hha', 'labels'):
            self.assertTrue(np.array_equal(getattr(a, field), getattr(b, field)))
        self.assertTrue(np.array_equal(a.depth.values, b.depth.values))

    def test_scenes_differ(self):
        cfg = SceneConfig(image_size=32)
        self.assertFalse(np.array_equal(synth_scene(cfg, 0).rgb, synth_scene(cfg, 1).rgb))

    def test_labels_valid(self):
        cfg = SceneConfig(image_size=32, num_classes=4)
        for sample in generate_scenes(cfg, count=5):
            self.assertTrue(np.isin(sample.labels, np.arange(4)).all())
            self.assertTrue(sample.depth.valid.all())
            self.assertEqual(sample.stem, sample.stem.zfill(5))

    def test_single_color_per_class_without_noise(self):
        cfg = SceneConfig(image_size=32, rgb_noise_sigma=0.0, seed=2)
        sample = synth_scene(cfg, 0)
        palette = class_palette(cfg.num_classes)
        for class_id in np.unique(sample.labels):
            colors = np.unique(sample.rgb[sample.labels == class_id], axis=0)
            self.assertEqual(len(colors), 1)
            self.assertTrue(np.allclose(colors[0], palette[class_id]))

    def test_nearest_shape_wins(self):
        cfg = SceneConfig(image_size=48, min_shapes=4, max_shapes=5, rgb_noise_sigma=0.0)
        for index in range(3):
            sample = synth_scene(cfg, index)
            expected = np.full(sample.extent, BACKGROUND_CLASS)
            expected_depth = sample.depth.values.copy()
            for shape in sorted(sample.shapes, key=lambda s: s.order):
                covered = shape.mask(*sample.extent)
                expected[covered] = shape.class_id
                expected_depth[covered] = shape.depth
            self.assertTrue(np.array_equal(sample.labels, expected))
            self.assertTrue(np.array_equal(sample.depth.values, expected_depth))
            depths = [s.depth for s in sorted(sample.shapes, key=lambda s: s.order)]
            self.assertEqual(depths, sorted(depths, reverse=True))

    def test_shapes_in_front_of_background(self):
        cfg = SceneConfig(image_size=32)
        sample = synth_scene(cfg, 3)
        background = sample.depth.values[sample.labels == BACKGROUND_CLASS]
        foreground = sample.depth.values[sample.labels != BACKGROUND_CLASS]
        if background.size and foreground.size:
            self.assertGreater(background.min(), foreground.max())

    def test_invalid_config(self):
        with self.assertRaises(DatasetError):
            SceneConfig(num_classes=1)
        with self.assertRaises(DatasetError):
            SceneConfig(near_depth=6.0, far_depth=2.0)


class TestMaterializeDataset(unittest.TestCase):
    """Test cases for writing scenes to disk and loading them back"""

    def test_written_scenes_load(self):
        cfg = SceneConfig(image_size=16, count=3)
        with tempfile.TemporaryDirectory() as root:
            stems = materialize_dataset(root, cfg)
            self.assertTrue(os.path.isfile(os.path.join(root, 'intrinsics.json')))
            samples = load_dataset(root)
        self.assertEqual([s.stem for s in samples], stems)
        original = synth_scene(cfg, 1)
        self.assertTrue(np.array_equal(samples[1].labels, original.labels))
        self.assertTrue(np.allclose(samples[1].depth.values, original.depth.values, atol=5e-4))
        self.assertTrue(np.allclose(samples[1].rgb, original.rgb, atol=0.5 / 255 + 1e-9))


if __name__ == '__main__':
    unittest.main()
