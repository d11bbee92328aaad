# SPDX-License-Identifier: MIT
#
"""Test module for the differentiable operators"""
import math
import unittest

import torch

from backend import ops
from backend.ops import BackendShapeError


def _identity_kernel(channels, dtype=torch.float64):
    return torch.eye(channels, dtype=dtype).view(channels, channels, 1, 1)


class TestConv2d(unittest.TestCase):
    """Test cases for conv2d"""

    def test_identity_kernel(self):
        x = torch.randn(2, 5, 6, 7, dtype=torch.float64)
        y = ops.conv2d(x, _identity_kernel(5), torch.zeros(5, dtype=torch.float64))
        self.assertTrue(torch.equal(x, y))

    def test_zero_weights(self):
        x = torch.randn(1, 3, 4, 4)
        y = ops.conv2d(x, torch.zeros(2, 3, 3, 3), torch.zeros(2), padding=1)
        self.assertTrue(torch.equal(y, torch.zeros(1, 2, 4, 4)))

    def test_all_ones_center(self):
        y = ops.conv2d(torch.ones(1, 1, 3, 3), torch.ones(1, 1, 3, 3), torch.zeros(1), padding=1)
        self.assertEqual(y[0, 0, 1, 1].item(), 9.0)
        self.assertEqual(y[0, 0, 0, 0].item(), 4.0)

    def test_output_extent(self):
        y = ops.conv2d(torch.randn(1, 3, 16, 16), torch.randn(8, 3, 3, 3), stride=2, padding=1)
        self.assertEqual(tuple(y.shape), (1, 8, 8, 8))

    def test_linear_in_weights(self):
        generator = torch.Generator().manual_seed(3)
        x = torch.randn(1, 4, 5, 5, generator=generator, dtype=torch.float64)
        w1 = torch.randn(3, 4, 3, 3, generator=generator, dtype=torch.float64)
        w2 = torch.randn(3, 4, 3, 3, generator=generator, dtype=torch.float64)
        left = ops.conv2d(x, 0.7 * w1 - 1.3 * w2, padding=1)
        right = 0.7 * ops.conv2d(x, w1, padding=1) - 1.3 * ops.conv2d(x, w2, padding=1)
        self.assertTrue(torch.allclose(left, right, atol=1e-12))

    def test_channel_mismatch(self):
        with self.assertRaises(BackendShapeError) as context:
            ops.conv2d(torch.randn(1, 3, 4, 4), torch.randn(2, 4, 1, 1))
        self.assertIn('channel mismatch', str(context.exception))

    def test_non_positive_stride(self):
        with self.assertRaises(BackendShapeError):
            ops.conv2d(torch.randn(1, 3, 4, 4), torch.randn(2, 3, 1, 1), stride=0)

    def test_negative_padding(self):
        with self.assertRaises(BackendShapeError):
            ops.conv2d(torch.randn(1, 3, 4, 4), torch.randn(2, 3, 1, 1), padding=-1)


class TestResampling(unittest.TestCase):
    """Test cases for downsample and upsample"""

    def test_downsample_identity(self):
        x = torch.randn(1, 2, 4, 4)
        self.assertTrue(torch.equal(ops.downsample(x, 1), x))

    def test_downsample_constant(self):
        y = ops.downsample(torch.full((1, 3, 4, 4), 2.5), 2)
        self.assertEqual(tuple(y.shape), (1, 3, 2, 2))
        self.assertTrue(torch.equal(y, torch.full((1, 3, 2, 2), 2.5)))

    def test_downsample_window_max(self):
        y = ops.downsample(torch.tensor([[[[1.0, 2.0], [3.0, 4.0]]]]), 2)
        self.assertEqual(y.item(), 4.0)

    def test_downsample_not_divisible(self):
        with self.assertRaises(BackendShapeError):
            ops.downsample(torch.randn(1, 1, 5, 4), 2)

    def test_upsample_identity(self):
        x = torch.randn(1, 2, 3, 3)
        for mode in ops.UPSAMPLE_MODES:
            self.assertTrue(torch.equal(ops.upsample(x, 1, mode), x))

    def test_upsample_nearest_single_value(self):
        y = ops.upsample(torch.full((1, 1, 1, 1), 7.0), 4, 'nearest')
        self.assertTrue(torch.equal(y, torch.full((1, 1, 4, 4), 7.0)))

    def test_upsample_nearest_duplicates_columns(self):
        y = ops.upsample(torch.tensor([[[[0.0, 1.0], [0.0, 1.0]]]]), 2, 'nearest')
        expected = torch.tensor([[0.0, 0.0, 1.0, 1.0]] * 4)
        self.assertTrue(torch.equal(y[0, 0], expected))

    def test_upsample_bilinear_half_pixel(self):
        y = ops.upsample(torch.tensor([[[[0.0, 1.0]]]]), 2, 'bilinear')
        # half-pixel centers: outputs sample at 0.25-pixel offsets and clamp at the borders
        self.assertTrue(torch.allclose(y[0, 0, 0], torch.tensor([0.0, 0.25, 0.75, 1.0])))

    def test_upsample_bad_factor(self):
        with self.assertRaises(BackendShapeError):
            ops.upsample(torch.randn(1, 1, 2, 2), 0)


class TestSigmoid(unittest.TestCase):
    """Test cases for sigmoid"""

    def test_values(self):
        self.assertEqual(ops.sigmoid(torch.tensor(0.0)).item(), 0.5)
        self.assertGreater(ops.sigmoid(torch.tensor(20.0, dtype=torch.float64)).item(), 0.999999)
        self.assertAlmostEqual(ops.sigmoid(torch.tensor(1.0, dtype=torch.float64)).item(), 1.0 / (1.0 + math.exp(-1.0)), places=12)

    def test_symmetry_and_range(self):
        x = torch.linspace(-30, 30, 601, dtype=torch.float64)
        y = ops.sigmoid(x)
        self.assertTrue(bool(((y > 0) & (y < 1)).all()))
        self.assertTrue(torch.allclose(ops.sigmoid(-x), 1.0 - y, atol=1e-12, rtol=0))
        self.assertTrue(bool((y[1:] >= y[:-1]).all()))


class TestWeightedCrossEntropy(unittest.TestCase):
    """Test cases for the per-layer loss"""

    def test_all_ignored(self):
        logits = torch.randn(1, 3, 2, 2, requires_grad=True)
        labels = torch.full((1, 2, 2), ops.IGNORE_INDEX)
        loss = ops.weighted_cross_entropy(logits, labels, torch.ones(3))
        self.assertEqual(loss.item(), 0.0)
        loss.backward()
        self.assertTrue(torch.equal(logits.grad, torch.zeros_like(logits)))

    def test_saturated(self):
        logits = torch.tensor([-40.0, 40.0, -40.0], dtype=torch.float64).view(1, 3, 1, 1)
        loss = ops.weighted_cross_entropy(logits, torch.tensor([[[1]]]), torch.ones(3, dtype=torch.float64))
        self.assertLess(loss.item(), 1e-10)

    def test_two_class_ln2(self):
        logits = torch.zeros(1, 2, 1, 1, dtype=torch.float64)
        loss = ops.weighted_cross_entropy(logits, torch.tensor([[[0]]]), torch.ones(2, dtype=torch.float64))
        self.assertAlmostEqual(loss.item(), math.log(2.0), places=12)

    def test_unit_weights_match_unweighted(self):
        generator = torch.Generator().manual_seed(0)
        logits = torch.randn(2, 4, 3, 3, generator=generator, dtype=torch.float64)
        labels = torch.randint(0, 4, (2, 3, 3), generator=generator)
        labels[0, 0, 0] = ops.IGNORE_INDEX
        weighted = ops.weighted_cross_entropy(logits, labels, torch.ones(4, dtype=torch.float64))
        plain = torch.nn.functional.cross_entropy(logits, labels, ignore_index=ops.IGNORE_INDEX)
        self.assertAlmostEqual(weighted.item(), plain.item(), delta=1e-12)

    def test_mean_over_pixels_not_weights(self):
        logits = torch.zeros(1, 2, 1, 2, dtype=torch.float64)
        labels = torch.tensor([[[0, 1]]])
        loss = ops.weighted_cross_entropy(logits, labels, torch.tensor([1.0, 3.0], dtype=torch.float64))
        self.assertAlmostEqual(loss.item(), 2.0 * math.log(2.0), places=12)

    def test_label_out_of_range(self):
        with self.assertRaises(BackendShapeError):
            ops.weighted_cross_entropy(torch.zeros(1, 2, 1, 1), torch.tensor([[[2]]]), torch.ones(2))

    def test_negative_ignore_index(self):
        logits = torch.zeros(1, 2, 1, 2, dtype=torch.float64)
        labels = torch.tensor([[[0, -1]]])
        loss = ops.weighted_cross_entropy(logits, labels, torch.ones(2, dtype=torch.float64), ignore_index=-1)
        self.assertAlmostEqual(loss.item(), math.log(2.0), places=12)
        with self.assertRaises(BackendShapeError):
            ops.weighted_cross_entropy(logits, torch.tensor([[[0, -2]]]), torch.ones(2, dtype=torch.float64), ignore_index=-1)


class TestConcatAdd(unittest.TestCase):
    """Test cases for channel concatenation and elementwise addition"""

    def test_concat_channels(self):
        y = ops.concat([torch.zeros(1, 2, 4, 4), torch.ones(1, 3, 4, 4)])
        self.assertEqual(tuple(y.shape), (1, 5, 4, 4))

    def test_concat_extent_mismatch(self):
        with self.assertRaises(BackendShapeError):
            ops.concat([torch.zeros(1, 2, 4, 4), torch.ones(1, 3, 2, 2)])

    def test_add_mismatch(self):
        with self.assertRaises(BackendShapeError):
            ops.add(torch.zeros(1, 2, 4, 4), torch.zeros(1, 3, 4, 4))


if __name__ == '__main__':
    unittest.main()
