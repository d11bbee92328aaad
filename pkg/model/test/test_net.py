# SPDX-License-Identifier: MIT
#
"""Test module for the complete two-stream network"""
import unittest

import torch

from backend.gradient_check import gradient_check
from data.dataset import IGNORE_LABEL
from model.config import ModelConfig, ModelConfigError
from model.net import FSFNet
from training.config import TrainConfig
from training.loss import pyramid_loss

WIDTHS = (4, 8, 8, 16)


def small_model(seed=0, **kwargs):
    torch.manual_seed(seed)
    return FSFNet(ModelConfig(channel_widths=WIDTHS, **kwargs)).eval()


def random_inputs(size=32, batch=1, seed=1):
    generator = torch.Generator().manual_seed(seed)
    return torch.rand(batch, 3, size, size, generator=generator), torch.rand(batch, 3, size, size, generator=generator)


class TestModelConfig(unittest.TestCase):
    """Test cases for architecture validation"""

    def test_invalid_settings(self):
        for kwargs in ({'num_layers': 3}, {'channel_widths': (4, 8, 8)}, {'num_classes': 1}, {'input_size': 40}):
            with self.assertRaises(ModelConfigError):
                ModelConfig(**kwargs)

    def test_dict_round_trip(self):
        cfg = ModelConfig(channel_widths=WIDTHS, use_dfp=False)
        self.assertEqual(ModelConfig.from_dict(cfg.to_dict()), cfg)


class TestShapes(unittest.TestCase):
    """Test cases for the stride arithmetic of every intermediate"""

    def test_extents(self):
        model = small_model()
        for size in (16, 32, 64):
            rgb, hha = random_inputs(size)
            with torch.no_grad():
                out = model(rgb, hha)
            self.assertEqual(tuple(out.main_logits.shape), (1, 6, size, size))
            self.assertEqual([tuple(s.shape) for s in out.side_logits],
                             [(1, 6, size // 2, size // 2), (1, 6, size // 4, size // 4), (1, 6, size // 8, size // 8)])
            for j, width in enumerate(WIDTHS, start=1):
                expected = (1, width, size // 2 ** j, size // 2 ** j)
                for name in ('rgb', 'hha', 'fuse', 'select_rgb', 'select_hha'):
                    self.assertEqual(tuple(out.intermediates[f'{name}{j}'].shape), expected)
            self.assertEqual(tuple(out.intermediates['dfp_selected3'].shape), (1, WIDTHS[2], size // 8, size // 8))
            self.assertEqual(tuple(out.intermediates['dfp_attention2'].shape), (1, 1, size // 4, size // 4))

    def test_many_classes(self):
        model = small_model(num_classes=40)
        with torch.no_grad():
            out = model(*random_inputs(16))
        self.assertEqual(out.main_logits.shape[1], 40)
        self.assertTrue(all(s.shape[1] == 40 for s in out.side_logits))

    def test_rejected_inputs(self):
        model = small_model()
        rgb, hha = random_inputs(32)
        with self.assertRaises(ModelConfigError):
            model(rgb, hha[:, :, :16, :16])
        with self.assertRaises(ModelConfigError):
            model(rgb[:, :2], hha[:, :2])
        with self.assertRaises(ModelConfigError):
            model(rgb[:, :, :24, :24], hha[:, :, :24, :24])

    def test_predict(self):
        labels = small_model().predict(*random_inputs(16, batch=2))
        self.assertEqual(tuple(labels.shape), (2, 16, 16))
        self.assertTrue(bool(((labels >= 0) & (labels < 6)).all()))


class TestFusionWiring(unittest.TestCase):
    """Test cases for how the fusion branch reads from the modality branches"""

    def test_sum_baseline(self):
        model = small_model(use_scrf=False)
        with torch.no_grad():
            for p in model.encoder.hha.parameters():
                p.zero_()
            rgb, _ = random_inputs(32)
            out = model(rgb, torch.zeros_like(rgb))
        for j in range(1, 5):
            self.assertTrue(torch.equal(out.intermediates[f'fuse{j}'], out.intermediates[f'rgb{j}']))
        self.assertNotIn('select_rgb1', out.intermediates)

    def test_branches_never_written(self):
        scrf, plain = small_model(), small_model(use_scrf=False)
        plain.load_state_dict(scrf.state_dict(), strict=False)
        inputs = random_inputs(32)
        with torch.no_grad():
            a, b = scrf(*inputs), plain(*inputs)
        for j in range(1, 5):
            self.assertTrue(torch.equal(a.intermediates[f'rgb{j}'], b.intermediates[f'rgb{j}']))
            self.assertTrue(torch.equal(a.intermediates[f'hha{j}'], b.intermediates[f'hha{j}']))

    def test_cascade_direction(self):
        model = small_model()
        inputs = random_inputs(32)
        with torch.no_grad():
            before = model(*inputs).intermediates
            for p in model.encoder.fusion['layer1'].parameters():
                p.add_(0.5)
            after = model(*inputs).intermediates
        self.assertFalse(torch.equal(before['fuse4'], after['fuse4']))
        for j in range(1, 5):
            self.assertTrue(torch.equal(before[f'rgb{j}'], after[f'rgb{j}']))
            self.assertTrue(torch.equal(before[f'hha{j}'], after[f'hha{j}']))

    def test_passthrough_dfp_matches_disabled_dfp(self):
        with_dfp, without_dfp = small_model(), small_model(use_dfp=False)
        without_dfp.load_state_dict(with_dfp.state_dict(), strict=False)
        for layer in (2, 3):
            with_dfp.decoder.dfp_module(layer).reset_to_passthrough()
        inputs = random_inputs(32)
        with torch.no_grad():
            a, b = with_dfp(*inputs), without_dfp(*inputs)
        self.assertTrue(torch.allclose(a.main_logits, b.main_logits, atol=1e-6, rtol=0))

    def test_toggles_share_initial_parameters(self):
        full, plain = small_model(seed=5), small_model(seed=5, use_dfp=False)
        plain_state = plain.state_dict()
        for name, tensor in full.state_dict().items():
            if name in plain_state:
                self.assertTrue(torch.equal(tensor, plain_state[name]), name)


class TestTrainingSignal(unittest.TestCase):
    """Test cases for gradients and determinism of the forward pass"""

    def test_no_dead_parameters(self):
        model = small_model()
        rgb, hha = random_inputs(64, batch=2)
        labels = torch.randint(0, 6, (2, 64, 64), generator=torch.Generator().manual_seed(3))
        labels[:, :4] = IGNORE_LABEL
        loss = pyramid_loss(model(rgb, hha), labels, torch.ones(6), TrainConfig()).total
        loss.backward()
        for name, p in model.named_parameters():
            self.assertIsNotNone(p.grad, name)
            self.assertGreater(float(p.grad.abs().sum()), 0.0, name)

    def test_deterministic_forward(self):
        model = small_model()
        inputs = random_inputs(32)
        with torch.no_grad():
            a, b = model(*inputs), model(*inputs)
        self.assertTrue(torch.equal(a.main_logits, b.main_logits))
        for first, second in zip(a.side_logits, b.side_logits):
            self.assertTrue(torch.equal(first, second))

    def test_full_graph_gradient(self):
        torch.manual_seed(0)
        model = FSFNet(ModelConfig(channel_widths=(2, 2, 4, 4), num_classes=3, input_size=16)).double().eval()
        # zero biases and running means leave ReLU inputs on the kink
        generator = torch.Generator().manual_seed(11)
        with torch.no_grad():
            for name, tensor in list(model.named_parameters()) + list(model.named_buffers()):
                if name.endswith('bias') or name.endswith('running_mean'):
                    tensor.add_(0.1 * torch.randn(tensor.shape, generator=generator, dtype=tensor.dtype))
        report = gradient_check(lambda rgb, hha: model(rgb, hha).main_logits, [(1, 3, 16, 16), (1, 3, 16, 16)], seed=7,
                                parameters=dict(model.named_parameters()))
        num_elements = 2 * 3 * 16 * 16 + sum(p.numel() for p in model.parameters())
        self.assertEqual(report.num_checked, num_elements)
        self.assertLess(report.max_relative_error, 1e-4)


if __name__ == '__main__':
    unittest.main()
