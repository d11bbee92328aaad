# SPDX-License-Identifier: MIT
#
"""Checkpoint archive readable without this code base.

A checkpoint is a zip archive in the `.npz` layout:

- `<path>.npy` for every parameter and normalization buffer, keyed by its canonical path
  (e.g. `encoder.rgb.stage2.block1.conv1.weight`), little-endian float32 in NPY format 1.0;
- `momentum.<path>.npy` for the SGD momentum buffer of a parameter, when one exists;
- `__manifest__.json` with the format version, the ModelConfig, the seed, the step and free-form extras.

Members are stored uncompressed with a fixed timestamp, so identical states give identical bytes.
"""
import io
import json
import zipfile
from dataclasses import dataclass, field

import numpy as np
import torch

from model.config import ModelConfig
from model.net import FSFNet
from utils.custom_logging import logger

FORMAT_VERSION = 1
MANIFEST = '__manifest__.json'
MOMENTUM_PREFIX = 'momentum.'
DTYPE = np.dtype('<f4')
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)
# integer bookkeeping of batch normalization, not part of the model state
_SKIPPED_BUFFERS = ('num_batches_tracked',)


class CheckpointError(Exception):
    """Raised for unreadable archives and for manifests that disagree with the requested configuration"""


@dataclass
class Checkpoint:
    cfg: ModelConfig
    seed: int
    step: int
    tensors: dict  # canonical path -> float32 array
    momentum: dict = field(default_factory=dict)  # canonical parameter path -> float32 array
    extra: dict = field(default_factory=dict)

    def build_model(self) -> FSFNet:
        model = FSFNet(self.cfg)
        restore_model(self, model)
        return model


def _model_tensors(model: torch.nn.Module) -> dict:
    return {path: tensor for path, tensor in model.state_dict().items() if path.rsplit('.', 1)[-1] not in _SKIPPED_BUFFERS}


def _write_member(archive: zipfile.ZipFile, name: str, payload: bytes):
    info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    archive.writestr(info, payload)


def _npy_bytes(tensor: torch.Tensor) -> bytes:
    buffer = io.BytesIO()
    np.lib.format.write_array(buffer, np.ascontiguousarray(tensor.detach().cpu().numpy().astype(DTYPE)), version=(1, 0), allow_pickle=False)
    return buffer.getvalue()


def save_checkpoint(path, model: FSFNet, optimizer: torch.optim.Optimizer = None, seed: int = 0, step: int = 0, extra: dict = None):
    names = {id(p): name for name, p in model.named_parameters()}
    momentum = {}
    if optimizer is not None:
        for group in optimizer.param_groups:
            for p in group['params']:
                buffer = optimizer.state.get(p, {}).get('momentum_buffer')
                if buffer is not None:
                    momentum[names[id(p)]] = buffer
    manifest = {'format_version': FORMAT_VERSION, 'model': model.cfg.to_dict(), 'seed': int(seed), 'step': int(step), 'extra': extra or {}}

    with zipfile.ZipFile(path, 'w') as archive:
        for name, tensor in _model_tensors(model).items():
            _write_member(archive, f'{name}.npy', _npy_bytes(tensor))
        for name in sorted(momentum):
            _write_member(archive, f'{MOMENTUM_PREFIX}{name}.npy', _npy_bytes(momentum[name]))
        _write_member(archive, MANIFEST, json.dumps(manifest, sort_keys=True, indent=2).encode('utf-8'))
    logger.debug('Saved checkpoint of step %s to %s', step, path)


def load_checkpoint(path, expected: ModelConfig = None) -> Checkpoint:
    try:
        with zipfile.ZipFile(path) as archive:
            manifest = json.loads(archive.read(MANIFEST).decode('utf-8'))
            arrays = {}
            for name in archive.namelist():
                if name.endswith('.npy'):
                    with archive.open(name) as member:
                        arrays[name[:-len('.npy')]] = np.lib.format.read_array(io.BytesIO(member.read()), allow_pickle=False)
    except (OSError, KeyError, ValueError, zipfile.BadZipFile) as e:
        raise CheckpointError(f'cannot read checkpoint {path}: {e}') from e

    if not isinstance(manifest, dict) or manifest.get('format_version') != FORMAT_VERSION:
        raise CheckpointError(f'{path}: unsupported checkpoint manifest or format version')
    try:
        cfg = ModelConfig.from_dict(manifest['model'])
        seed, step = manifest['seed'], manifest['step']
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f'{path}: malformed manifest: {e!r}') from e
    if expected is not None and expected != cfg:
        raise CheckpointError(f'{path}: checkpoint was written for {cfg}, expected {expected}')

    momentum = {name[len(MOMENTUM_PREFIX):]: array for name, array in arrays.items() if name.startswith(MOMENTUM_PREFIX)}
    tensors = {name: array for name, array in arrays.items() if not name.startswith(MOMENTUM_PREFIX)}
    return Checkpoint(cfg, seed, step, tensors, momentum, manifest.get('extra', {}))


@torch.no_grad()
def restore_model(checkpoint: Checkpoint, model: FSFNet):
    expected = _model_tensors(model)
    missing = sorted(set(expected) - set(checkpoint.tensors))
    unexpected = sorted(set(checkpoint.tensors) - set(expected))
    if missing or unexpected:
        raise CheckpointError(f'checkpoint does not fit the model: missing {missing[:3]}, unexpected {unexpected[:3]}')
    for name, tensor in expected.items():
        array = checkpoint.tensors[name]
        if tuple(array.shape) != tuple(tensor.shape):
            raise CheckpointError(f'{name}: checkpoint shape {array.shape} differs from model shape {tuple(tensor.shape)}')
        tensor.copy_(torch.from_numpy(array))


def restore_optimizer(checkpoint: Checkpoint, model: FSFNet, optimizer: torch.optim.Optimizer):
    parameters = dict(model.named_parameters())
    for name, array in checkpoint.momentum.items():
        if name not in parameters:
            raise CheckpointError(f'momentum buffer for unknown parameter {name}')
        p = parameters[name]
        optimizer.state[p]['momentum_buffer'] = torch.from_numpy(array).to(dtype=p.dtype, device=p.device).clone()
