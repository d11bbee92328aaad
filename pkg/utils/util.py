# SPDX-License-Identifier: MIT
#
"""Provide utility functions used across the lab"""

import hashlib
import random

import numpy as np
import torch


def seed_everything(seed: int):
    """Seed every RNG the training loop touches and force deterministic kernels"""
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)


def stable_hash(*parts) -> int:
    """Platform-independent 32 bit fingerprint of the given parts (Python's hash() is salted per process)"""
    sha256 = hashlib.sha256()
    for part in parts:
        sha256.update(str(part).encode())
        sha256.update(b'\x00')
    return int.from_bytes(sha256.digest()[:4], 'big')


def derive_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def split_by_hash(indices, val_fraction: float, seed: int):
    """Split indices into (train, validation) by a seeded hash; membership of an index never depends on the others"""
    threshold = int(val_fraction * (1 << 32))
    train, val = [], []
    for index in indices:
        (val if stable_hash(seed, index) < threshold else train).append(index)
    return train, val


def read_sql_file(filename, encoding='utf-8') -> str:
    """Read SQL file, remove comments, and return the statements as a string"""
    with open(filename, encoding=encoding) as f:
        file = f.read()
    statements = file.split('\n')
    return '\n'.join(filter(lambda line: not line.startswith('--'), statements))
