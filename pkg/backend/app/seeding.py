"""Seed derivation — every random stream is keyed by (base seed, *keys).

Keys make dataset content and fold results independent of iteration order
and of how work is split across workers.
"""

from __future__ import annotations

import random
from contextlib import contextmanager

import numpy as np
import torch


def _seed_sequence(seed: int, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(_seed_sequence(seed, *keys))


def derive_seed(seed: int, *keys: int) -> int:
    """A 31-bit integer seed for libraries that only accept ints."""
    return int(_seed_sequence(seed, *keys).generate_state(1, dtype=np.uint32)[0] & 0x7FFFFFFF)


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)


def torch_generator(seed: int) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(seed)
    return g


@contextmanager
def single_threaded():
    """Run torch CPU kernels on one intra-op thread, restoring the previous count afterwards.

    Reduction order then no longer depends on how many folds run side by side.
    """
    previous = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        yield
    finally:
        torch.set_num_threads(previous)
