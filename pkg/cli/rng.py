"""Seeded random streams.

Every randomized check draws from PCG64 (the permuted congruential generator
with 128-bit state, numpy's default bit generator) so a seed reproduces the
same instances on any platform.
"""
from typing import Optional

import numpy as np
from django.conf import settings

from caputo.exceptions import DomainError

MAX_SEED = 2 ** 64 - 1


def resolve_seed(seed: Optional[int] = None) -> int:
    if seed is None:
        seed = getattr(settings, 'FRACPME_SEED', 42)
    if int(seed) != seed or not 0 <= seed <= MAX_SEED:
        raise DomainError(f'seed must be an unsigned 64-bit integer, got {seed!r}')
    return int(seed)


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(resolve_seed(seed)))
