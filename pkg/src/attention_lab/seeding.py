"""
Named random streams

All randomness flows from one integer seed. Each consumer asks for a stream by
name (e.g. "layer3", "hash", "head2") and gets an independent generator, so
adding a consumer never shifts the numbers another one sees.
"""

import hashlib
from typing import Union

import numpy as np

Name = Union[str, int]


def _name_key(name: Name) -> int:
    digest = hashlib.md5(str(name).encode("utf-8")).hexdigest()
    return int(digest[:8], 16)


def derive_seed(seed: int, *names: Name) -> int:
    """Derive a 32-bit sub-seed for the stream `seed/names[0]/names[1]/...`"""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_name_key(n) for n in names))
    return int(sequence.generate_state(1)[0])


def make_rng(seed: int, *names: Name) -> np.random.Generator:
    """Generator for a named stream"""
    return np.random.default_rng(derive_seed(seed, *names))
