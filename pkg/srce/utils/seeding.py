"""
Deterministic random streams.

Every random draw in the toolkit comes from a generator built here, keyed
by a list of integers so that independent streams never overlap.
"""

from typing import Iterable

import numpy as np

from .exceptions import ConfigurationException

_MASK64 = (1 << 64) - 1

# Split stream identifiers mixed into dataset seeds
SPLIT_STREAMS = {
    "train": 0,
    "val": 1,
    "test": 2,
    "autocorrelation": 3,
}


def _entropy(seed: int, keys: Iterable[int]) -> list:
    return [int(seed) & _MASK64] + [int(k) & _MASK64 for k in keys]


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Build a generator for the stream identified by (seed, *keys).

    Any 64-bit integer is a valid seed; negative values wrap modulo 2**64.
    """
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed, keys)))


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a child integer seed for the stream (seed, *keys)."""
    state = np.random.SeedSequence(_entropy(seed, keys)).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def split_stream(split: str) -> int:
    """Return the stream identifier for a dataset split."""
    try:
        return SPLIT_STREAMS[split]
    except KeyError:
        raise ConfigurationException(
            f"Unknown split: {split}",
            details={"split": split, "valid": sorted(SPLIT_STREAMS)}
        )
