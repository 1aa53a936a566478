"""Deterministic seed derivation for reproducible Monte Carlo streams."""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15  # splitmix64 increment


def splitmix64(state: int) -> int:
    """Avalanche finalizer of the splitmix64 generator."""
    z = state & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master_seed: int, index: int) -> int:
    """Child seed number `index` under `master_seed`.

    Equals the (index+1)-th output of a splitmix64 sequence seeded with
    master_seed, so distinct indices give statistically independent seeds
    and the derivation is independent of how work is batched or scheduled.
    """
    if index < 0:
        raise ValueError(f"seed index must be nonnegative, got {index}")
    return splitmix64((master_seed + (index + 1) * _GOLDEN) & _MASK64)


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed & _MASK64))
