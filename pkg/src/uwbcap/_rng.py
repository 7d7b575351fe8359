"""Seed derivation.

Every stochastic draw gets its own generator, derived from
``(master seed, purpose label, index)``. Results therefore do not depend on
the order in which draws are executed.
"""

import zlib

import numpy as np


def _label_key(label):
    return zlib.crc32(label.encode("utf-8"))


def seed_sequence(seed, label="", index=0):
    """Child ``SeedSequence`` for a purpose label and an index."""
    if isinstance(seed, np.random.SeedSequence):
        base = seed
        return np.random.SeedSequence(
            entropy=base.entropy,
            spawn_key=tuple(base.spawn_key) + (_label_key(label), int(index)),
        )
    if seed is None:
        raise ValueError("a deterministic seed is required")
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.SeedSequence(entropy=seed, spawn_key=(_label_key(label), int(index)))


def make_rng(seed, label="", index=0):
    """``numpy.random.Generator`` for ``(seed, label, index)``."""
    return np.random.default_rng(seed_sequence(seed, label, index))
