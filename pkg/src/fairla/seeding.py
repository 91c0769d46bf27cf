"""Seed derivation.

A single root seed fans out into independent streams keyed by a component
name and integer indices, e.g. ``derive_seed(7, "campaign", run)``.  String
keys are hashed with SHA-256 (first 4 bytes, big endian) so the derivation is
stable across processes and Python versions; integer keys are used as-is.  The
combined key becomes the ``spawn_key`` of a :class:`numpy.random.SeedSequence`
whose entropy is the root seed.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _key(part: str | int) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"seed key indices must be nonnegative, got {part}")
        return int(part)
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def seed_sequence(root: int, *keys: str | int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(root), spawn_key=tuple(_key(k) for k in keys))


def derive_seed(root: int, *keys: str | int) -> int:
    """Return a 63-bit integer seed for the stream named by ``keys``."""
    state = seed_sequence(root, *keys).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & ((1 << 63) - 1)


def rng(root: int, *keys: str | int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(root, *keys))
