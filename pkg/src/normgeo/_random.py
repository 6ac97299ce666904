"""Seed plumbing: one integer seed fans out into named, independent sub-streams."""

from __future__ import annotations

import zlib

import numpy as np


def derive_seed(seed: int, *names: str) -> int:
    """Deterministic child seed for the sub-stream ``names`` of ``seed``.

    Streams are keyed by name rather than by draw order, so adding a new
    task never perturbs the numbers an existing task sees.
    """
    entropy = [int(seed) & 0xFFFFFFFF] + [zlib.crc32(n.encode()) for n in names]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0] >> 1)


def substream(seed: int, *names: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *names))
