"""Keyed random substreams.

Every random draw derives from ``(master_seed, stage, *unit)`` so results do not
depend on how work is scheduled across processes.
"""
from __future__ import annotations

import zlib

import numpy as np


def stage_key(stage: str) -> int:
    return zlib.crc32(stage.encode("utf-8"))


def substream(seed: int, stage: str, *unit: int) -> np.random.Generator:
    """Independent generator for one unit of work inside a stage."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    entropy = [int(seed), stage_key(stage), *(int(u) for u in unit)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def child_seed(seed: int, stage: str, *unit: int) -> int:
    """A 63-bit seed for a nested stage, derived like :func:`substream`."""
    entropy = [int(seed), stage_key(stage), *(int(u) for u in unit)]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0] >> np.uint64(1))
