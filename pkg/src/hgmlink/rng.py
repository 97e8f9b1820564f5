"""Named random sub-streams derived from one seed.

Each stage draws from its own generator keyed by ``(seed, crc32(name))``,
so adding draws to one stage never shifts another stage's numbers.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stage_rng", "stage_seed"]


def stage_seed(seed: int, name: str) -> list[int]:
    return [int(seed), zlib.crc32(name.encode("utf-8"))]


def stage_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(stage_seed(seed, name))
