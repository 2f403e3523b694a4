"""Deterministic named RNG substreams.

Every stochastic component draws from its own substream derived from
(seed, name...). Substreams are independent of each other, so adding or
removing draws in one component never shifts the values another one sees.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, *names: str) -> np.random.Generator:
    """Return a generator keyed by a master seed plus one or more names.

    The same (seed, names) pair always yields the same stream; any change
    to either yields a statistically independent one.
    """
    if not names:
        raise ValueError("at least one substream name is required")
    keys = [zlib.crc32(name.encode("utf-8")) for name in names]
    return np.random.default_rng(np.random.SeedSequence([int(seed), *keys]))
