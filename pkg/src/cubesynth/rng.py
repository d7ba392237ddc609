"""Deterministic random streams.

All randomness flows from a single 64-bit master seed through named
sub-streams of a counter-based Philox generator:

    stream 0   -- reduced-space slot draw (draw_reduced_space)
    stream 1   -- synthetic-record sampling (sample_categorical)
    stream i+1 -- sub-seed for conditioning attempt i (i = 1, 2, ...)

A conditioning attempt receives a fresh 64-bit sub-seed derived from
(master seed, attempt index) and draws its slots on stream 0 of that
sub-seed.  Identical seeds reproduce identical draws bit-for-bit on one
platform and numpy version.
"""

from __future__ import annotations

import numpy as np

SPACE_STREAM = 0
SAMPLING_STREAM = 1


def stream_generator(seed: int, stream: int) -> np.random.Generator:
    """Philox generator on the given sub-stream of a master seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def attempt_seed(seed: int, attempt: int) -> int:
    """64-bit sub-seed for conditioning attempt ``attempt`` (1-based)."""
    if attempt < 1:
        raise ValueError("attempt index is 1-based")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(attempt) + 1,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
