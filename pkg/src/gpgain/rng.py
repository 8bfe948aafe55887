"""Deterministic random-stream derivation.

All randomness in the package flows through named substreams of a master
seed.  A substream is addressed by the master seed plus a tuple of string
labels, e.g. ``substream(master, "seed3", "noise")``; the labels are hashed
to the spawn key of a ``numpy.random.SeedSequence``, so every (experiment,
seed, purpose) triple maps to an independent, platform-stable PCG64 stream.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(master_seed: int, *labels: str) -> np.random.Generator:
    """Return the PCG64 generator for a named child stream of ``master_seed``."""
    key = tuple(zlib.crc32(lab.encode("utf-8")) for lab in labels)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))
