"""Seeded random streams.

Every stream is a Philox (counter-based) generator keyed by a numpy
``SeedSequence`` whose entropy is the 64-bit experiment seed and whose spawn
key is the tuple of path components, each mapped to an unsigned 32-bit word:

* integers are reduced modulo 2**32;
* strings are hashed with SHA-256 and the first four bytes read big-endian.

An experiment derives ``substream(seed, point_key, trial, phase, ...)`` where
``point_key`` is the canonical label of a sweep point (for example
``"random|p=0.25"``), ``trial`` is the trial index and ``phase`` names what the
stream is used for (``"deploy"`` or ``"circuits"`` plus the policy name).
Keying on the point label rather than its grid position keeps a point's values
unchanged when other points are added or the grid is reordered.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np

SEED_ENV = "PARTEETOR_SEED"
MASK64 = 2**64 - 1


def key_word(component: int | str) -> int:
    if isinstance(component, str):
        return int.from_bytes(hashlib.sha256(component.encode("utf-8")).digest()[:4], "big")
    return int(component) % 2**32


def substream(seed: int, *path: int | str) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed) & MASK64, spawn_key=tuple(key_word(c) for c in path))
    return np.random.Generator(np.random.Philox(seq))


def make_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    """Accept a ready generator, an integer seed, or ``None`` for fresh entropy."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.Generator(np.random.Philox())
    return substream(seed)


def default_seed(fallback: int = 0) -> int:
    value = os.environ.get(SEED_ENV)
    if value is None or not value.strip():
        return fallback
    return int(value, 0)
