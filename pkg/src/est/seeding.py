"""Deterministic seed derivation.

Every source of randomness in the package draws from a named sub-stream of a
single master seed, so runs are reproducible and independent stages (catalog,
users, shuffling, init) do not share streams.
"""

import hashlib

import numpy as np


def substream_seed(seed: int, *purpose) -> int:
    """Derive a 63-bit seed from ``seed`` and a purpose path.

    Uses SHA-256 so the mapping is stable across processes and platforms
    (Python's builtin hash() is salted and unusable here).
    """
    h = hashlib.sha256()
    h.update(str(int(seed)).encode())
    for part in purpose:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF


def rng_for(seed: int, *purpose) -> np.random.Generator:
    """A PCG64 generator seeded from the named sub-stream."""
    return np.random.default_rng(substream_seed(seed, *purpose))
