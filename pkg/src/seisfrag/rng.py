"""Deterministic random-stream derivation.

Every stochastic component draws from its own named stream so that a single
top-level seed reproduces a whole run bit for bit, regardless of execution
order or parallel scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_seed(*keys) -> int:
    """Map a label path like (root_seed, "signal", 42) to a 64-bit seed.

    The derivation is the first 8 bytes (little endian) of the SHA-256 of the
    "/"-joined string form of the keys.
    """
    msg = "/".join(str(k) for k in keys)
    digest = hashlib.sha256(msg.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(*keys) -> np.random.Generator:
    """Independent generator for the given label path."""
    return np.random.default_rng(stream_seed(*keys))
