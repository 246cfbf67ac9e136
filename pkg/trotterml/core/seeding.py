"""Seed derivation. Every stochastic step gets its own seed from a master seed."""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *parts: object) -> int:
    """Hash a master seed and a key path into a 63-bit seed.

    The same (master, parts) always gives the same seed, so any subset of
    records can be regenerated without regenerating the rest.
    """
    key = "/".join([str(int(master))] + [str(p) for p in parts])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)


def make_rng(master: int, *parts: object) -> np.random.Generator:
    """Generator seeded from ``derive_seed(master, *parts)``."""
    return np.random.default_rng(derive_seed(master, *parts))
