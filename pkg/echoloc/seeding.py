"""Deterministic sub-seed derivation from a single root seed."""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root_seed: int, *labels: str | int) -> int:
    """Hash ``root_seed`` and ``labels`` into an unsigned 64-bit seed.

    The derivation is ``sha256("root|label1|label2|...")`` truncated to the
    first eight bytes (big-endian), so it is stable across platforms and
    Python versions.
    """
    text = "|".join([str(int(root_seed))] + [str(label) for label in labels])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(root_seed: int, *labels: str | int) -> np.random.Generator:
    """Counter-based generator keyed by ``(root_seed, labels)``."""
    return np.random.Generator(np.random.Philox(key=derive_seed(root_seed, *labels)))
