"""Keyed, counter-based random streams.

Every stochastic task in the pipeline (shot sampling, parameter draws,
training shuffles, model sampling) pulls its own stream derived from the
master seed plus a descriptive key, so any single task is reproducible in
isolation and independent tasks never share state.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _key_word(part: int | str) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream key ints must be non-negative, got {part}")
        return int(part)
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(master_seed: int, *key: int | str) -> np.random.Generator:
    """Philox generator for (master_seed, key...).

    Keys may mix ints (e.g. ham_id, krylov step) and strings (purpose tags);
    strings are hashed with sha256 so the derivation is stable across runs
    and platforms.
    """
    entropy = [int(master_seed)] + [_key_word(p) for p in key]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
