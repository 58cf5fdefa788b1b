"""Deterministic derived random streams.

Every sampling routine takes an explicit seed. Sub-streams (per trial, per
gradient component, per iteration) are derived from (seed, *path) so that
parallel work units get independent, reproducible generators regardless of
execution order.
"""

from __future__ import annotations

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    # Stable across processes and platforms, unlike hash().
    return int.from_bytes(str(key).encode("utf-8"), "big")


def rng_from(seed: int, *path) -> np.random.Generator:
    """Generator for the stream identified by (seed, *path)."""
    entropy = [_key_to_int(seed)] + [_key_to_int(k) for k in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))
