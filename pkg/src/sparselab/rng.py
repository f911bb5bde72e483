"""Deterministic random stream derivation.

All randomness in the package flows through numpy's Philox generator, a
counter-based, splittable bit generator whose output is fixed by numpy's
stream-compatibility policy and does not depend on the platform.  Derived
streams are keyed by an integer path ``(seed, tag, *indices)`` hashed
through ``numpy.random.SeedSequence``, so per-trial streams are
independent of scheduling order.
"""

from __future__ import annotations

import numpy as np

# Stream tags keep unrelated consumers of the same master seed apart.
TAG_MATRIX = 0
TAG_SIGNAL = 1
TAG_NET = 2
TAG_PROBE = 3
TAG_RUB_MC = 4
TAG_NSP = 5
TAG_CONCENTRATION = 6
TAG_PHASE = 7

_MASK64 = (1 << 64) - 1


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream addressed by ``(seed, *path)``."""
    ss = np.random.SeedSequence([_check_seed(seed), *[int(p) for p in path]])
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """64-bit child seed for the stream addressed by ``(seed, *path)``."""
    ss = np.random.SeedSequence([_check_seed(seed), *[int(p) for p in path]])
    return int(ss.generate_state(1, np.uint64)[0])
