"""Reproducible random streams.

Every stream is a NumPy ``Philox`` (4x64, counter-based) bit generator whose
key is derived by ``SeedSequence(entropy=seed, spawn_key=(unit, block))``:

* ``seed`` is the experiment seed (64-bit unsigned);
* ``unit`` is the work-unit index.  Batched Monte Carlo experiments split
  replications into consecutive batches of :data:`BATCH_SIZE`; batch ``u``
  holds replications ``u * BATCH_SIZE .. (u + 1) * BATCH_SIZE - 1`` and is
  drawn from unit ``u``.  Single draws (``draw_sample``,
  ``draw_poissonized``) use their ``replication`` argument as the unit;
* ``block`` separates independent purposes within a unit (see the
  ``BLOCK_*`` constants).

Because a batch is the smallest schedulable unit and its stream depends only
on ``(seed, unit, block)``, results do not depend on how batches are spread
over workers.  The keying scheme and the constants below are part of the
reproducibility contract and must not change between versions.
"""

from __future__ import annotations

import numpy as np

BATCH_SIZE = 1024

BLOCK_SINGLE_MULTINOMIAL = 0
BLOCK_SINGLE_POISSON = 1
BLOCK_BATCH_MULTINOMIAL = 2
BLOCK_COUPLING = 3

UINT64_MAX = 2**64 - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not (0 <= seed <= UINT64_MAX):
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(seed: int, unit: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=(int(unit), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def batches(reps: int, batch_size: int = BATCH_SIZE):
    """Yield ``(unit, start, stop)`` replication ranges."""
    for unit, start in enumerate(range(0, reps, batch_size)):
        yield unit, start, min(start + batch_size, reps)
