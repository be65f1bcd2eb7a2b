"""Counter-based random streams derived from one top-level seed."""

import numpy as np

from .conf import knob


def stream(seed=None, *path):
    """Generator for the stream addressed by ``path`` under ``seed``.

    ``path`` is a tuple of non-negative integers (module tag, block index, ...). The same
    (seed, path) always yields the same Philox stream, whatever thread or process asks.
    """
    sequence = np.random.SeedSequence(knob("SEED", seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(sequence))


def blocks(count, size=None):
    """Split ``range(count)`` into fixed-size ``(index, slice)`` blocks."""
    size = knob("BLOCK_SIZE", size)
    return [(i, slice(start, min(start + size, count))) for i, start in enumerate(range(0, count, size))]


# module tags for stream paths
GEOMETRY, KERNELS, BOLTZMANN, DYSON, WIGNER, DIAGRAMS = range(1, 7)
