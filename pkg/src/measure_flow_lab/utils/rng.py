"""Counter-based random streams keyed by (seed, block) for reproducible Monte Carlo.

Each block of paths owns a Philox generator whose key is derived from
``SeedSequence(seed, spawn_key=(tag, block))``. Draws inside a block happen in a
fixed order (initial states, then per step increments and auxiliary uniforms),
so the counter position of every draw is a function of (path, step) alone and
results do not depend on how blocks are scheduled across threads.

The path-to-block assignment does depend on ``block_size``: the same seed with a
different block size gives a different ensemble. ``scheme_name`` records the
block size so a run can be reproduced exactly.
"""

import numpy as np

SIMULATION_TAG = 0
BOOTSTRAP_TAG = 1
POINTS_TAG = 2
SAMPLING_TAG = 3
REPLICATE_TAG = 4


def stream(seed: int, block: int, tag: int = SIMULATION_TAG) -> np.random.Generator:
    """Philox generator for one (seed, tag, block) key."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(tag), int(block)))
    return np.random.Generator(np.random.Philox(sequence))


def derived_seed(seed: int, *key: int) -> int:
    """Seed of an independent ensemble, keyed by ``key`` under ``seed``."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(REPLICATE_TAG, *(int(k) for k in key)))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def scheme_name(block_size: int) -> str:
    return f"philox4x64/seedseq(seed,block)/block={block_size}"


def block_bounds(n_paths: int, block_size: int) -> list[tuple[int, int]]:
    """Half-open [start, stop) path ranges of each block."""
    return [
        (start, min(start + block_size, n_paths)) for start in range(0, n_paths, block_size)
    ]
