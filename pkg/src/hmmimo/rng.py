"""Counter-based random streams keyed on (master seed, drop index, stage)."""

import numpy as np

STAGES = {
    "topology": 0,
    "shadowing": 1,
    "fading": 2,
    "pilots": 3,
    "estimation": 4,
    "oracle": 5,
}


def stream(seed: int, drop: int, stage: str) -> np.random.Generator:
    """Independent Philox stream for one stage of one drop.

    The stream depends only on its key, so drops can run in any order or in parallel.
    """
    key = (int(drop), STAGES[stage])
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
