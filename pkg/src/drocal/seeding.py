"""Seed derivation.

Every random phase gets its own stream derived from the master seed as

    derive_seed(master, *keys) = SeedSequence([master, *keys]).generate_state(1)[0]

so any phase can be replayed on its own without running the ones before it.
"""

import numpy as np

# Fixed phase identifiers; never renumber.
PHASE_E_SAMPLES = 1
PHASE_A_SAMPLES = 2
PHASE_SUBSAMPLE = 3
PHASE_DESIGN = 4
PHASE_OBJECTIVE = 5


def derive_seed(master: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(1)[0])
