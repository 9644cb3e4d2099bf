"""Counter-based random streams keyed by ``(seed, stream index)``.

Each Monte Carlo chunk owns one Philox stream, so results do not depend on
how chunks are spread over workers.
"""

import numpy as np

_UINT64 = (1 << 64) - 1
# reserved stream for per-scenario draws such as the precoder
SCENARIO_STREAM = _UINT64


def stream(seed: int, index: int) -> np.random.Generator:
    if not 0 <= seed <= _UINT64 or not 0 <= index <= _UINT64:
        raise ValueError("seed and stream index must fit in 64 unsigned bits")
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def scenario_stream(seed: int) -> np.random.Generator:
    return stream(seed, SCENARIO_STREAM)
