"""Counter-based random streams keyed by (master_seed, replica_id, step_index).

Every draw made for a given replica at a given time step comes from a Philox
generator whose key is ``(master_seed, replica_id)`` and whose counter starts
at a block reserved for that step, so results never depend on the order in
which replicas or steps are scheduled.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _key(master_seed: int, replica_id: int) -> np.ndarray:
    return np.array([master_seed & _MASK64, replica_id & _MASK64], dtype=np.uint64)


def _counter(step: int) -> np.ndarray:
    # the second counter word separates steps; the first advances within a step
    return np.array([0, step & _MASK64, 0, 0], dtype=np.uint64)


def stream(master_seed: int, replica_id: int, step: int = 0) -> np.random.Generator:
    """Fresh generator for one (master_seed, replica_id, step) key."""
    bitgen = np.random.Philox(key=_key(master_seed, replica_id), counter=_counter(step))
    return np.random.Generator(bitgen)


class StreamFactory:
    """Re-keys a single Philox instance; same draws as `stream` at a fraction of the cost.

    Not thread-safe: use one factory per worker.
    """

    def __init__(self):
        self._bitgen = np.random.Philox(key=_key(0, 0))
        self._gen = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state

    def __call__(self, master_seed: int, replica_id: int, step: int = 0) -> np.random.Generator:
        st = self._state
        st["state"]["key"][:] = _key(master_seed, replica_id)
        st["state"]["counter"][:] = _counter(step)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bitgen.state = st
        return self._gen


def sub_seed(master_seed: int, *labels: int) -> np.random.SeedSequence:
    """Deterministic child seed for auxiliary work (bootstrap, QMC scrambles)."""
    return np.random.SeedSequence([master_seed & _MASK64, *[int(x) & _MASK64 for x in labels]])
