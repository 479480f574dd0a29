"""Experience tuples and the bounded FIFO replay buffer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class Experience:
    """One per-user transition row.

    Every user of a cell produces one row per step; rows from the same
    step share the full agent state, the joint action index and the
    cell reward, and differ in the per-user command bits and tags. The
    tags never count toward transmission overhead.
    """

    state: np.ndarray       # full agent state (length 4U)
    action_index: int       # joint action of the originating agent
    power_bit: int          # this user's power command bit
    beam_bit: int           # this user's beam command bit
    reward: float           # cell-level reward, repeated across users
    next_state: np.ndarray
    cell: int
    user: int
    step: int


def experience_scalars(users_per_cell: int) -> int:
    """Scalars on the wire per shared experience: two states, the
    action, the reward. Origin tags ride for free."""
    return 2 * (4 * users_per_cell) + 2 + 1


class ReplayBuffer:
    """Ring buffer with strictly oldest-first eviction."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ContractViolation("buffer capacity must be >= 1")
        self.capacity = int(capacity)
        self._items: List[Experience] = []
        self._next = 0  # overwrite position once full
        self.inserted_local = 0
        self.inserted_received = 0

    def __len__(self) -> int:
        return len(self._items)

    def insert(self, experience: Experience, received: bool = False) -> None:
        if len(self._items) < self.capacity:
            self._items.append(experience)
        else:
            self._items[self._next] = experience
            self._next = (self._next + 1) % self.capacity
        if received:
            self.inserted_received += 1
        else:
            self.inserted_local += 1

    def oldest_first(self) -> List[Experience]:
        """Contents ordered oldest to newest (test/debug helper)."""
        return self._items[self._next:] + self._items[:self._next]

    def sample(self, batch_size: int,
               rng: np.random.Generator) -> Optional[List[Experience]]:
        """Uniform without replacement; None while under-filled."""
        if batch_size < 1:
            raise ContractViolation("batch_size must be >= 1")
        if len(self._items) < batch_size:
            return None
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]
