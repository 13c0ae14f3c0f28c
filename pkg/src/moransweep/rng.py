"""Deterministic random streams for reproducible trials.

Each trial owns an explicit xoshiro256++ state derived from
``(master_seed, stream)`` by splitmix64 hashing, so outcomes depend only
on the seed pair and never on thread scheduling or global RNG state.
"""

from __future__ import annotations

import numpy as np

from . import _kernels

_U64_MASK = 0xFFFFFFFFFFFFFFFF


def as_seed(value: int) -> np.uint64:
    """Normalize a Python integer to an unsigned 64-bit seed word."""
    return np.uint64(int(value) & _U64_MASK)


def derive_stream_seed(master_seed: int, stream: int) -> int:
    """A 64-bit seed for sub-stream `stream`, stable across platforms."""
    state = _kernels.seed_state(as_seed(master_seed), as_seed(stream))
    return int(_kernels.next_u64(state))


class TrialRng:
    """Single-consumer random stream with explicit state.

    The state array can be handed directly to the compiled kernels, which
    advance it in place; interleaving kernel calls and the methods below
    keeps one well-defined stream.
    """

    def __init__(self, master_seed: int, stream: int = 0):
        self.master_seed = int(master_seed)
        self.stream = int(stream)
        self.state = _kernels.seed_state(as_seed(master_seed), as_seed(stream))

    def uniform(self) -> float:
        """Uniform draw in [0, 1)."""
        return float(_kernels.next_uniform(self.state))

    def exponential(self) -> float:
        """Unit-mean exponential draw (inverse CDF)."""
        return float(_kernels.next_exponential(self.state))

    def next_seed(self) -> int:
        """Consume one word and return it as a fresh 64-bit seed."""
        return int(_kernels.next_u64(self.state))

    def spawn(self, stream: int) -> "TrialRng":
        """Independent child stream; does not consume from this one."""
        return TrialRng(derive_stream_seed(self.master_seed, self.stream),
                        stream)

    def __repr__(self) -> str:
        return f"TrialRng(master_seed={self.master_seed}, stream={self.stream})"
