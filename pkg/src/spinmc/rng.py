"""Splittable random number streams (splitmix64-seeded xoshiro256**).

Trajectory i draws from an independent stream seeded deterministically from
(base_seed, i), so ensemble results do not depend on how trajectories are
distributed over threads.  This module is the pure-Python reference; the
simulation kernels carry an identical implementation, and the test suite
checks the two bit-for-bit.
"""

from __future__ import annotations

MASK = (1 << 64) - 1
SM_GAMMA = 0x9E3779B97F4A7C15
SM_M1 = 0xBF58476D1CE4E5B9
SM_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * SM_M1) & MASK
    z = ((z ^ (z >> 27)) * SM_M2) & MASK
    return z ^ (z >> 31)


def stream_state(base_seed: int, idx: int) -> list[int]:
    """Initial xoshiro256** state of stream idx under base_seed."""
    s = (base_seed + idx * SM_GAMMA) & MASK
    state = []
    for _ in range(4):
        s = (s + SM_GAMMA) & MASK
        state.append(mix64(s))
    if not any(state):
        state[0] = 1
    return state


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK


class Stream:
    """xoshiro256** generator over one splittable stream."""

    def __init__(self, base_seed: int, idx: int = 0):
        self.state = stream_state(base_seed, idx)

    def next_u64(self) -> int:
        s = self.state
        result = (_rotl((s[1] * 5) & MASK, 7) * 9) & MASK
        t = (s[1] << 17) & MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))
