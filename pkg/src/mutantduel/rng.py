"""Deterministic 64-bit PRNG used for everything that ends up in a replay.

The world state embeds the generator state as a plain integer so that traces,
state hashes and store records stay platform-independent and byte-stable.
splitmix64 is small, well studied and has no bad seeds (0 included).
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class DetRng:
    """splitmix64 stream; `state` is the full serialisable state."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        return _mix(self.state)

    def randrange(self, n: int) -> int:
        """Uniform-ish integer in [0, n). Modulo bias is irrelevant here; what
        matters is that the draw is a pure function of the state."""
        if n <= 0:
            raise ValueError("randrange needs n > 0")
        return self.next_u64() % n

    def shuffled(self, items: list) -> list:
        """Fisher-Yates over a copy. Deterministic given the current state."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.randrange(i + 1)
            out[i], out[j] = out[j], out[i]
        return out


def derive_seed(base: int, *parts: int | str) -> int:
    """Stable sub-seed derivation: fold parts into the base via splitmix.

    String parts (stream labels like "round-mutants") are folded through a
    fixed 64-bit digest first so the result stays platform-independent.
    """
    import hashlib

    z = base & _MASK
    for p in parts:
        if isinstance(p, str):
            p = int.from_bytes(
                hashlib.blake2b(p.encode(), digest_size=8).digest(), "big")
        z = _mix((z + _GAMMA * 3 + p) & _MASK)
    return z
