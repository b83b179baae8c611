"""Pinned, portable pseudo-random generator used everywhere reproducibility
is part of a contract (LDA initialization and sweeps, leaf hiding in the
expansion benchmark, toy-data generation).

The generator is xoshiro256** (Blackman & Vigna) seeded through SplitMix64,
implemented on plain Python integers so results are bit-identical across
platforms and re-implementable from this docstring alone:

SplitMix64 (state ``s``, one output per call, all arithmetic mod 2**64)::

    s         = (s + 0x9E3779B97F4A7C15) mod 2**64
    z         = s
    z         = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z         = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    output    = z ^ (z >> 31)

Seeding: the four xoshiro256** state words are the first four SplitMix64
outputs for the 64-bit seed (seed taken mod 2**64).

xoshiro256** next() (state ``s0..s3``, rotl(x, k) a 64-bit left rotation)::

    output = rotl((s1 * 5) mod 2**64, 7) * 9 mod 2**64
    t  = (s1 << 17) mod 2**64
    s2 ^= s0;  s3 ^= s1;  s1 ^= s2;  s0 ^= s3
    s2 ^= t
    s3 = rotl(s3, 45)

Derived draws:

* ``random()``   -> float in [0, 1):  (next() >> 11) * 2**-53
* ``randbelow(n)`` -> uniform int in [0, n): rejection sampling;
  draw u = next() until u < 2**64 - (2**64 mod n), return u mod n.
* ``sample(seq, m)`` -> m items without replacement: partial Fisher-Yates
  over a copy of ``seq``; for i in 0..m-1 swap positions i and
  i + randbelow(len(seq) - i), then return the first m items in swap order.

Reference vectors (assertable by any re-implementation):

* SplitMix64, state 0: first output 0xE220A8397B1DCDAF.
* xoshiro256** with state words set directly to (1, 2, 3, 4): first five
  outputs 11520, 0, 1509978240, 1215971899390074240, 1216172134540287360.
* Seed 42: first three outputs 1546998764402558742, 6990951692964543102,
  12544586762248559009.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, (z ^ (z >> 31)) & _MASK64


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """Deterministic 64-bit generator; see module docstring for the spec."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int):
        state = seed & _MASK64
        state, self._s0 = _splitmix64(state)
        state, self._s1 = _splitmix64(state)
        state, self._s2 = _splitmix64(state)
        state, self._s3 = _splitmix64(state)

    @classmethod
    def from_state(cls, s0: int, s1: int, s2: int, s3: int) -> "Xoshiro256StarStar":
        rng = cls.__new__(cls)
        rng._s0, rng._s1, rng._s2, rng._s3 = s0, s1, s2, s3
        return rng

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randbelow(self, n: int) -> int:
        """Exactly uniform integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow() requires n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        u = self.next_u64()
        while u >= limit:
            u = self.next_u64()
        return u % n

    def sample(self, seq, m: int) -> list:
        """m distinct items from seq, uniformly without replacement.

        Partial Fisher-Yates: deterministic given the seed and the order
        of ``seq``; the result preserves selection order.
        """
        items = list(seq)
        n = len(items)
        if not 0 <= m <= n:
            raise ValueError(f"cannot sample {m} items from {n}")
        for i in range(m):
            j = i + self.randbelow(n - i)
            items[i], items[j] = items[j], items[i]
        return items[:m]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        n = len(items)
        for i in range(n - 1):
            j = i + self.randbelow(n - i)
            items[i], items[j] = items[j], items[i]
