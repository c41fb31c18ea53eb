"""Seeded, stream-addressable random number generation.

Every random draw in the package flows from an :class:`Rng`.  Two ``Rng``
objects with the same ``seed`` and ``stream`` produce identical sequences, and
children derived with :meth:`Rng.child` are statistically independent of their
parent and of each other.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Rng", "derive_seed"]

_MASK64 = (1 << 64) - 1


def derive_seed(*parts: object) -> int:
    """Hash arbitrary parts into a 64-bit seed (stable across processes)."""
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little")


@dataclass
class Rng:
    seed: int
    stream: tuple[int, ...] = ()
    _gen: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.seed = int(self.seed) & _MASK64
        if isinstance(self.stream, int):
            self.stream = (self.stream,)
        self.stream = tuple(int(s) for s in self.stream)

    @property
    def stream_id(self) -> int:
        return self.stream[-1] if self.stream else 0

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
            self._gen = np.random.default_rng(ss)
        return self._gen

    def child(self, stream_id: int) -> "Rng":
        return Rng(self.seed, self.stream + (int(stream_id),))

    def children(self, count: int) -> list["Rng"]:
        return [self.child(i) for i in range(count)]

    def integer_seed(self) -> int:
        """Draw a fresh 64-bit seed from this stream."""
        return int(self.gen.integers(0, 2**63 - 1))

    # thin conveniences used throughout the package
    def random(self, size=None):
        return self.gen.random(size)

    def normal(self, size=None):
        return self.gen.standard_normal(size)

    def complex_normal(self, size) -> np.ndarray:
        """Standard complex Gaussian entries, E|z|^2 = 1."""
        g = self.gen.standard_normal((2,) + tuple(np.atleast_1d(size)))
        return (g[0] + 1j * g[1]) / np.sqrt(2.0)

    def bits(self, n: int) -> str:
        return "".join("1" if b else "0" for b in self.gen.integers(0, 2, size=n))
