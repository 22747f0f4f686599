"""Index-addressed random streams.

Particle ``i`` of stream ``s`` always draws the same numbers for a given
seed: the index space is cut into fixed blocks and block ``b`` is generated
from ``SeedSequence(seed, spawn_key=(s, b))``. How the particles are later
partitioned among workers has no effect on what they draw.
"""

from __future__ import annotations

import numpy as np

BLOCK = 1 << 16


class ParticleStream:
    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)

    def _block(self, b: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, b))
        return np.random.Generator(np.random.PCG64(ss))

    def _draw(self, start: int, count: int, kind: str) -> np.ndarray:
        if start < 0 or count < 0:
            raise ValueError("start and count must be non-negative")
        out = np.empty(count)
        stop = start + count
        pos = 0
        b = start // BLOCK
        while pos < count:
            gen = self._block(b)
            block = gen.standard_normal(BLOCK) if kind == "normal" else gen.random(BLOCK)
            lo = max(start, b * BLOCK) - b * BLOCK
            hi = min(stop, (b + 1) * BLOCK) - b * BLOCK
            out[pos:pos + hi - lo] = block[lo:hi]
            pos += hi - lo
            b += 1
        return out

    def normal(self, start: int, count: int) -> np.ndarray:
        """Standard normal deviates for particle indices [start, start+count)."""
        return self._draw(start, count, "normal")

    def uniform(self, start: int, count: int) -> np.ndarray:
        """Uniform deviates on [0, 1) for particle indices [start, start+count)."""
        return self._draw(start, count, "uniform")
