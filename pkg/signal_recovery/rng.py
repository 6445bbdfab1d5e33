"""Seeded, splittable random streams.

A stream is identified by (master_seed, stream_id, purpose). The generator is
numpy's PCG64 seeded through SeedSequence on that triple, so draws depend only
on the identity of the stream, never on execution order or worker count.
Gaussian draws use Box-Muller on consecutive uniforms.
"""
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import InvalidInputError

_UINT64_LIMIT = 1 << 64


class StreamPurpose(IntEnum):
    DEFAULT = 0
    DICTIONARY = 1
    MEASUREMENT = 2
    REPRESENTATION = 3
    NOISE = 4
    SIGNAL_ATOM = 5


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int = 0
    purpose: int = StreamPurpose.DEFAULT

    def __post_init__(self):
        for name in ("master_seed", "stream_id", "purpose"):
            value = getattr(self, name)
            if not 0 <= int(value) < _UINT64_LIMIT:
                raise InvalidInputError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def derive(self, purpose: StreamPurpose) -> "RngStream":
        return replace(self, purpose=int(purpose))

    def generator(self) -> np.random.Generator:
        seed = np.random.SeedSequence([int(self.master_seed), int(self.stream_id), int(self.purpose)])
        return np.random.Generator(np.random.PCG64(seed))


def standard_normal(generator: np.random.Generator, shape) -> np.ndarray:
    """Box-Muller transform of consecutive uniform pairs (u1 in (0, 1], u2 in [0, 1))."""
    shape = (shape,) if isinstance(shape, (int, np.integer)) else tuple(shape)
    count = int(np.prod(shape, dtype=np.int64))
    pairs = (count + 1) // 2
    uniforms = generator.random(2 * pairs)
    u1 = 1.0 - uniforms[0::2]
    u2 = uniforms[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count].reshape(shape)
