"""Named, splittable random streams.

A stream is identified by a 64-bit seed and a path of labels.  It maps to a
Philox4x64 counter-based generator whose 128-bit key is

    key[0] = seed mod 2**64
    key[1] = first 8 bytes (little endian) of BLAKE2b("/".join(path))

with the counter starting at zero.  Both the key schedule and Philox are
fixed, so every draw replays bit-for-bit on any platform.  Children never
share a key with their parent or with each other, which is what makes
streams safe to fan out over workers.
"""

from dataclasses import dataclass
import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def _label_key(path):
    text = "/".join(str(p) for p in path).encode("utf-8")
    digest = hashlib.blake2b(text, digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class Stream:
    seed: int
    path: tuple = ()

    def child(self, *labels):
        return Stream(self.seed, self.path + tuple(str(x) for x in labels))

    @property
    def key(self):
        return (self.seed & MASK64, _label_key(self.path))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=np.array(self.key, dtype=np.uint64)))


def stream(seed, *labels) -> np.random.Generator:
    """Shorthand for ``Stream(seed).child(*labels).generator()``."""
    return Stream(int(seed)).child(*labels).generator()
