"""Seed derivation for reproducible, order-independent random substreams.

A substream key is ``(master_seed, tag, *labels)``. It is hashed with
BLAKE2b (8-byte digest, personalisation ``b"mfsobol"``) over the UTF-8
text ``"\\x1f".join(map(str, key))`` to give a 64-bit seed. Per-index
noise seeds are ``splitmix64(base + index)`` with ``base`` the hash of
``(master_seed, tag, "noise", role)``; splitmix64 is a bijection, so seeds
within one role never collide.

Uniform variates are drawn from PCG64 generators as ``(k + 0.5) / 2**52``
with ``k`` a 52-bit integer, so they lie strictly inside (0, 1).
"""

from __future__ import annotations

import hashlib

import numpy as np

_PERSON = b"mfsobol"
_MASK = (1 << 64) - 1


def derive_seed(master_seed: int, *labels) -> int:
    key = "\x1f".join(str(part) for part in (int(master_seed), *labels)).encode()
    digest = hashlib.blake2b(key, digest_size=8, person=_PERSON).digest()
    return int.from_bytes(digest, "little")


def splitmix64(x: np.ndarray) -> np.ndarray:
    z = np.asarray(x, dtype=np.uint64) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def noise_seeds(master_seed: int, tag: str, role: int, n: int) -> np.ndarray:
    """Per-index 64-bit noise seeds for one (tag, role) pair."""
    base = np.uint64(derive_seed(master_seed, tag, "noise", role))
    with np.errstate(over="ignore"):
        return splitmix64(base + np.arange(n, dtype=np.uint64))


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def open_uniforms(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform variates strictly inside (0, 1)."""
    k = rng.integers(0, 1 << 52, size=size, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) * 2.0**-52
