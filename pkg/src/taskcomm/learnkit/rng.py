"""Deterministic seed derivation: every random stream descends from an
explicit 64-bit seed plus a string/int tag path."""

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tag path (ints/strings)."""
    raw = b"\x1f".join(str(p).encode("utf-8") for p in parts)
    return int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "little")


def generator(*parts) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(*parts)))
