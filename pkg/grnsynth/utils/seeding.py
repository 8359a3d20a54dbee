"""
Seed derivation shared by every randomized stage
"""

import hashlib

_SEED_SPACE = 2 ** 32


def derive_seed(*parts):
    """
    Derive a child seed from a parent seed and labels

    The same parts always give the same seed, independent of call order, so
    per-target and per-replicate work can run in any order or in parallel.

    Args:
        *parts: Seed and labels (ints or strings)

    Returns:
        int: Seed in [0, 2**32)
    """
    key = '\x1f'.join(str(p) for p in parts).encode('utf-8')
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, 'big') % _SEED_SPACE
