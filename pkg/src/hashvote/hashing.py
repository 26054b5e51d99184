"""Digest helpers shared by partitioning, feature hashing, and seeding.

All digest-to-integer reductions in this package use one rule: interpret the
first 8 bytes of the digest as a big-endian unsigned integer. Keeping the
rule in one place makes the group assignment, the hashed feature indices,
and derived seeds portable and easy to reproduce elsewhere.
"""

from __future__ import annotations

import hashlib

from .errors import ConfigError

DIGEST_ALGORITHMS = ("md5", "sha1", "sha256")


def digest_int(data: bytes, algorithm: str) -> int:
    """First 8 digest bytes of ``data`` as a big-endian unsigned integer."""
    if algorithm not in DIGEST_ALGORITHMS:
        raise ConfigError(f"unknown digest algorithm: {algorithm!r}")
    digest = hashlib.new(algorithm, data).digest()
    return int.from_bytes(digest[:8], "big")


def derive_seed(seed: int, *parts: int | str, algorithm: str = "sha256") -> int:
    """Derive a child seed from a base seed and a sequence of context parts.

    Deterministic, order-sensitive, and collision-resistant enough that
    per-example and per-group child seeds never have to be coordinated.
    """
    payload = "\x1f".join(str(p) for p in (seed, *parts))
    return digest_int(payload.encode("utf-8"), algorithm)
