"""Domain-separated SHA-256."""

from __future__ import annotations

import hashlib
from functools import lru_cache

HASH_NAME = "sha256"
DIGEST_SIZE = 32
ZERO_DIGEST = bytes(DIGEST_SIZE)

Digest = bytes


def _tag_bytes(tag: str | bytes) -> bytes:
    t = tag.encode("ascii") if isinstance(tag, str) else bytes(tag)
    if len(t) > 255:
        raise ValueError("domain tag longer than 255 bytes")
    return t


@lru_cache(maxsize=256)
def _prefix(tag: str | bytes) -> bytes:
    t = _tag_bytes(tag)
    return bytes([len(t)]) + t


def hash_digest(tag: str | bytes, payload: bytes) -> Digest:
    """SHA-256 over ``len(tag) || tag || payload``.

    The one-byte tag length makes the (tag, payload) split unambiguous, so
    two distinct tags can never produce the same preimage.
    """
    h = hashlib.sha256(_prefix(tag))
    h.update(payload)
    return h.digest()


def hex_digest(d: Digest) -> str:
    return d.hex()
