"""Deterministic Schnorr-type signatures (Ed25519).

Keys are derived from a seed so simulations can regenerate every node and
user identity from the scenario seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .hashing import hash_digest

SIGNATURE_SCHEME = "ed25519"
VERIFY_KEY_SIZE = 32
SIGNATURE_SIZE = 64


@dataclass(frozen=True)
class KeyPair:
    signing_key: bytes
    verify_key: bytes

    def __repr__(self) -> str:
        return f"KeyPair(verify_key={self.verify_key.hex()[:16]}...)"


def keygen(seed: bytes) -> KeyPair:
    sk = hash_digest("keygen", seed)
    priv = Ed25519PrivateKey.from_private_bytes(sk)
    vk = priv.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    return KeyPair(sk, vk)


@lru_cache(maxsize=4096)
def _private(sk: bytes) -> Ed25519PrivateKey:
    return Ed25519PrivateKey.from_private_bytes(sk)


def sign(signing_key: bytes | KeyPair, message: bytes) -> bytes:
    if isinstance(signing_key, KeyPair):
        signing_key = signing_key.signing_key
    return _private(signing_key).sign(message)


@lru_cache(maxsize=4096)
def _public(vk: bytes) -> Ed25519PublicKey:
    return Ed25519PublicKey.from_public_bytes(vk)


@lru_cache(maxsize=1 << 18)
def _verify_cached(vk: bytes, message: bytes, sig: bytes) -> bool:
    try:
        _public(vk).verify(sig, message)
    except (InvalidSignature, ValueError):
        return False
    return True


def verify(verify_key: bytes, message: bytes, signature: bytes) -> bool:
    """True iff ``signature`` is valid for ``message`` under ``verify_key``.

    Malformed keys or signatures yield False. Results are memoised; the
    function is pure so the cache is invisible to callers.
    """
    if not isinstance(verify_key, bytes) or len(verify_key) != VERIFY_KEY_SIZE:
        return False
    if not isinstance(signature, bytes) or len(signature) != SIGNATURE_SIZE:
        return False
    if not isinstance(message, bytes):
        return False
    return _verify_cached(verify_key, message, signature)
